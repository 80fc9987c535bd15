#   Licensed under the Apache License, Version 2.0 (the "License"); you may
#   not use this file except in compliance with the License. You may obtain
#   a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#   WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#   License for the specific language governing permissions and limitations
#   under the License.
#

"""Command-line entry point"""

import logging
import sys

from cliff import app
from cliff import commandmanager
import torch

import dualexpo
from dualexpo import utils


LOG = logging.getLogger(__name__)

COMMAND_NAMESPACE = 'dualexpo.v1'
DEFAULT_SEED = '0'
DEFAULT_THREADS = '1'


class DualExpoApp(app.App):

    def __init__(self):
        super(DualExpoApp, self).__init__(
            description='Dual exposure HDR radiance field toolkit',
            version=dualexpo.__version__,
            command_manager=commandmanager.CommandManager(
                COMMAND_NAMESPACE, convert_underscores=False),
            deferred_help=True)

    def build_option_parser(self, description, version,
                            argparse_kwargs=None):
        """Add the global options shared by every command."""
        parser = super(DualExpoApp, self).build_option_parser(
            description, version, argparse_kwargs)
        parser.add_argument(
            '--seed',
            metavar='<seed>',
            type=int,
            default=int(utils.env('DUALEXPO_SEED', default=DEFAULT_SEED)),
            help='Seed of synthetic scenes and of training runs whose '
                 'configuration sets no seed, default=' + DEFAULT_SEED +
                 ' (Env: DUALEXPO_SEED)')
        parser.add_argument(
            '--threads',
            metavar='<threads>',
            type=int,
            default=int(utils.env('DUALEXPO_THREADS',
                                  default=DEFAULT_THREADS)),
            help='Number of compute threads, default=' + DEFAULT_THREADS +
                 ' (Env: DUALEXPO_THREADS)')
        return parser

    def initialize_app(self, argv):
        LOG.debug("initialize_app(%s)", argv)
        if self.options.threads < 1:
            raise ValueError("--threads must be at least 1")
        torch.set_num_threads(self.options.threads)


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    return DualExpoApp().run(argv)


if __name__ == '__main__':
    sys.exit(main())
