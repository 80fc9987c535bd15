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

import logging
import os

from cliff import command

from dualexpo import config
from dualexpo import constants
from dualexpo import dataset
from dualexpo import exceptions
from dualexpo import trainer
from dualexpo import utils


class Train(command.Command):
    """Train a dual exposure radiance field on a dataset"""

    log = logging.getLogger(__name__ + ".Train")

    def get_parser(self, prog_name):
        parser = super(Train, self).get_parser(prog_name)
        parser.add_argument('--config', required=True,
                            help="Run configuration file (YAML).")
        parser.add_argument('--out',
                            help="Run output directory, overrides the "
                                 "configuration.")
        parser.add_argument('--mode', choices=constants.TRAIN_MODES,
                            help="Training mode, overrides the "
                                 "configuration.")
        parser.add_argument('--resume', metavar='<checkpoint>',
                            help="Continue training from a checkpoint.")
        parser.add_argument('--until', type=int, metavar='<iteration>',
                            help="Stop after this many iterations.")
        return parser

    def _resolve(self, parsed_args):
        run = config.load_run_config(parsed_args.config,
                                     self.app.options.seed)
        if parsed_args.out:
            run.output = parsed_args.out
        if parsed_args.mode:
            settings = run.train.to_dict()
            settings['mode'] = parsed_args.mode
            run.train = trainer.TrainConfig.from_dict(settings)
        if run.layout is not None:
            settings = run.train.to_dict()
            settings['view_layout'] = run.layout
            run.train = trainer.TrainConfig.from_dict(settings)
        if not run.dataset:
            raise exceptions.InvalidConfiguration(
                "%s: no dataset given" % parsed_args.config)
        if not run.output:
            raise exceptions.InvalidConfiguration(
                "No output directory, use --out or set 'output'")
        return run

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        run = self._resolve(parsed_args)
        data = dataset.load_dataset(run.dataset)
        if run.field.bounds != data.bounds:
            self.log.info("Using the dataset bounds %s", data.bounds)
            settings = run.field.to_dict()
            settings['bounds'] = data.bounds
            run.field = run.field.from_dict(settings)
        utils.ensure_directory(run.output)
        config.save_run_config(
            os.path.join(run.output, constants.RUN_CONFIG_NAME), run)

        if parsed_args.resume:
            runner = trainer.Trainer.resume(parsed_args.resume, data,
                                            run.output, run.train)
        else:
            runner = trainer.Trainer(data, run.field, run.train, run.output)
        runner.run(parsed_args.until)
        print("Trained %d iterations, checkpoint in %s"
              % (runner.iteration, run.output))
