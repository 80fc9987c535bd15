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

import csv
import os

import mock

from dualexpo import config
from dualexpo import constants
from dualexpo import dataset
from dualexpo import exceptions
from dualexpo import trainer
from dualexpo import utils as dualexpo_utils
from dualexpo.tests import base
from dualexpo.tests.v1 import utils
from dualexpo.v1 import train


class TestTrain(base.TestCommand):

    def setUp(self):
        super(TestTrain, self).setUp()
        self.tmp = self.temp_dir()
        self.root = utils.write_dataset(self.tmp)
        self.run_file = utils.write_run_file(self.tmp, self.root)
        self.out = os.path.join(self.tmp, 'run')
        self.cmd = train.Train(self.app, None)

    def _log_rows(self, out_dir):
        with open(os.path.join(out_dir, constants.TRAIN_LOG_NAME)) as f:
            return list(csv.reader(f))[1:]

    def test_parser(self):
        self.check_parser(self.cmd, ['--config', self.run_file,
                                     '--mode', 'one_step', '--until', '4'],
                          [('mode', 'one_step'), ('until', 4),
                           ('resume', None)])

    @mock.patch('sys.stdout')
    def test_train(self, stdout):
        parsed_args = self.check_parser(self.cmd, ['--config', self.run_file],
                                        [])
        self.cmd.take_action(parsed_args)
        # the run file's relative output resolves next to it
        self.assertTrue(os.path.isfile(os.path.join(
            self.out, constants.CHECKPOINT_NAME)))
        self.assertEqual(6, len(self._log_rows(self.out)))
        run = config.load_run_config(os.path.join(
            self.out, constants.RUN_CONFIG_NAME))
        self.assertEqual(dataset.load_dataset(self.root).bounds,
                         run.field.to_dict()['bounds'])

    @mock.patch('sys.stdout')
    def test_until_and_resume(self, stdout):
        out = os.path.join(self.tmp, 'other')
        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file, '--out', out,
                       '--until', '2'], [])
        self.cmd.take_action(parsed_args)
        checkpoint = os.path.join(out, constants.CHECKPOINT_NAME)
        self.assertEqual(2, trainer.checkpoint_load(checkpoint)['iteration'])

        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file, '--out', out,
                       '--resume', checkpoint], [])
        self.cmd.take_action(parsed_args)
        self.assertEqual(6, trainer.checkpoint_load(checkpoint)['iteration'])
        self.assertEqual([str(i) for i in range(6)],
                         [row[0] for row in self._log_rows(out)])

    def test_mode_override(self):
        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file, '--mode', 'one_step'], [])
        run = self.cmd._resolve(parsed_args)
        self.assertEqual(constants.MODE_ONE_STEP, run.train.mode)

    def test_missing_dataset(self):
        dualexpo_utils.dump_yaml(self.run_file, {'output': 'run'})
        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file], [])
        self.assertRaises(exceptions.InvalidConfiguration,
                          self.cmd.take_action, parsed_args)

    def test_global_seed_fills_missing_seed(self):
        data = dualexpo_utils.load_yaml(self.run_file)
        del data['train']['seed']
        dualexpo_utils.dump_yaml(self.run_file, data)
        self.app.options.seed = 7
        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file], [])
        self.assertEqual(7, self.cmd._resolve(parsed_args).train.seed)

    def test_configured_seed_wins(self):
        self.app.options.seed = 7
        parsed_args = self.check_parser(
            self.cmd, ['--config', self.run_file], [])
        self.assertEqual(0, self.cmd._resolve(parsed_args).train.seed)
