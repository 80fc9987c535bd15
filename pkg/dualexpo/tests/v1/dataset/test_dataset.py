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

import json
import os

import mock

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging
from dualexpo.tests import base
from dualexpo.tests.v1 import utils
from dualexpo.v1 import dataset


class TestValidateDataset(base.TestCommand):

    def setUp(self):
        super(TestValidateDataset, self).setUp()
        self.root = utils.write_dataset(self.temp_dir())
        self.cmd = dataset.ValidateDataset(self.app, None)

    @mock.patch('sys.stdout')
    def test_valid(self, stdout):
        parsed_args = self.check_parser(self.cmd, ['--dataset', self.root],
                                        [('dataset', self.root)])
        self.cmd.take_action(parsed_args)
        self.assertEqual(0, self.cmd.error_count)

    @mock.patch('sys.stdout')
    def test_errors_are_counted(self, stdout):
        os.remove(os.path.join(self.root, 'well', '0000.png'))
        os.remove(os.path.join(self.root, 'fast', '0001.png'))
        parsed_args = self.check_parser(self.cmd, ['--dataset', self.root],
                                        [])
        self.assertRaises(exceptions.DatasetError, self.cmd.take_action,
                          parsed_args)
        self.assertEqual(2, self.cmd.error_count)


class TestExtractViews(base.TestCommand):

    def setUp(self):
        super(TestExtractViews, self).setUp()
        self.tmp = self.temp_dir()
        self.root = utils.write_dataset(self.tmp)
        self.out = os.path.join(self.tmp, 'views')
        self.cmd = dataset.ExtractViews(self.app, None)

    def test_parser(self):
        arglist = ['--dataset', self.root, '--out', self.out,
                   '--view', '0,0', '--view', '90,-10', '--camera', 'well']
        self.check_parser(self.cmd, arglist, [
            ('layout', [[0.0, 0.0], [90.0, -10.0]]),
            ('cameras', ['well']),
            ('size', constants.VIEW_SIZE),
        ])

    def test_parse_view(self):
        self.assertEqual([10.0, 5.0], dataset._parse_view('10,5'))
        self.assertRaises(exceptions.InvalidConfiguration,
                          dataset._parse_view, '10')

    @mock.patch('sys.stdout')
    def test_writes_views(self, stdout):
        arglist = ['--dataset', self.root, '--out', self.out,
                   '--view', '0,0', '--view', '90,0', '--camera', 'well',
                   '--size', '4']
        parsed_args = self.check_parser(self.cmd, arglist, [])
        self.cmd.take_action(parsed_args)
        with open(os.path.join(self.out, 'views.json')) as f:
            entries = json.load(f)['views']
        self.assertEqual(['0000-0', '0000-1', '0001-0', '0001-1'],
                         [e['id'] for e in entries])
        self.assertEqual(set(['well']), set(e['camera'] for e in entries))
        img = imaging.read_image(os.path.join(self.out, 'well',
                                              '0001-1.png'))
        self.assertEqual((4, 4), img.shape)
        self.assertFalse(os.path.exists(os.path.join(self.out, 'fast')))

    @mock.patch('sys.stdout')
    def test_default_layout(self, stdout):
        arglist = ['--dataset', self.root, '--out', self.out, '--size', '2']
        parsed_args = self.check_parser(self.cmd, arglist, [])
        self.cmd.take_action(parsed_args)
        with open(os.path.join(self.out, 'views.json')) as f:
            entries = json.load(f)['views']
        # eight views per panorama, two frames, two cameras
        self.assertEqual(32, len(entries))
