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

import os

import mock

from dualexpo import exceptions
from dualexpo.tests import base
from dualexpo import utils


class TestEnv(base.TestCase):

    @mock.patch.dict(os.environ, {'B': 'two'}, clear=True)
    def test_first_set_variable_wins(self):
        self.assertEqual('two', utils.env('A', 'B'))

    @mock.patch.dict(os.environ, {}, clear=True)
    def test_default(self):
        self.assertEqual('3', utils.env('A', default='3'))
        self.assertEqual('', utils.env('A'))


class TestFiles(base.TestCase):

    def setUp(self):
        super(TestFiles, self).setUp()
        self.tmp = self.temp_dir()

    def test_yaml_round_trip(self):
        path = os.path.join(self.tmp, 'a.yaml')
        utils.dump_yaml(path, {'b': [1, 2], 'a': 'x'})
        self.assertEqual({'b': [1, 2], 'a': 'x'}, utils.load_yaml(path))

    def test_empty_yaml_is_empty_dict(self):
        path = os.path.join(self.tmp, 'empty.yaml')
        open(path, 'w').close()
        self.assertEqual({}, utils.load_yaml(path))

    def test_missing_yaml(self):
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.load_yaml, os.path.join(self.tmp, 'nope'))

    def test_malformed_yaml(self):
        path = os.path.join(self.tmp, 'bad.yaml')
        with open(path, 'w') as f:
            f.write('a: [1, 2\n')
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.load_yaml, path)

    def test_malformed_json(self):
        path = os.path.join(self.tmp, 'bad.json')
        with open(path, 'w') as f:
            f.write('{"a": ')
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.load_json, path)

    def test_json_round_trip(self):
        path = utils.write_json(os.path.join(self.tmp, 'a.json'),
                                {'q': [1.0, 0.0]})
        self.assertEqual({'q': [1.0, 0.0]}, utils.load_json(path))

    def test_ensure_directory(self):
        path = os.path.join(self.tmp, 'a', 'b')
        utils.ensure_directory(path)
        utils.ensure_directory(path)
        self.assertTrue(os.path.isdir(path))


class TestHelpers(base.TestCase):

    def test_all_unique(self):
        self.assertTrue(utils.all_unique(['a', 'b']))
        self.assertFalse(utils.all_unique(['a', 'a']))

    def test_seeded_rng_streams(self):
        a = utils.seeded_rng(7, 3).random(4)
        b = utils.seeded_rng(7, 3).random(4)
        c = utils.seeded_rng(7, 4).random(4)
        self.assertArrayAlmostEqual(a, b, atol=0)
        self.assertFalse((a == c).all())

    def test_parse_float_list(self):
        self.assertEqual([1.0, -2.5], utils.parse_float_list('1,-2.5', 2))

    def test_parse_float_list_wrong_count(self):
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.parse_float_list, '1,2,3', 2)

    def test_parse_float_list_garbage(self):
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.parse_float_list, '1,x', 2)
        self.assertRaises(exceptions.InvalidConfiguration,
                          utils.parse_float_list, '1,nan', 2)

    def test_chunks(self):
        self.assertEqual([slice(0, 4), slice(4, 8), slice(8, 10)],
                         list(utils.chunks(10, 4)))
        self.assertEqual([], list(utils.chunks(0, 4)))
