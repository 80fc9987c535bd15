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

import io
import os

from dualexpo import exceptions
from dualexpo import utils
from dualexpo.tests import base
from dualexpo.v1 import crf


class TestReadPairs(base.TestCase):

    def test_header_and_comments(self):
        text = u"reflectance,observed\n# patch 1\n0.2,0.5\n0.4,0.66\n"
        self.assertEqual([(0.2, 0.5), (0.4, 0.66)],
                         crf._read_pairs(io.StringIO(text)))

    def test_malformed_row(self):
        text = u"0.2,0.5\n0.4\n"
        self.assertRaises(exceptions.InvalidConfiguration, crf._read_pairs,
                          io.StringIO(text))

    def test_malformed_first_row(self):
        for text in (u"0.2\n0.4,0.66\n", u"0.2,x\n0.4,0.66\n",
                     u"junk\n0.4,0.66\n"):
            e = self.assertRaises(exceptions.InvalidConfiguration,
                                  crf._read_pairs, io.StringIO(text))
            self.assertIn('line 1', str(e))

    def test_second_header_is_malformed(self):
        text = (u"reflectance,observed\n# note\n"
                u"reflectance,observed\n0.2,0.5\n")
        e = self.assertRaises(exceptions.InvalidConfiguration,
                              crf._read_pairs, io.StringIO(text))
        self.assertIn('line 3', str(e))


class TestCalibrateCrf(base.TestCommand):

    def setUp(self):
        super(TestCalibrateCrf, self).setUp()
        self.tmp = self.temp_dir()
        self.pairs = os.path.join(self.tmp, 'checker.csv')
        self.out = os.path.join(self.tmp, 'crf.json')
        self.cmd = crf.CalibrateCrf(self.app, None)

    def _write(self, rows):
        with open(self.pairs, 'w') as f:
            f.write('reflectance,observed\n')
            for p, z in rows:
                f.write('%r,%r\n' % (p, z))

    def test_fit(self):
        self._write([(p, p ** (1 / 2.2)) for p in (0.05, 0.2, 0.4, 0.6,
                                                   0.9)])
        parsed_args = self.check_parser(
            self.cmd, ['--pairs', self.pairs, '--out', self.out],
            [('pairs', self.pairs), ('out', self.out)])
        columns, data = self.cmd.take_action(parsed_args)
        self.assertEqual(('gamma', 'pairs'), columns)
        self.assertAlmostEqual(2.2, data[0], delta=1e-4)
        self.assertEqual(5, data[1])
        self.assertAlmostEqual(2.2, utils.load_json(self.out)['gamma'],
                               delta=1e-4)

    def test_too_few_pairs(self):
        self._write([(0.2, 0.5), (0.4, 0.6)])
        parsed_args = self.check_parser(
            self.cmd, ['--pairs', self.pairs, '--out', self.out], [])
        self.assertRaises(exceptions.EmptyInput, self.cmd.take_action,
                          parsed_args)
        self.assertFalse(os.path.exists(self.out))
