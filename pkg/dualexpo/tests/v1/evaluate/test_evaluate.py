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

import numpy as np

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging
from dualexpo.tests import base
from dualexpo.tests.v1 import utils
from dualexpo.v1 import evaluate


class TestParseGroups(base.TestCase):

    def test_expands_shortcuts(self):
        self.assertEqual([constants.GROUP_LDR_PANO,
                          constants.GROUP_HDR_RENDER,
                          constants.GROUP_LDR_RENDER],
                         evaluate.parse_groups('ldr, render'))

    def test_deduplicates(self):
        self.assertEqual([constants.GROUP_HDR_PANO],
                         evaluate.parse_groups('hdr,hdr_pano'))

    def test_unknown(self):
        self.assertRaises(exceptions.InvalidConfiguration,
                          evaluate.parse_groups, 'ldr,lpips')


class TestEvaluate(base.TestCommand):

    def setUp(self):
        super(TestEvaluate, self).setUp()
        self.tmp = self.temp_dir()
        self.gt = utils.write_hdr(os.path.join(self.tmp, 'gt.pfm'))
        self.cmd = evaluate.Evaluate(self.app, None)

    def _run(self, *extra):
        arglist = ['--pred', self.gt, '--gt', self.gt] + list(extra)
        parsed_args = self.check_parser(self.cmd, arglist, [])
        columns, data = self.cmd.take_action(parsed_args)
        return dict(zip(columns, data))

    def test_default_groups(self):
        parsed_args = self.check_parser(
            self.cmd, ['--pred', self.gt, '--gt', self.gt],
            [('groups', [constants.GROUP_LDR_PANO,
                         constants.GROUP_HDR_PANO]),
             ('render_env', False)])
        columns, data = self.cmd.take_action(parsed_args)
        values = dict(zip(columns, data))
        self.assertEqual(constants.PSNR_CAP, values['ldr_pano.psnr'])
        self.assertEqual(0.0, values['hdr_pano.rmse'])
        self.assertNotIn('ldr_pano.lpips', values)
        self.assertNotIn('hdr_render.rmse', values)

    def test_render_groups(self):
        values = self._run('--groups', 'hdr', '--render-env',
                           '--render-size', '4')
        self.assertEqual(0.0, values['hdr_render.rmse'])
        self.assertEqual(constants.PSNR_CAP, values['ldr_render.psnr'])
        self.assertNotIn('ldr_pano.psnr', values)

    def test_mask_and_json(self):
        pred = imaging.read_image(self.gt)
        pred.data[0, 0] = 100.0
        pred_path = os.path.join(self.tmp, 'pred.pfm')
        imaging.write_image(pred_path, pred)
        mask = np.ones(pred.shape, dtype=bool)
        mask[0, 0] = False
        mask_path = imaging.write_mask(os.path.join(self.tmp, 'valid.png'),
                                       mask)
        out = os.path.join(self.tmp, 'report.json')
        parsed_args = self.check_parser(
            self.cmd, ['--pred', pred_path, '--gt', self.gt, '--groups',
                       'hdr', '--mask', mask_path, '--out', out], [])
        columns, data = self.cmd.take_action(parsed_args)
        self.assertEqual(0.0, dict(zip(columns, data))['hdr_pano.rmse'])
        with open(out) as f:
            report = json.load(f)
        self.assertTrue(report['metadata']['masked'])
        self.assertEqual(['hdr_vdp3'],
                         report['absent'][constants.GROUP_HDR_PANO])

    def test_size_mismatch(self):
        small = utils.write_hdr(os.path.join(self.tmp, 'small.pfm'),
                                height=12)
        parsed_args = self.check_parser(
            self.cmd, ['--pred', small, '--gt', self.gt], [])
        self.assertRaises(exceptions.DimensionMismatch,
                          self.cmd.take_action, parsed_args)
