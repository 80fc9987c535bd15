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

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
import numpy as np

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging
from dualexpo import metrics
from dualexpo.tests import base


def _hdr(seed=0, shape=(16, 16), high=2.0):
    rng = np.random.default_rng(seed)
    return imaging.ImageBuffer(rng.uniform(0.01, high, shape + (3,)),
                               imaging.HDR)


class TestLdrMetrics(base.TestCase):

    def test_psnr(self):
        a = np.zeros((4, 4, 3))
        self.assertAlmostEqual(20.0, metrics.psnr(a, a + 0.1))
        self.assertEqual(constants.PSNR_CAP, metrics.psnr(a, a))

    def test_psnr_mask(self):
        a = np.zeros((2, 2, 3))
        b = a.copy()
        b[0, 0] = 1.0
        mask = np.ones((2, 2), dtype=bool)
        mask[0, 0] = False
        self.assertEqual(constants.PSNR_CAP, metrics.psnr(a, b, mask=mask))
        self.assertRaises(exceptions.MetricError, metrics.psnr, a, b,
                          mask=np.zeros((2, 2), dtype=bool))

    def test_shape_mismatch(self):
        self.assertRaises(exceptions.DimensionMismatch, metrics.psnr,
                          np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))

    def test_ssim_identical(self):
        a = _hdr(high=1.0).data
        self.assertAlmostEqual(1.0, metrics.ssim(a, a), delta=1e-9)

    def test_ssim_drops_with_noise(self):
        a = _hdr(high=1.0).data
        noise = np.random.default_rng(5).normal(0, 0.2, a.shape)
        self.assertLess(metrics.ssim(a, np.clip(a + noise, 0, 1)), 0.9)

    def test_ssim_needs_a_window(self):
        a = np.zeros((8, 8, 3))
        self.assertRaises(exceptions.MetricError, metrics.ssim, a, a)


class TestPU(base.TestCase):

    def setUp(self):
        super(TestPU, self).setUp()
        self.encoder = metrics.default_encoder()

    def test_reference_values(self):
        self.assertAlmostEqual(0.0, float(self.encoder.encode(0.005)),
                               delta=0.5)
        self.assertAlmostEqual(256.0, float(self.encoder.encode(100.0)),
                               delta=1.0)
        self.assertAlmostEqual(595.0, float(self.encoder.encode(1e4)),
                               delta=2.0)

    def test_clamped(self):
        self.assertEqual(float(self.encoder.encode(0.005)),
                         float(self.encoder.encode(0.0)))
        self.assertEqual(self.encoder.peak,
                         float(self.encoder.encode(1e6)))

    @settings(max_examples=50)
    @given(st.floats(0.005, 1e4), st.floats(1.01, 10.0))
    def test_monotonic(self, luminance, factor):
        lo = float(self.encoder.encode(luminance))
        hi = float(self.encoder.encode(min(luminance * factor, 1e4)))
        self.assertLessEqual(lo, hi)

    def test_returns_arrays(self):
        encoded = metrics.pu_encode(np.ones((2, 2, 3)), 100.0)
        self.assertEqual((2, 2, 3), encoded.shape)

    def test_bad_table(self):
        self.assertRaises(exceptions.InvalidConfiguration,
                          metrics.PUEncoder.from_table, fit='nope')
        self.assertRaises(exceptions.InvalidConfiguration,
                          metrics.PUEncoder, [1, 2], 0.005, 1e4)

    def test_luminance_scale(self):
        img = np.full((2, 2, 3), 4.0)
        self.assertAlmostEqual(25.0, metrics.luminance_scale(img))
        self.assertEqual(1.0, metrics.luminance_scale(np.zeros((2, 2, 3))))

    def test_pu_psnr_identical(self):
        img = _hdr()
        self.assertEqual(constants.PSNR_CAP, metrics.pu_psnr(img, img))
        self.assertAlmostEqual(1.0, metrics.pu_ssim(img, img), delta=1e-9)


class TestHdrMetrics(base.TestCase):

    def test_rmse(self):
        a = np.zeros((2, 2, 3))
        self.assertAlmostEqual(0.5, metrics.rmse(a, a + 0.5))

    def test_si_rmse_ignores_scale(self):
        b = _hdr().data
        self.assertAlmostEqual(0.0, metrics.si_rmse(3.0 * b, b), delta=1e-12)
        self.assertGreater(metrics.rmse(3.0 * b, b), 1.0)

    def test_si_rmse_never_scales_negative(self):
        b = _hdr().data
        self.assertAlmostEqual(metrics.rmse(np.zeros_like(b), b),
                               metrics.si_rmse(-b, b))

    def test_rgb_angular(self):
        b = _hdr().data
        self.assertAlmostEqual(0.0, metrics.rgb_angular(2.0 * b, b),
                               delta=1e-6)
        red = np.tile([1.0, 0.0, 0.0], (1, 1, 1))
        green = np.tile([0.0, 1.0, 0.0], (1, 1, 1))
        self.assertAlmostEqual(90.0, metrics.rgb_angular(red, green))

    def test_rgb_angular_skips_black(self):
        a = np.zeros((2, 2, 3))
        self.assertEqual(0.0, metrics.rgb_angular(a, a))


class TestMetricReport(base.TestCase):

    def test_rows_and_absent(self):
        report = metrics.MetricReport()
        report.add(constants.GROUP_LDR_PANO, 'psnr', 30)
        rows = report.rows()
        self.assertEqual((constants.GROUP_LDR_PANO, 'psnr', 30.0), rows[0])
        self.assertEqual((constants.GROUP_LDR_PANO, 'lpips', None), rows[-1])
        self.assertIn('absent', report.to_table())
        data = json.loads(report.to_json())
        self.assertEqual(['lpips'], data['absent'][constants.GROUP_LDR_PANO])

    def test_rejects_non_finite(self):
        report = metrics.MetricReport()
        self.assertRaises(exceptions.MetricError, report.add, 'ldr_pano',
                          'psnr', float('nan'))


class TestEvaluate(base.TestCase):

    def test_identical_images(self):
        img = _hdr()
        report = metrics.evaluate(img, img, imaging.CRF())
        values = report.groups
        self.assertEqual(constants.PSNR_CAP,
                         values[constants.GROUP_LDR_PANO]['psnr'])
        self.assertAlmostEqual(1.0, values[constants.GROUP_LDR_PANO]['ssim'],
                               delta=1e-9)
        hdr = values[constants.GROUP_HDR_PANO]
        self.assertEqual(list(constants.METRIC_GROUPS[
            constants.GROUP_HDR_PANO]), list(hdr))
        self.assertEqual(0.0, hdr['rmse'])
        self.assertAlmostEqual(0.0, hdr['rgb_angular'], delta=1e-6)
        self.assertEqual(1.0, report.metadata['exposure'])

    def test_render_groups_need_renders(self):
        img = _hdr()
        self.assertRaises(exceptions.InvalidConfiguration, metrics.evaluate,
                          img, img, imaging.CRF(),
                          groups=[constants.GROUP_HDR_RENDER])
        report = metrics.evaluate(
            img, img, imaging.CRF(),
            groups=[constants.GROUP_HDR_RENDER, constants.GROUP_LDR_RENDER],
            renders=(_hdr(1), _hdr(1)))
        self.assertEqual(0.0, report.groups[
            constants.GROUP_HDR_RENDER]['si_rmse'])

    def test_unknown_group(self):
        img = _hdr()
        self.assertRaises(exceptions.InvalidConfiguration, metrics.evaluate,
                          img, img, imaging.CRF(), groups=['lpips'])

    def test_mask(self):
        pred, gt = _hdr(0), _hdr(0)
        pred.data[0, 0] = 50.0
        mask = np.ones((16, 16), dtype=bool)
        mask[0, 0] = False
        report = metrics.evaluate(pred, gt, imaging.CRF(), mask=mask,
                                  groups=[constants.GROUP_HDR_PANO])
        self.assertEqual(0.0, report.groups[constants.GROUP_HDR_PANO]['rmse'])
        self.assertTrue(report.metadata['masked'])
