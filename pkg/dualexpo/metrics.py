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

"""Image quality metrics for LDR and HDR panoramas and renders"""

import collections
import json
import logging
import math

import numpy as np
from scipy import ndimage

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging
from dualexpo import utils


LOG = logging.getLogger(__name__)


def _pixels(img):
    if isinstance(img, imaging.ImageBuffer):
        return img.data, img.mask
    data = np.asarray(img, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    return data, None


def _pair(a, b, mask=None):
    """Pixel arrays of two images and the intersection of their masks."""
    da, ma = _pixels(a)
    db, mb = _pixels(b)
    if da.shape != db.shape:
        raise exceptions.DimensionMismatch(
            "Cannot compare images of shape %s and %s"
            % (da.shape, db.shape))
    valid = np.ones(da.shape[:2], dtype=bool)
    for m in (ma, mb, mask):
        if m is not None:
            m = np.asarray(m, dtype=bool)
            if m.shape != valid.shape:
                raise exceptions.DimensionMismatch(
                    "Mask shape %s does not match images %s"
                    % (m.shape, valid.shape))
            valid &= m
    return da, db, valid


def _mse(da, db, valid):
    if not valid.any():
        raise exceptions.MetricError("No valid pixels to compare")
    return float(np.mean((da[valid] - db[valid]) ** 2))


def psnr(a, b, peak=1.0, mask=None):
    """Peak signal to noise ratio in dB, capped for identical images."""
    da, db, valid = _pair(a, b, mask)
    mse = _mse(da, db, valid)
    if mse == 0:
        return constants.PSNR_CAP
    return min(constants.PSNR_CAP, -10.0 * math.log10(mse / peak ** 2))


def luma(data):
    weights = np.asarray(constants.REC709_LUMA)
    if data.shape[-1] == 1:
        return data[..., 0]
    return data @ weights


def ssim(a, b, peak=1.0, mask=None):
    """Mean structural similarity of the Rec.709 luma

    Local statistics use an 11x11 Gaussian window (sigma 1.5). Only windows
    lying entirely inside the image and covering valid pixels only are
    averaged.
    """
    da, db, valid = _pair(a, b, mask)
    x, y = luma(da), luma(db)
    radius = constants.SSIM_WINDOW // 2
    truncate = radius / constants.SSIM_SIGMA

    def blur(v):
        return ndimage.gaussian_filter(v, constants.SSIM_SIGMA,
                                       truncate=truncate, mode='constant')

    windows = ndimage.minimum_filter(valid.astype(np.uint8),
                                     size=constants.SSIM_WINDOW,
                                     mode='constant', cval=0).astype(bool)
    if not windows.any():
        raise exceptions.MetricError(
            "No %dx%d window of valid pixels for SSIM"
            % (constants.SSIM_WINDOW, constants.SSIM_WINDOW))
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / \
        ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2))
    return float(np.mean(ssim_map[windows]))


class PUEncoder(object):
    """Perceptually uniform encoding of absolute luminance

    Coefficients come from a YAML table, one entry per published fit.
    """

    def __init__(self, p, l_min, l_max):
        if len(p) != 7:
            raise exceptions.InvalidConfiguration(
                "PU encoding needs 7 coefficients, got %d" % len(p))
        self.p = [float(v) for v in p]
        self.l_min = float(l_min)
        self.l_max = float(l_max)

    @classmethod
    def from_table(cls, path=constants.PU_TABLE, fit=constants.PU_TABLE_FIT):
        table = utils.load_yaml(path)
        if fit not in table:
            raise exceptions.InvalidConfiguration(
                "%s: no PU fit named %r" % (path, fit))
        entry = table[fit]
        return cls(entry['p'], entry['l_min'], entry['l_max'])

    def encode(self, luminance):
        p = self.p
        y = np.clip(np.asarray(luminance, dtype=np.float64),
                    self.l_min, self.l_max)
        yp = y ** p[3]
        return p[6] * (((p[0] + p[1] * yp) / (1.0 + p[2] * yp)) ** p[4]
                       - p[5])

    @property
    def peak(self):
        return float(self.encode(self.l_max))


_ENCODER = None


def default_encoder():
    global _ENCODER
    if _ENCODER is None:
        _ENCODER = PUEncoder.from_table()
    return _ENCODER


def luminance_scale(reference, mask=None,
                    target=constants.PU_MEDIAN_LUMINANCE):
    """Scale mapping the median luma of the valid reference to target."""
    data, own_mask = _pixels(reference)
    valid = np.ones(data.shape[:2], dtype=bool)
    for m in (own_mask, mask):
        if m is not None:
            valid &= np.asarray(m, dtype=bool)
    values = luma(data)[valid]
    median = float(np.median(values)) if values.size else 0.0
    if median <= 0:
        LOG.warning("Reference median luminance is %g, using scale 1",
                    median)
        return 1.0
    return target / median


def pu_encode(values, scale, encoder=None):
    """Encode radiance per channel after mapping it to cd/m^2

    :returns: the encoded values as an array (masks are not carried)
    """
    encoder = encoder or default_encoder()
    data, _ = _pixels(values)
    return encoder.encode(data * scale)


def _pu_pair(a, b, mask, scale, encoder):
    encoder = encoder or default_encoder()
    da, db, valid = _pair(a, b, mask)
    if scale is None:
        scale = luminance_scale(db, valid)
    return (pu_encode(da, scale, encoder), pu_encode(db, scale, encoder),
            valid, encoder.peak)


def pu_psnr(a, b, mask=None, scale=None, encoder=None):
    ea, eb, valid, peak = _pu_pair(a, b, mask, scale, encoder)
    return psnr(ea, eb, peak, valid)


def pu_ssim(a, b, mask=None, scale=None, encoder=None):
    ea, eb, valid, peak = _pu_pair(a, b, mask, scale, encoder)
    return ssim(ea, eb, peak, valid)


def rmse(a, b, mask=None):
    da, db, valid = _pair(a, b, mask)
    return math.sqrt(_mse(da, db, valid))


def si_rmse(a, b, mask=None):
    """RMSE after the best nonnegative scaling of ``a`` toward ``b``."""
    da, db, valid = _pair(a, b, mask)
    va, vb = da[valid], db[valid]
    energy = float(np.sum(va * va))
    alpha = max(0.0, float(np.sum(va * vb)) / energy) if energy > 0 else 0.0
    return math.sqrt(_mse(alpha * da, db, valid))


def rgb_angular(a, b, mask=None):
    """Mean per-pixel angle in degrees between RGB vectors."""
    da, db, valid = _pair(a, b, mask)
    va, vb = da[valid], db[valid]
    keep = (np.linalg.norm(va, axis=-1) >= constants.ANGULAR_MIN_NORM) & \
        (np.linalg.norm(vb, axis=-1) >= constants.ANGULAR_MIN_NORM)
    if not keep.any():
        LOG.warning("No pixel bright enough for the angular error")
        return 0.0
    va, vb = va[keep], vb[keep]
    cross = np.linalg.norm(np.cross(va, vb), axis=-1)
    dot = np.sum(va * vb, axis=-1)
    return float(np.degrees(np.mean(np.arctan2(cross, dot))))


class MetricReport(object):
    """Metric values grouped like the evaluation tables"""

    def __init__(self, metadata=None):
        self.groups = collections.OrderedDict()
        self.metadata = dict(metadata or {})

    def add(self, group, name, value):
        value = float(value)
        if not math.isfinite(value):
            raise exceptions.MetricError(
                "%s/%s is not finite: %r" % (group, name, value))
        self.groups.setdefault(group, collections.OrderedDict())[name] = \
            value

    def absent(self):
        """Reserved metric names of the reported groups."""
        return dict((g, list(constants.RESERVED_METRICS[g]))
                    for g in self.groups if g in constants.RESERVED_METRICS)

    def to_dict(self):
        return {
            'groups': dict((g, dict(m)) for g, m in self.groups.items()),
            'absent': self.absent(),
            'metadata': self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def rows(self):
        """``(group, metric, value)`` rows, absent metrics last."""
        rows = []
        for group, values in self.groups.items():
            rows.extend((group, name, value)
                        for name, value in values.items())
        for group, names in sorted(self.absent().items()):
            rows.extend((group, name, None) for name in names)
        return rows

    def to_table(self):
        rows = [(g, n, 'absent' if v is None else '%.6g' % v)
                for g, n, v in self.rows()]
        header = ('group', 'metric', 'value')
        widths = [max(len(r[i]) for r in [header] + rows)
                  for i in range(3)]
        lines = ['  '.join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
                 for r in [header] + rows]
        return '\n'.join(lines)


def evaluate(pred, gt, crf, exposure=1.0, groups=None, mask=None,
             renders=None, scale=None, encoder=None):
    """Compute the configured metric groups

    :param pred: predicted HDR panorama
    :type  pred: imaging.ImageBuffer

    :param gt: ground truth HDR panorama
    :type  gt: imaging.ImageBuffer

    :param crf: response used to tone-map HDR images for the LDR group
    :param exposure: exposure scale of the LDR view
    :param groups: metric groups, default the panorama groups
    :param mask: extra validity mask, e.g. the complement of the hole mask
    :param renders: ``(pred_render, gt_render)`` HDR renders for the
                    render groups
    """
    if groups is None:
        groups = (constants.GROUP_LDR_PANO, constants.GROUP_HDR_PANO)
    unknown = set(groups) - set(constants.METRIC_GROUPS)
    if unknown:
        raise exceptions.InvalidConfiguration(
            "Unknown metric groups: %s" % ', '.join(sorted(unknown)))
    if scale is None:
        scale = luminance_scale(gt, mask)
    report = MetricReport({
        'gamma': crf.gamma,
        'exposure': float(exposure),
        'luminance_scale': scale,
        'pu_fit': constants.PU_TABLE_FIT,
        'masked': mask is not None,
    })
    for group in groups:
        if group in (constants.GROUP_HDR_RENDER, constants.GROUP_LDR_RENDER):
            if renders is None:
                raise exceptions.InvalidConfiguration(
                    "Metric group %s needs rendered images" % group)
            a, b, group_mask = renders[0], renders[1], None
        else:
            a, b, group_mask = pred, gt, mask
        if group in (constants.GROUP_LDR_PANO, constants.GROUP_LDR_RENDER):
            a = imaging.expose(a, exposure, crf)
            b = imaging.expose(b, exposure, crf)
        for name in constants.METRIC_GROUPS[group]:
            if name == 'psnr':
                value = psnr(a, b, mask=group_mask)
            elif name == 'ssim':
                value = ssim(a, b, mask=group_mask)
            elif name == 'pu_psnr':
                value = pu_psnr(a, b, group_mask, scale, encoder)
            elif name == 'pu_ssim':
                value = pu_ssim(a, b, group_mask, scale, encoder)
            elif name == 'rmse':
                value = rmse(a, b, group_mask)
            elif name == 'si_rmse':
                value = si_rmse(a, b, group_mask)
            else:
                value = rgb_angular(a, b, group_mask)
            report.add(group, name, value)
    LOG.debug("Evaluated groups %s", ', '.join(groups))
    return report
