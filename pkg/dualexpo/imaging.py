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

"""Camera response, exposure fusion and image file I/O"""

import logging
import math
import os

import numpy as np
import png
from scipy import optimize

from dualexpo import constants
from dualexpo import exceptions


LOG = logging.getLogger(__name__)

LDR = 'ldr'
LINEAR = 'linear'
HDR = 'hdr'
KINDS = (LDR, LINEAR, HDR)

_PFM_SCALE = -1.0


class CRF(object):
    """Gamma camera response ``z = p ** (1 / gamma)``"""

    def __init__(self, gamma=2.2):
        gamma = float(gamma)
        if not (gamma > 0 and math.isfinite(gamma)):
            raise exceptions.InvalidConfiguration(
                "CRF gamma must be a positive number, got %r" % gamma)
        self.gamma = gamma

    def forward(self, p):
        p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
        if self.gamma == 1.0:
            return p
        return np.power(p, 1.0 / self.gamma)

    def inverse(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.gamma == 1.0:
            return z
        return np.power(z, self.gamma)

    def to_dict(self):
        return {'gamma': self.gamma}

    @classmethod
    def from_dict(cls, data):
        return cls(data['gamma'])

    def __eq__(self, other):
        return isinstance(other, CRF) and other.gamma == self.gamma

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'CRF(gamma=%r)' % self.gamma


class ExposureFactor(object):
    """Ratio between the well and the fast exposure times (1 / dt_fast)"""

    def __init__(self, factor):
        factor = float(factor)
        if not (factor > 0 and math.isfinite(factor)):
            raise exceptions.InvalidConfiguration(
                "Exposure factor must be positive, got %r" % factor)
        self.factor = factor

    def __repr__(self):
        return 'ExposureFactor(%r)' % self.factor


class ImageBuffer(object):
    """An H x W x 3 raster with an optional validity mask

    ``kind`` is ``ldr`` for nonlinear pixel values in [0, 1], ``linear``
    for linearized values in [0, 1] and ``hdr`` for nonnegative radiance.
    The mask is an H x W boolean array where True marks a valid pixel.
    """

    def __init__(self, data, kind=LDR, mask=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 2:
            data = np.repeat(data[:, :, None], 3, axis=2)
        if data.ndim != 3 or data.shape[2] != 3:
            raise exceptions.DimensionMismatch(
                "Image data must be H x W x 3, got %s" % (data.shape,))
        if kind not in KINDS:
            raise exceptions.InvalidConfiguration(
                "Unknown image kind %r" % kind)
        if kind in (LDR, LINEAR):
            if data.size and (data.min() < 0.0 or data.max() > 1.0):
                raise exceptions.OutOfRange(
                    "%s image values must lie in [0, 1]" % kind.upper())
        elif data.size and data.min() < 0.0:
            raise exceptions.OutOfRange("HDR image values must be >= 0")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != data.shape[:2]:
                raise exceptions.DimensionMismatch(
                    "Mask shape %s does not match image %s"
                    % (mask.shape, data.shape[:2]))
        self.data = data
        self.kind = kind
        self.mask = mask

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape[:2]

    def valid(self):
        """Return the validity mask, all True when the image has none."""
        if self.mask is None:
            return np.ones(self.shape, dtype=bool)
        return self.mask

    def copy(self):
        mask = None if self.mask is None else self.mask.copy()
        return ImageBuffer(self.data.copy(), self.kind, mask)

    def __repr__(self):
        return 'ImageBuffer(%dx%d, %s%s)' % (
            self.width, self.height, self.kind,
            '' if self.mask is None else ', masked')


def _intersect_masks(*masks):
    result = None
    for mask in masks:
        if mask is None:
            continue
        result = mask.copy() if result is None else result & mask
    return result


def fit_gamma(pairs, search=constants.GAMMA_SEARCH_RANGE,
              tolerance=constants.GAMMA_TOLERANCE):
    """Fit the gamma CRF to color checker observations

    :param pairs: ``(linear_reflectance, observed_z)`` couples, both in (0, 1)
    :type  pairs: list of (float, float)

    :param search: gamma interval searched on a log scale
    :type  search: (float, float)

    :returns: the :class:`CRF` minimising the squared error of ``f(p) - z``
    """
    pairs = np.asarray(list(pairs), dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[0] < 3 or pairs.shape[1] != 2:
        raise exceptions.EmptyInput(
            "At least 3 (reflectance, observation) pairs are required")
    p, z = pairs[:, 0], pairs[:, 1]
    if np.any(p <= 0) or np.any(p >= 1) or np.any(z <= 0) or np.any(z >= 1):
        raise exceptions.OutOfRange(
            "Reflectances and observations must lie in (0, 1)")
    if np.ptp(p) == 0 or np.ptp(z) == 0:
        raise exceptions.DegenerateInput(
            "Calibration pairs are degenerate (all equal)")

    log_p = np.log(p)

    def residual(log_gamma):
        return np.sum((np.exp(log_p / math.exp(log_gamma)) - z) ** 2)

    result = optimize.minimize_scalar(
        residual, method='bounded',
        bounds=(math.log(search[0]), math.log(search[1])),
        options={'xatol': tolerance})
    gamma = math.exp(result.x)
    LOG.debug("Fitted gamma %.6f on %d pairs (residual %.3g)",
              gamma, len(p), result.fun)
    return CRF(gamma)


def linearize(img, crf):
    """Map an LDR image through the inverse CRF."""
    if img.kind != LDR:
        raise exceptions.InvalidConfiguration(
            "Only LDR images can be linearized, got %s" % img.kind)
    data = np.clip(crf.inverse(img.data), 0.0, 1.0)
    mask = None if img.mask is None else img.mask.copy()
    return ImageBuffer(data, LINEAR, mask)


def merge_weight_well(p, threshold=constants.WELL_THRESHOLD):
    return (np.asarray(p) < threshold).astype(np.float64)


def merge_weight_fast(p, threshold=constants.FAST_THRESHOLD):
    return (np.asarray(p) > threshold).astype(np.float64)


def merge_hdr(p_well, p_fast, ef, well_threshold=constants.WELL_THRESHOLD,
              fast_threshold=constants.FAST_THRESHOLD):
    """Fuse linearized well and fast exposures into radiance

    Both weights are evaluated per channel. Where neither exposure carries a
    valid observation the re-exposed fast value is used and the pixel is
    reported in the hole mask.

    :returns: ``(ImageBuffer[HDR], hole_mask)``
    """
    if p_well.shape != p_fast.shape:
        raise exceptions.DimensionMismatch(
            "Cannot merge %s with %s" % (p_well, p_fast))
    pw, pf = p_well.data, p_fast.data
    ww = merge_weight_well(pw, well_threshold)
    wf = merge_weight_fast(pf, fast_threshold)
    scaled_fast = ef.factor * pf
    total = ww + wf
    holes = total == 0
    radiance = np.where(
        holes, scaled_fast,
        (ww * pw + wf * scaled_fast) / np.where(holes, 1.0, total))
    hole_mask = np.any(holes, axis=2)
    if hole_mask.any():
        LOG.debug("%d hole pixels in merged image", int(hole_mask.sum()))
    mask = _intersect_masks(p_well.mask, p_fast.mask)
    return ImageBuffer(np.maximum(radiance, 0.0), HDR, mask), hole_mask


def expose(hdr, exposure_scale, crf):
    """Simulate an LDR capture of radiance at the given exposure scale."""
    if not exposure_scale > 0:
        raise exceptions.InvalidConfiguration(
            "Exposure scale must be positive, got %r" % exposure_scale)
    data = crf.forward(np.clip(exposure_scale * hdr.data, 0.0, 1.0))
    mask = None if hdr.mask is None else hdr.mask.copy()
    return ImageBuffer(data, LDR, mask)


def _format_error(path, reason):
    return exceptions.ImageFormatError("%s: %s" % (path, reason))


def _read_pfm(path):
    with open(path, 'rb') as f:
        header = []
        while len(header) < 3:
            line = f.readline()
            if not line:
                raise _format_error(path, "truncated PFM header")
            line = line.strip()
            if line:
                header.append(line.decode('ascii', 'replace'))
        payload = f.read()

    if header[0] == 'PF':
        channels = 3
    elif header[0] == 'Pf':
        channels = 1
    else:
        raise _format_error(path, "unrecognized identifier %r" % header[0])
    try:
        width, height = [int(v) for v in header[1].split()]
        scale = float(header[2])
    except ValueError:
        raise _format_error(path, "malformed PFM header")
    if width <= 0 or height <= 0 or scale == 0:
        raise _format_error(path, "malformed PFM header")

    dtype = '<f4' if scale < 0 else '>f4'
    expected = width * height * channels * 4
    if len(payload) != expected:
        raise _format_error(path, "expected %d data bytes, found %d"
                            % (expected, len(payload)))
    data = np.frombuffer(payload, dtype=dtype).reshape(
        height, width, channels)
    # PFM rows are stored bottom to top.
    data = np.flipud(data).astype(np.float64)
    if not np.all(np.isfinite(data)) or data.min() < 0:
        raise _format_error(path, "HDR values must be finite and >= 0")
    if channels == 1:
        data = data[:, :, 0]
    return ImageBuffer(data, HDR)


def _write_pfm(path, img):
    height, width = img.shape
    header = ('PF\n%d %d\n%.1f\n' % (width, height, _PFM_SCALE))
    payload = np.flipud(img.data).astype('<f4').tobytes()
    with open(path, 'wb') as f:
        f.write(header.encode('ascii'))
        f.write(payload)


def _read_png(path):
    try:
        width, height, rows, _info = png.Reader(filename=path).asRGBA8()
        data = np.vstack([np.asarray(row, dtype=np.uint8) for row in rows])
    except (png.Error, IOError, ValueError) as e:
        raise _format_error(path, e)
    return data.reshape(height, width, 4)


def _write_png(path, array, greyscale=False):
    height, width = array.shape[:2]
    writer = png.Writer(width=width, height=height, greyscale=greyscale,
                        bitdepth=8)
    rows = array.reshape(height, -1)
    with open(path, 'wb') as f:
        writer.write(f, rows)


def read_image(path, mask_path=None):
    """Read an LDR PNG or an HDR PFM, optionally attaching a mask file."""
    if not os.path.isfile(path):
        raise _format_error(path, "no such file")
    ext = os.path.splitext(path)[1].lower()
    if ext == '.pfm':
        img = _read_pfm(path)
    elif ext == '.png':
        rgba = _read_png(path)
        img = ImageBuffer(rgba[:, :, :3] / 255.0, LDR)
    else:
        raise _format_error(path, "unsupported extension %r" % ext)
    if mask_path is not None:
        mask = read_mask(mask_path)
        if mask.shape != img.shape:
            raise _format_error(mask_path, "mask size %s differs from image"
                                " %s" % (mask.shape, img.shape))
        img.mask = mask
    return img


def write_image(path, img):
    """Write HDR images as PFM and LDR or linear images as 8-bit PNG."""
    ext = os.path.splitext(path)[1].lower()
    if ext == '.pfm':
        _write_pfm(path, img)
    elif ext == '.png':
        if img.kind == HDR:
            raise _format_error(path, "HDR images must be written as PFM")
        quantized = np.round(np.clip(img.data, 0, 1) * 255).astype(np.uint8)
        _write_png(path, quantized)
    else:
        raise _format_error(path, "unsupported extension %r" % ext)
    LOG.debug("Wrote %s", path)
    return path


def read_mask(path):
    if not os.path.isfile(path):
        raise _format_error(path, "no such file")
    return _read_png(path)[:, :, 0] >= 128


def write_mask(path, mask):
    mask = np.asarray(mask, dtype=bool)
    _write_png(path, np.where(mask, 255, 0).astype(np.uint8),
               greyscale=True)
    return path
