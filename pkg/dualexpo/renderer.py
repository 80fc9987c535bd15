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

import collections
import logging

import numpy as np
import torch

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import utils


LOG = logging.getLogger(__name__)

MODE_WELL_ONLY = 'well_only'
MODE_BOTH = 'both'
RENDER_MODES = (MODE_WELL_ONLY, MODE_BOTH)

RenderOutput = collections.namedtuple(
    'RenderOutput', ['z_well', 'z_fast', 'accumulated_opacity', 'depth'])


class RayBatch(object):
    """Rays with their targets, the unit of training and rendering work

    ``camera`` optionally tags each ray with the camera that observed it
    (0 for well, 1 for fast). Untagged rays carry both targets.
    """

    def __init__(self, origins, directions, t_near, t_far, target_well=None,
                 target_fast=None, valid=None, camera=None,
                 dtype=torch.float64):
        self.origins = torch.as_tensor(origins, dtype=dtype).reshape(-1, 3)
        n = self.origins.shape[0]
        self.directions = torch.as_tensor(directions,
                                          dtype=dtype).reshape(n, 3)
        self.t_near = torch.as_tensor(t_near, dtype=dtype).expand(n).clone()
        self.t_far = torch.as_tensor(t_far, dtype=dtype).expand(n).clone()
        self.target_well = self._target(target_well, n, dtype)
        self.target_fast = self._target(target_fast, n, dtype)
        if valid is None:
            self.valid = torch.ones(n, dtype=torch.bool)
        else:
            self.valid = torch.as_tensor(valid, dtype=torch.bool).reshape(n)
        self.camera = None if camera is None else \
            torch.as_tensor(camera, dtype=torch.long).reshape(n)
        self.validate()

    @staticmethod
    def _target(values, n, dtype):
        if values is None:
            return None
        return torch.as_tensor(values, dtype=dtype).reshape(n, 3)

    def __len__(self):
        return self.origins.shape[0]

    def validate(self):
        norms = torch.linalg.norm(self.directions[self.valid], dim=-1)
        if norms.numel() and torch.max(torch.abs(norms - 1.0)) > 1e-6:
            raise exceptions.InvalidConfiguration(
                "Ray directions must be unit vectors")
        if torch.any(self.t_near[self.valid] >= self.t_far[self.valid]):
            raise exceptions.InvalidConfiguration(
                "Every valid ray needs t_near < t_far")

    def subset(self, index):
        def pick(t):
            return None if t is None else t[index]
        return RayBatch(self.origins[index], self.directions[index],
                        self.t_near[index], self.t_far[index],
                        pick(self.target_well), pick(self.target_fast),
                        self.valid[index], pick(self.camera),
                        dtype=self.origins.dtype)


def ray_box_intersection(origins, directions, lo, hi):
    """Slab test of rays against an axis-aligned box

    :returns: ``(t_enter, t_exit)`` arrays; a ray hits when
              ``t_exit > max(t_enter, 0)``
    """
    origins = np.asarray(origins, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    with np.errstate(divide='ignore', invalid='ignore'):
        inv = 1.0 / directions
        t0 = (np.asarray(lo) - origins) * inv
        t1 = (np.asarray(hi) - origins) * inv
    # Axis-parallel rays: inside the slab spans everything, outside nothing.
    parallel = directions == 0
    inside = (origins >= lo) & (origins <= hi)
    t0 = np.where(parallel, np.where(inside, -np.inf, np.inf), t0)
    t1 = np.where(parallel, np.inf, t1)
    t_enter = np.max(np.minimum(t0, t1), axis=-1)
    t_exit = np.min(np.maximum(t0, t1), axis=-1)
    return t_enter, t_exit


def ray_bounds(origins, directions, bounds):
    """Clip rays to the field bounds, returning ``(t_near, t_far, hit)``."""
    t_enter, t_exit = ray_box_intersection(origins, directions,
                                           bounds[0], bounds[1])
    t_near = np.maximum(t_enter, 0.0)
    hit = t_exit > t_near
    # Missed rays get a harmless unit interval.
    return (np.where(hit, t_near, 0.0), np.where(hit, t_exit, 1.0), hit)


def sample_points(t_near, t_far, n_samples, stratified=False, rng_seed=0):
    """Sample positions and interval lengths along rays

    Positions are bin midpoints or, when ``stratified``, one uniform draw
    per bin. Intervals run between the midpoints of consecutive samples,
    the first opens at ``t_near`` and the last closes at ``t_far``.

    :param rng_seed: seed of the jitter, or a numpy Generator
    :returns: ``(t, delta)`` tensors shaped (N, n_samples)
    """
    if n_samples < 1:
        raise exceptions.InvalidConfiguration(
            "n_samples must be at least 1, got %r" % n_samples)
    if not torch.is_tensor(t_near):
        t_near = torch.as_tensor(np.asarray(t_near, dtype=np.float64))
    dtype = t_near.dtype if t_near.is_floating_point() else torch.float64
    t_near = t_near.to(dtype).reshape(-1, 1)
    t_far = torch.as_tensor(t_far, dtype=dtype).reshape(-1, 1)
    n_rays = t_near.shape[0]
    if stratified:
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) \
            else np.random.default_rng(rng_seed)
        jitter = torch.as_tensor(rng.random((n_rays, n_samples)),
                                 dtype=dtype)
    else:
        jitter = torch.full((n_rays, n_samples), 0.5, dtype=dtype)
    bins = torch.arange(n_samples, dtype=dtype)
    length = t_far - t_near
    t = t_near + (bins + jitter) / n_samples * length
    edges = torch.cat([t_near, 0.5 * (t[:, 1:] + t[:, :-1]), t_far], dim=-1)
    return t, edges[:, 1:] - edges[:, :-1]


def compositing_weights(sigma, delta):
    """Per-sample weights ``T_i * alpha_i`` along each ray."""
    tau = sigma * delta
    alpha = -torch.expm1(-tau)
    accumulated = torch.cumsum(tau, dim=-1)
    exclusive = torch.cat(
        [torch.zeros_like(accumulated[..., :1]), accumulated[..., :-1]],
        dim=-1)
    return torch.exp(-exclusive) * alpha


def composite(sigma, delta, t, color_well=None, color_fast=None):
    """Alpha-composite samples ordered by ``t`` into a :class:`RenderOutput`

    :param sigma: densities, (N, S)
    :param delta: interval lengths, (N, S)
    :param t: sample positions, (N, S)
    :param color_well: (N, S, 3) or None
    :param color_fast: (N, S, 3) or None
    """
    weights = compositing_weights(sigma, delta)
    z_well = z_fast = None
    if color_well is not None:
        z_well = torch.sum(weights[..., None] * color_well, dim=-2)
    if color_fast is not None:
        z_fast = torch.sum(weights[..., None] * color_fast, dim=-2)
    opacity = torch.sum(weights, dim=-1)
    depth = torch.sum(weights * t, dim=-1) / torch.clamp(
        opacity, min=constants.DEPTH_EPSILON)
    return RenderOutput(z_well, z_fast, opacity, depth)


def _scatter(values, index, n):
    if values is None:
        return None
    out = values.new_zeros((n,) + tuple(values.shape[1:]))
    return out.index_put((index,), values)


def render_batch(field, batch, n_samples=constants.TRAIN_SAMPLES,
                 mode=MODE_BOTH, stratified=False, rng_seed=0):
    """Render every valid ray of a batch through the field

    Invalid rays are never evaluated and come back as zeros. In
    ``well_only`` mode the fast head is not evaluated and ``z_fast`` is
    None.
    """
    if mode not in RENDER_MODES:
        raise exceptions.InvalidConfiguration(
            "Unknown render mode %r, expected one of %s"
            % (mode, ', '.join(RENDER_MODES)))
    dtype = field.bounds_lo.dtype
    n = len(batch)
    index = torch.nonzero(batch.valid, as_tuple=False).reshape(-1)
    if index.numel() == 0:
        zeros = torch.zeros((n, 3), dtype=dtype)
        return RenderOutput(zeros, None if mode == MODE_WELL_ONLY
                            else zeros.clone(), torch.zeros(n, dtype=dtype),
                            torch.zeros(n, dtype=dtype))
    origins = batch.origins[index].to(dtype)
    directions = batch.directions[index].to(dtype)
    t, delta = sample_points(batch.t_near[index].to(dtype),
                             batch.t_far[index].to(dtype), n_samples,
                             stratified, rng_seed)
    t, delta = t.to(dtype), delta.to(dtype)
    points = origins[:, None, :] + t[..., None] * directions[:, None, :]
    heads = 'well' if mode == MODE_WELL_ONLY else 'both'
    sample = field(points, directions[:, None, :], heads)
    out = composite(sample.density, delta, t, sample.color_well,
                    sample.color_fast)
    return RenderOutput(_scatter(out.z_well, index, n),
                        _scatter(out.z_fast, index, n),
                        _scatter(out.accumulated_opacity, index, n),
                        _scatter(out.depth, index, n))


def camera_batch(cam, bounds, dtype=torch.float64):
    """Ray batch covering every pixel of a camera, clipped to bounds."""
    origins, directions = geometry.camera_rays(cam)
    origins = origins.reshape(-1, 3)
    directions = directions.reshape(-1, 3)
    t_near, t_far, hit = ray_bounds(origins, directions, bounds)
    return RayBatch(origins, directions, t_near, t_far, valid=hit,
                    dtype=dtype)


def render_panorama(field, cam, n_samples=constants.RENDER_SAMPLES,
                    chunk=constants.RENDER_CHUNK):
    """Render both exposures of the field from an equirectangular camera

    :returns: ``(well, fast)`` LDR :class:`imaging.ImageBuffer`
    """
    batch = camera_batch(cam, field.config.bounds)
    well = np.zeros((len(batch), 3))
    fast = np.zeros((len(batch), 3))
    with torch.no_grad():
        for part in utils.chunks(len(batch), chunk):
            out = render_batch(field, batch.subset(part), n_samples,
                               MODE_BOTH, stratified=False)
            well[part] = out.z_well.cpu().numpy()
            fast[part] = out.z_fast.cpu().numpy()
    shape = (cam.height, cam.width, 3)
    LOG.debug("Rendered %dx%d panorama with %d samples per ray",
              cam.width, cam.height, n_samples)
    return (imaging.ImageBuffer(np.clip(well, 0, 1).reshape(shape),
                                imaging.LDR),
            imaging.ImageBuffer(np.clip(fast, 0, 1).reshape(shape),
                                imaging.LDR))
