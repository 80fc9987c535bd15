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

"""Diffuse sphere on a ground plane lit by an environment map

The sphere of radius ``SPHERE_RADIUS`` rests on the plane ``z = 0`` at the
origin. Shading is direct lighting only: the environment is integrated
over the cosine-weighted hemisphere with a fixed sample set, and samples
blocked by the other object contribute nothing.
"""

import logging
import math

import numpy as np

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import utils


LOG = logging.getLogger(__name__)

SPHERE_RADIUS = 0.5
SPHERE_CENTER = np.array([0.0, 0.0, SPHERE_RADIUS])
CAMERA_POSITION = (-3.0, 0.0, SPHERE_RADIUS)
PIXEL_CHUNK = 1024

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def hemisphere_samples(count=constants.IBL_SAMPLES):
    """Fixed cosine-weighted directions about +z, (count, 3)."""
    i = np.arange(count, dtype=np.float64)
    u1 = (i + 0.5) / count
    u2 = np.mod(i * _GOLDEN, 1.0)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    return np.stack([r * np.cos(phi), r * np.sin(phi), np.sqrt(1.0 - u1)],
                    axis=-1)


def _tangent_frames(normals):
    helper = np.where(np.abs(normals[:, 2:3]) < 0.9,
                      np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    tangent = np.cross(helper, normals)
    tangent /= np.linalg.norm(tangent, axis=-1, keepdims=True)
    bitangent = np.cross(normals, tangent)
    return tangent, bitangent


def _sphere_hit(origins, directions):
    """Nearest positive distance to the sphere, inf on a miss."""
    oc = origins - SPHERE_CENTER
    b = np.sum(oc * directions, axis=-1)
    c = np.sum(oc * oc, axis=-1) - SPHERE_RADIUS ** 2
    disc = b * b - c
    root = np.sqrt(np.maximum(disc, 0.0))
    near, far = -b - root, -b + root
    t = np.where(near > 1e-9, near, np.where(far > 1e-9, far, np.inf))
    return np.where(disc >= 0, t, np.inf)


def _plane_hit(origins, directions):
    with np.errstate(divide='ignore', invalid='ignore'):
        t = -origins[..., 2] / directions[..., 2]
    return np.where((directions[..., 2] < 0) & (t > 1e-9), t, np.inf)


def _environment(env, directions):
    shape = directions.shape[:-1]
    return geometry.sample_equirect(env.data,
                                    directions.reshape(-1, 3)).reshape(
        shape + (3,))


def _shade(env, points, normals, albedo, samples, occluder):
    tangent, bitangent = _tangent_frames(normals)
    directions = (samples[None, :, 0:1] * tangent[:, None, :] +
                  samples[None, :, 1:2] * bitangent[:, None, :] +
                  samples[None, :, 2:3] * normals[:, None, :])
    origins = np.broadcast_to(points[:, None, :], directions.shape)
    blocked = np.isfinite(occluder(origins, directions))
    radiance = _environment(env, directions)
    radiance = np.where(blocked[..., None], 0.0, radiance)
    return albedo * radiance.mean(axis=1)


def render_ibl(env, width=128, height=128, fov=40.0,
               samples=constants.IBL_SAMPLES, sphere_albedo=0.8,
               ground_albedo=0.5):
    """Render the sphere and plane lit by an HDR environment map

    :param env: equirectangular environment, world z up
    :type  env: imaging.ImageBuffer

    :returns: HDR :class:`imaging.ImageBuffer`
    """
    if env.kind != imaging.HDR:
        raise exceptions.InvalidConfiguration(
            "The environment map must be an HDR image")
    if env.width != 2 * env.height:
        raise exceptions.InvalidConfiguration(
            "The environment map must be equirectangular (2:1), got %dx%d"
            % (env.width, env.height))
    cam = geometry.PerspectiveCamera(
        width, height, fov, geometry.Pose(translation=CAMERA_POSITION))
    origins, directions = geometry.camera_rays(cam)
    origins = origins.reshape(-1, 3)
    directions = directions.reshape(-1, 3)
    hemisphere = hemisphere_samples(samples)
    image = np.zeros_like(directions)

    for part in utils.chunks(len(directions), PIXEL_CHUNK):
        o, d = origins[part], directions[part]
        t_sphere = _sphere_hit(o, d)
        t_plane = _plane_hit(o, d)
        out = _environment(env, d)
        on_sphere = np.isfinite(t_sphere) & (t_sphere <= t_plane)
        on_plane = np.isfinite(t_plane) & ~on_sphere
        if on_sphere.any():
            points = o[on_sphere] + t_sphere[on_sphere, None] * d[on_sphere]
            normals = (points - SPHERE_CENTER) / SPHERE_RADIUS
            out[on_sphere] = _shade(env, points, normals, sphere_albedo,
                                    hemisphere, _plane_hit)
        if on_plane.any():
            points = o[on_plane] + t_plane[on_plane, None] * d[on_plane]
            normals = np.tile([0.0, 0.0, 1.0], (len(points), 1))
            out[on_plane] = _shade(env, points, normals, ground_albedo,
                                   hemisphere, _sphere_hit)
        image[part] = out

    LOG.debug("Rendered %dx%d IBL image with %d samples",
              width, height, samples)
    return imaging.ImageBuffer(np.maximum(image, 0.0).reshape(
        height, width, 3), imaging.HDR)


def render_ldr(env, crf, exposure=1.0, **kwargs):
    """Tone-map :func:`render_ibl` through the camera response."""
    return imaging.expose(render_ibl(env, **kwargs), exposure, crf)
