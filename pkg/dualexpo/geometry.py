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

"""Rigid poses, rig calibration and camera ray models

Conventions: quaternions are stored ``[w, x, y, z]`` and rotate
camera-local vectors into the world frame. The world is z-up. An
equirectangular pixel ``(u, v)`` looks along azimuth
``phi = 2 pi (u + 0.5) / W - pi`` and polar angle
``theta = pi (v + 0.5) / H``; a perspective camera looks down its local +x
axis with image right along +y and image down along -z, which matches the
panorama around its center pixel.
"""

import logging
import math

import numpy as np
from scipy import ndimage

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging


LOG = logging.getLogger(__name__)

_NORM_EPSILON = 1e-12


class Quaternion(object):
    """Unit quaternion; ``q`` and ``-q`` denote the same rotation"""

    __slots__ = ('_q',)

    def __init__(self, w, x, y, z):
        q = np.array([w, x, y, z], dtype=np.float64)
        norm = np.linalg.norm(q)
        if not np.isfinite(norm) or norm < _NORM_EPSILON:
            raise exceptions.DegenerateInput(
                "Quaternion %s cannot be normalized" % q)
        self._q = q / norm

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.shape != (4,):
            raise exceptions.InvalidConfiguration(
                "Quaternion needs 4 components [w, x, y, z], got %d"
                % values.size)
        return cls(*values)

    @classmethod
    def from_axis_angle(cls, axis, angle):
        axis = np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        half = 0.5 * angle
        return cls(math.cos(half), *(math.sin(half) * axis))

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        trace = m[0, 0] + m[1, 1] + m[2, 2]
        if trace > 0:
            s = 2.0 * math.sqrt(trace + 1.0)
            return cls(0.25 * s, (m[2, 1] - m[1, 2]) / s,
                       (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
        i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * math.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
        q = np.zeros(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
        return cls(*q)

    @property
    def w(self):
        return self._q[0]

    @property
    def x(self):
        return self._q[1]

    @property
    def y(self):
        return self._q[2]

    @property
    def z(self):
        return self._q[3]

    def as_array(self):
        return self._q.copy()

    def canonical(self):
        """Return the representative with a nonnegative scalar part."""
        if self._q[0] < 0:
            return Quaternion(*(-self._q))
        return self

    def __mul__(self, other):
        w1, x1, y1, z1 = self._q
        w2, x2, y2, z2 = other._q
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2)

    def __neg__(self):
        return Quaternion(*(-self._q))

    def inverse(self):
        w, x, y, z = self._q
        return Quaternion(w, -x, -y, -z)

    def as_matrix(self):
        w, x, y, z = self._q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z),
             2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z),
             2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x),
             1 - 2 * (x * x + y * y)],
        ])

    def rotate(self, vectors):
        """Rotate one vector or an (..., 3) array of vectors."""
        vectors = np.asarray(vectors, dtype=np.float64)
        return vectors @ self.as_matrix().T

    def angle_to(self, other):
        """Geodesic distance in radians between the two rotations."""
        dot = min(1.0, abs(float(np.dot(self._q, other._q))))
        return 2.0 * math.acos(dot)

    def same_rotation(self, other, tolerance=1e-9):
        return (np.allclose(self._q, other._q, atol=tolerance, rtol=0) or
                np.allclose(self._q, -other._q, atol=tolerance, rtol=0))

    def __eq__(self, other):
        return isinstance(other, Quaternion) and self.same_rotation(other)

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    def __repr__(self):
        return 'Quaternion(w=%.12g, x=%.12g, y=%.12g, z=%.12g)' % tuple(
            self._q)


class Pose(object):
    """Camera-to-world rigid transform"""

    def __init__(self, rotation=None, translation=(0.0, 0.0, 0.0)):
        self.rotation = rotation if rotation is not None \
            else Quaternion.identity()
        translation = np.asarray(translation, dtype=np.float64).ravel()
        if translation.shape != (3,) or not np.all(np.isfinite(translation)):
            raise exceptions.InvalidConfiguration(
                "Translation must be 3 finite numbers, got %s"
                % (translation,))
        self.translation = translation

    @classmethod
    def identity(cls):
        return cls()

    def compose(self, other):
        """Return ``self * other`` (apply ``other`` first)."""
        return Pose(self.rotation * other.rotation,
                    self.translation + self.rotation.rotate(other.translation))

    def inverse(self):
        inv = self.rotation.inverse()
        return Pose(inv, -inv.rotate(self.translation))

    def transform(self, points):
        return self.rotation.rotate(points) + self.translation

    def to_dict(self):
        return {'q': [float(v) for v in self.rotation.as_array()],
                't': [float(v) for v in self.translation]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(Quaternion.from_array(data['q']), data['t'])
        except (KeyError, TypeError):
            raise exceptions.InvalidConfiguration(
                "Pose needs 'q' [w,x,y,z] and 't' [x,y,z]: %r" % (data,))

    @classmethod
    def from_list(cls, values):
        """Build a pose from ``[qw, qx, qy, qz, tx, ty, tz]``."""
        values = list(values)
        if len(values) != 7:
            raise exceptions.InvalidConfiguration(
                "Pose needs 7 numbers (q then t), got %d" % len(values))
        return cls(Quaternion.from_array(values[:4]), values[4:])

    def __repr__(self):
        return 'Pose(%r, t=%s)' % (self.rotation, self.translation.tolist())


class RelativePose(object):
    """Offset of the fast camera relative to the well camera (world frame)"""

    def __init__(self, delta_rotation=None,
                 delta_translation=(0.0, 0.0, 0.0)):
        self.delta_rotation = delta_rotation if delta_rotation is not None \
            else Quaternion.identity()
        self.delta_translation = np.asarray(delta_translation,
                                            dtype=np.float64).ravel()

    def to_dict(self):
        return {'q': [float(v) for v in self.delta_rotation.as_array()],
                't': [float(v) for v in self.delta_translation]}

    @classmethod
    def from_dict(cls, data):
        return cls(Quaternion.from_array(data['q']), data['t'])

    def __repr__(self):
        return 'RelativePose(%r, dt=%s)' % (
            self.delta_rotation, self.delta_translation.tolist())


class EquirectCamera(object):

    def __init__(self, width, height, pose=None):
        width, height = int(width), int(height)
        if height <= 0 or width != 2 * height:
            raise exceptions.InvalidConfiguration(
                "Equirectangular camera needs width == 2 * height, got "
                "%dx%d" % (width, height))
        self.width = width
        self.height = height
        self.pose = pose if pose is not None else Pose.identity()

    def __repr__(self):
        return 'EquirectCamera(%dx%d, %r)' % (self.width, self.height,
                                              self.pose)


class PerspectiveCamera(object):

    def __init__(self, width, height, fov, pose=None):
        width, height, fov = int(width), int(height), float(fov)
        if width <= 0 or height <= 0:
            raise exceptions.InvalidConfiguration(
                "Camera size must be positive, got %dx%d" % (width, height))
        if not 0.0 < fov < 180.0:
            raise exceptions.InvalidConfiguration(
                "Field of view must lie in (0, 180), got %r" % fov)
        self.width = width
        self.height = height
        self.fov = fov
        self.pose = pose if pose is not None else Pose.identity()

    @property
    def focal(self):
        """Focal length in pixels for the horizontal field of view."""
        return 0.5 * self.width / math.tan(math.radians(0.5 * self.fov))

    def to_dict(self):
        data = {'width': self.width, 'height': self.height, 'fov': self.fov}
        data.update(self.pose.to_dict())
        return data

    def __repr__(self):
        return 'PerspectiveCamera(%dx%d, fov=%g, %r)' % (
            self.width, self.height, self.fov, self.pose)


def average_translations(pairs):
    """Mean world-frame displacement ``t_left - t_right`` over pose pairs."""
    pairs = list(pairs)
    if not pairs:
        raise exceptions.EmptyInput("no pose pairs")
    offsets = np.array([left.translation - right.translation
                        for left, right in pairs])
    return offsets.sum(axis=0) / len(pairs)


def average_quaternions(pairs):
    """Average relative rotation ``q_left * q_right^-1`` over pairs

    The relative rotations are sign-aligned with the first one, accumulated
    into ``M = sum(q q^T)`` and the average is the eigenvector of the
    largest eigenvalue of ``M``.
    """
    pairs = list(pairs)
    if not pairs:
        raise exceptions.EmptyInput("no pose pairs")
    relative = [(left * right.inverse()).as_array() for left, right in pairs]
    reference = relative[0]
    accum = np.zeros((4, 4))
    for q in relative:
        if np.dot(q, reference) < 0:
            q = -q
        accum += np.outer(q, q)
    values, vectors = np.linalg.eigh(accum)
    if values[-1] - values[-2] <= 1e-12 * max(values[-1], 1.0):
        raise exceptions.DegenerateInput("degenerate rotation set")
    return Quaternion.from_array(vectors[:, -1]).canonical()


def estimate_relative_pose(pairs):
    """Estimate the rig offset from ``(well_pose, fast_pose)`` pairs."""
    pairs = list(pairs)
    rotation = average_quaternions(
        [(fast.rotation, well.rotation) for well, fast in pairs])
    translation = average_translations(
        [(fast, well) for well, fast in pairs])
    LOG.debug("Estimated rig offset from %d pairs: %s, %s",
              len(pairs), rotation, translation)
    return RelativePose(rotation, translation)


def apply_relative_pose(well_pose, rel):
    """Pose of the fast camera given the well camera pose."""
    return Pose(rel.delta_rotation * well_pose.rotation,
                well_pose.translation + rel.delta_translation)


def pose_residuals(pairs, rel):
    """Per-pair translation distance and rotation angle after the offset

    :returns: list of ``(translation_error, angle_error_radians)``
    """
    residuals = []
    for well, fast in pairs:
        predicted = apply_relative_pose(well, rel)
        residuals.append((
            float(np.linalg.norm(predicted.translation - fast.translation)),
            predicted.rotation.angle_to(fast.rotation)))
    return residuals


def _check_pixel(cam, u, v):
    if not (0 <= u < cam.width and 0 <= v < cam.height):
        raise exceptions.OutOfRange(
            "Pixel (%r, %r) outside %dx%d image"
            % (u, v, cam.width, cam.height))


def equirect_directions(width, height, u=None, v=None):
    """Camera-local unit directions of equirectangular pixels

    Without ``u``/``v`` every pixel center is returned as an (H, W, 3)
    array.
    """
    if u is None:
        v, u = np.meshgrid(np.arange(height, dtype=np.float64),
                           np.arange(width, dtype=np.float64),
                           indexing='ij')
    phi = 2.0 * np.pi * ((np.asarray(u) + 0.5) / width) - np.pi
    theta = np.pi * ((np.asarray(v) + 0.5) / height)
    sin_theta = np.sin(theta)
    return np.stack([np.cos(phi) * sin_theta, np.sin(phi) * sin_theta,
                     np.cos(theta)], axis=-1)


def perspective_directions(width, height, focal, u=None, v=None):
    if u is None:
        v, u = np.meshgrid(np.arange(height, dtype=np.float64),
                           np.arange(width, dtype=np.float64),
                           indexing='ij')
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = np.stack([np.full(np.broadcast(u, v).shape, focal),
                  u + 0.5 - 0.5 * width,
                  -(v + 0.5 - 0.5 * height)], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def equirect_ray(cam, u, v):
    _check_pixel(cam, u, v)
    local = equirect_directions(cam.width, cam.height, u, v)
    direction = cam.pose.rotation.rotate(local)
    return cam.pose.translation.copy(), direction / np.linalg.norm(direction)


def perspective_ray(cam, u, v):
    _check_pixel(cam, u, v)
    local = perspective_directions(cam.width, cam.height, cam.focal, u, v)
    direction = cam.pose.rotation.rotate(local)
    return cam.pose.translation.copy(), direction / np.linalg.norm(direction)


def camera_rays(cam):
    """World-frame origins and directions of every pixel, (H, W, 3) each."""
    if isinstance(cam, EquirectCamera):
        local = equirect_directions(cam.width, cam.height)
    elif isinstance(cam, PerspectiveCamera):
        local = perspective_directions(cam.width, cam.height, cam.focal)
    else:
        raise exceptions.InvalidConfiguration(
            "Unsupported camera %r" % (cam,))
    directions = cam.pose.rotation.rotate(local)
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    origins = np.broadcast_to(cam.pose.translation, directions.shape).copy()
    return origins, directions


def direction_to_equirect(directions, width, height):
    """Continuous pixel coordinates ``(u, v)`` of local directions."""
    d = np.asarray(directions, dtype=np.float64)
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    phi = np.arctan2(d[..., 1], d[..., 0])
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    u = (phi + np.pi) / (2.0 * np.pi) * width - 0.5
    v = theta / np.pi * height - 0.5
    return u, v


def _pad_equirect(array):
    # Wrap horizontally, clamp at the poles.
    array = np.concatenate([array[:, -1:], array, array[:, :1]], axis=1)
    return np.concatenate([array[:1], array, array[-1:]], axis=0)


def sample_equirect(data, directions, order=1):
    """Resample an equirectangular (H, W, C) array along local directions."""
    height, width = data.shape[:2]
    u, v = direction_to_equirect(directions, width, height)
    u = np.mod(u + 0.5, width) - 0.5
    padded = _pad_equirect(data)
    coords = np.stack([v.ravel() + 1.0, u.ravel() + 1.0])
    channels = [ndimage.map_coordinates(padded[..., c], coords, order=order,
                                        mode='nearest')
                for c in range(padded.shape[2])]
    return np.stack(channels, axis=-1).reshape(u.shape + (data.shape[2],))


def view_rotation(yaw, pitch):
    """Local rotation turning the forward axis to (yaw, pitch) degrees."""
    return (Quaternion.from_axis_angle((0, 0, 1), math.radians(yaw)) *
            Quaternion.from_axis_angle((0, 1, 0), -math.radians(pitch)))


def extract_perspective_views(pano, cam, fov=constants.VIEW_FOV,
                              size=constants.VIEW_SIZE, layout=None):
    """Resample perspective crops out of an equirectangular panorama

    :param pano: the full panorama
    :type  pano: imaging.ImageBuffer

    :param cam: the panorama camera, its pose places the crops in the world
    :type  cam: EquirectCamera

    :param layout: ``(yaw, pitch)`` pairs in degrees, default eight views
                   around the horizon
    :returns: list of ``(ImageBuffer, PerspectiveCamera)``
    """
    if pano.shape != (cam.height, cam.width):
        raise exceptions.DimensionMismatch(
            "Panorama %s does not match camera %dx%d"
            % (pano, cam.width, cam.height))
    if layout is None:
        layout = constants.VIEW_LAYOUT
    invalid = (~pano.valid()).astype(np.float64)[:, :, None]
    views = []
    for yaw, pitch in layout:
        local = view_rotation(yaw, pitch)
        view_cam = PerspectiveCamera(
            size, size, fov, Pose(cam.pose.rotation * local,
                                  cam.pose.translation.copy()))
        directions = local.rotate(
            perspective_directions(size, size, view_cam.focal))
        data = sample_equirect(pano.data, directions)
        mask = None
        if pano.mask is not None:
            # Any invalid source pixel with nonzero weight invalidates.
            mask = sample_equirect(invalid, directions)[..., 0] <= 1e-12
        if pano.kind != imaging.HDR:
            data = np.clip(data, 0.0, 1.0)
        views.append((imaging.ImageBuffer(np.maximum(data, 0.0), pano.kind,
                                          mask), view_cam))
    LOG.debug("Extracted %d views of %dx%d at %g degrees",
              len(views), size, size, fov)
    return views
