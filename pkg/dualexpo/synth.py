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

"""Synthetic closed rooms with rectangular emitters

The reference renderer intersects camera rays with the room box exactly.
A ray ending inside an emitter patch returns the emitter radiance, any
other wall point returns ``albedo * (ambient + E) / pi`` where ``E`` is the
direct irradiance of the emitters integrated with a fixed 8x8 point rule
per patch. There is no occlusion inside a box and no interreflection.
"""

import logging
import math

import numpy as np

from dualexpo import constants
from dualexpo import dataset as dataset_mod
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import utils


LOG = logging.getLogger(__name__)

FACES = ('-x', '+x', '-y', '+y', '-z', '+z')
DEFAULT_ALBEDO = (0.5, 0.5, 0.5)
BOUNDS_PADDING = 0.05
PIXEL_CHUNK = 4096


def face_axis(face):
    return 'xyz'.index(face[1])


def face_normal(face):
    """Unit normal of a room face pointing into the room."""
    normal = np.zeros(3)
    normal[face_axis(face)] = -1.0 if face[0] == '+' else 1.0
    return normal


def _tangent_axes(axis):
    return [a for a in range(3) if a != axis]


class Emitter(object):
    """Axis-aligned emitting rectangle lying on a room face"""

    def __init__(self, face, center, size, radiance):
        if face not in FACES:
            raise exceptions.InvalidConfiguration(
                "Unknown face %r, expected one of %s"
                % (face, ', '.join(FACES)))
        self.face = face
        self.center = np.asarray(center, dtype=np.float64).reshape(3)
        self.size = np.asarray(size, dtype=np.float64).reshape(2)
        radiance = np.asarray(radiance, dtype=np.float64)
        self.radiance = np.broadcast_to(radiance, (3,)).copy()
        if np.any(self.size <= 0):
            raise exceptions.InvalidConfiguration(
                "Emitter size must be positive, got %s" % self.size)
        if np.any(self.radiance < 0):
            raise exceptions.InvalidConfiguration(
                "Emitter radiance cannot be negative")

    @property
    def area(self):
        return float(self.size[0] * self.size[1])

    def contains(self, points):
        axes = _tangent_axes(face_axis(self.face))
        offset = np.abs(points[..., axes] - self.center[axes])
        return np.all(offset <= 0.5 * self.size, axis=-1)

    def quadrature(self, order=constants.ORACLE_QUADRATURE):
        """Cell centers of an order x order grid over the patch."""
        axes = _tangent_axes(face_axis(self.face))
        steps = (np.arange(order) + 0.5) / order - 0.5
        a, b = np.meshgrid(steps * self.size[0], steps * self.size[1],
                           indexing='ij')
        points = np.tile(self.center, (order * order, 1))
        points[:, axes[0]] += a.ravel()
        points[:, axes[1]] += b.ravel()
        return points

    def to_dict(self):
        return {'face': self.face, 'center': self.center.tolist(),
                'size': self.size.tolist(),
                'radiance': self.radiance.tolist()}


class SynthScene(object):

    def __init__(self, lo, hi, albedo=None, emitters=(), ambient=0.0):
        self.lo = np.asarray(lo, dtype=np.float64).reshape(3)
        self.hi = np.asarray(hi, dtype=np.float64).reshape(3)
        if np.any(self.hi <= self.lo):
            raise exceptions.InvalidConfiguration(
                "Room extents %s..%s are degenerate"
                % (self.lo.tolist(), self.hi.tolist()))
        albedo = dict(albedo or {})
        default = albedo.pop('default', DEFAULT_ALBEDO)
        unknown = set(albedo) - set(FACES)
        if unknown:
            raise exceptions.InvalidConfiguration(
                "Unknown faces in albedo: %s" % ', '.join(sorted(unknown)))
        self.albedo = dict(
            (face, np.broadcast_to(np.asarray(albedo.get(face, default),
                                              dtype=np.float64), (3,)).copy())
            for face in FACES)
        for face, value in self.albedo.items():
            if np.any(value < 0) or np.any(value > 1):
                raise exceptions.InvalidConfiguration(
                    "Albedo of %s must lie in [0, 1]" % face)
        self.emitters = list(emitters)
        for emitter in self.emitters:
            axis = face_axis(emitter.face)
            plane = self.hi[axis] if emitter.face[0] == '+' \
                else self.lo[axis]
            if abs(emitter.center[axis] - plane) > 1e-9:
                raise exceptions.InvalidConfiguration(
                    "Emitter center %s is not on face %s"
                    % (emitter.center.tolist(), emitter.face))
        self.ambient = float(ambient)
        if self.ambient < 0:
            raise exceptions.InvalidConfiguration(
                "Ambient term cannot be negative")

    @property
    def bounds(self):
        return [self.lo.tolist(), self.hi.tolist()]

    def contains(self, point):
        point = np.asarray(point)
        return bool(np.all(point > self.lo) and np.all(point < self.hi))

    @classmethod
    def from_dict(cls, data):
        try:
            room = data['room']
            return cls(room['lo'], room['hi'], data.get('albedo'),
                       [Emitter(e['face'], e['center'], e['size'],
                                e['radiance'])
                        for e in data.get('emitters', [])],
                       data.get('ambient', 0.0))
        except (KeyError, TypeError) as e:
            raise exceptions.InvalidConfiguration(
                "Malformed scene description: missing %s" % e)

    def to_dict(self):
        return {
            'room': {'lo': self.lo.tolist(), 'hi': self.hi.tolist()},
            'albedo': dict((f, v.tolist()) for f, v in self.albedo.items()),
            'emitters': [e.to_dict() for e in self.emitters],
            'ambient': self.ambient,
        }


def load_scene(path):
    return SynthScene.from_dict(utils.load_yaml(path))


def _exit_points(scene, origins, directions):
    """Where rays leave the room, and the index of the face they hit."""
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.where(directions > 0, (scene.hi - origins) / directions,
                     np.where(directions < 0,
                              (scene.lo - origins) / directions, np.inf))
    axis = np.argmin(t, axis=-1)
    rows = np.arange(len(origins))
    t_exit = t[rows, axis]
    points = origins + t_exit[:, None] * directions
    positive = directions[rows, axis] > 0
    points[rows, axis] = np.where(positive, scene.hi[axis], scene.lo[axis])
    face_index = 2 * axis + positive.astype(int)
    return points, face_index


def irradiance(scene, points, normals):
    """Direct irradiance of every emitter at wall points, (N, 3)."""
    total = np.zeros((len(points), 3))
    order = constants.ORACLE_QUADRATURE
    for emitter in scene.emitters:
        samples = emitter.quadrature(order)
        n_e = face_normal(emitter.face)
        w = samples[None, :, :] - points[:, None, :]
        r2 = np.maximum(np.sum(w * w, axis=-1), 1e-12)
        r = np.sqrt(r2)
        cos_p = np.maximum(np.sum(w * normals[:, None, :], axis=-1), 0) / r
        cos_e = np.maximum(-np.sum(w * n_e, axis=-1), 0) / r
        geometric = np.sum(cos_p * cos_e / r2, axis=-1) * \
            (emitter.area / (order * order))
        total += geometric[:, None] * emitter.radiance
    return total


def oracle_render(scene, cam):
    """Reference HDR image of the scene seen by an equirect or pinhole cam."""
    if not scene.contains(cam.pose.translation):
        raise exceptions.OutOfRange(
            "Camera at %s is outside the room"
            % cam.pose.translation.tolist())
    origins, directions = geometry.camera_rays(cam)
    shape = directions.shape[:2]
    origins = origins.reshape(-1, 3)
    directions = directions.reshape(-1, 3)
    image = np.zeros_like(directions)
    albedo = np.array([scene.albedo[f] for f in FACES])
    normals_by_face = np.array([face_normal(f) for f in FACES])

    for part in utils.chunks(len(directions), PIXEL_CHUNK):
        points, face_index = _exit_points(scene, origins[part],
                                          directions[part])
        normals = normals_by_face[face_index]
        radiance = albedo[face_index] * (
            scene.ambient + irradiance(scene, points, normals)) / math.pi
        for emitter in scene.emitters:
            on = (face_index == FACES.index(emitter.face)) & \
                emitter.contains(points)
            radiance[on] = emitter.radiance
        image[part] = radiance
    return imaging.ImageBuffer(image.reshape(shape + (3,)), imaging.HDR)


def rig_offset():
    """Fixed offset of the fast camera on the synthetic rig."""
    return geometry.RelativePose(
        geometry.Quaternion.from_axis_angle(
            (0, 0, 1), math.radians(constants.RIG_ROTATION_DEGREES)),
        constants.RIG_TRANSLATION)


def make_rig_trajectory(n_frames, room, seed=0, margin=0.25, step=0.1,
                        turn_degrees=25.0, rel=None):
    """Smooth random walk of the rig through the room

    :param room: the scene (or anything with ``lo``/``hi``) to stay in
    :returns: list of ``(well_pose, fast_pose)``
    """
    if n_frames < 1:
        raise exceptions.InvalidConfiguration(
            "A trajectory needs at least one frame")
    rel = rel or rig_offset()
    lo = np.asarray(room.lo) + margin
    hi = np.asarray(room.hi) - margin
    if np.any(hi <= lo):
        raise exceptions.InvalidConfiguration(
            "Room is too small for a margin of %g" % margin)
    rng = utils.seeded_rng(seed)
    position = 0.5 * (lo + hi)
    velocity = np.zeros(3)
    rotation = geometry.Quaternion.identity()
    pairs = []
    for _ in range(n_frames):
        well = geometry.Pose(rotation, position.copy())
        pairs.append((well, geometry.apply_relative_pose(well, rel)))
        velocity = 0.8 * velocity + 0.2 * step * rng.standard_normal(3)
        position = position + velocity
        # Bounce off the margin walls.
        below, above = position < lo, position > hi
        position = np.where(below, 2 * lo - position, position)
        position = np.where(above, 2 * hi - position, position)
        position = np.clip(position, lo, hi)
        velocity = np.where(below | above, -velocity, velocity)
        axis = rng.standard_normal(3)
        angle = math.radians(turn_degrees) * rng.random()
        rotation = geometry.Quaternion.from_axis_angle(axis, angle) * \
            rotation
    return pairs


def make_probe_poses(room, count, seed=0, margin=0.25):
    """Random probe positions inside the room with identity rotation."""
    rng = utils.seeded_rng(seed, 1)
    lo = np.asarray(room.lo) + margin
    hi = np.asarray(room.hi) - margin
    return [geometry.Pose(translation=lo + rng.random(3) * (hi - lo))
            for _ in range(count)]


def make_dataset(scene, trajectory, ef, crf, width, height, probes=(),
                 out_dir=None, fps=constants.DEFAULT_FPS):
    """Render a dual exposure dataset of the scene

    The well camera is exposed at scale 1 and the fast camera at
    ``1 / ef.factor``. Probe panoramas are rendered in HDR.

    :returns: :class:`dataset.CaptureDataset` (written to ``out_dir`` when
              given)
    """
    if height * 2 != width:
        raise exceptions.InvalidConfiguration(
            "Panoramas need width == 2 * height, got %dx%d"
            % (width, height))
    well_frames, fast_frames = [], []
    for i, (well_pose, fast_pose) in enumerate(trajectory):
        frame_id = '%04d' % i
        well_hdr = oracle_render(
            scene, geometry.EquirectCamera(width, height, well_pose))
        fast_hdr = oracle_render(
            scene, geometry.EquirectCamera(width, height, fast_pose))
        well_frames.append(dataset_mod.Frame(
            frame_id, constants.CAMERA_WELL,
            imaging.expose(well_hdr, 1.0, crf), well_pose))
        fast_frames.append(dataset_mod.Frame(
            frame_id, constants.CAMERA_FAST,
            imaging.expose(fast_hdr, 1.0 / ef.factor, crf), fast_pose))
        LOG.debug("Rendered frame pair %s", frame_id)

    probe_list = []
    for i, pose in enumerate(probes):
        hdr = oracle_render(scene, geometry.EquirectCamera(width, height,
                                                           pose))
        probe_list.append(dataset_mod.Probe('probe-%02d' % i, pose, hdr))

    bounds = [(scene.lo - BOUNDS_PADDING).tolist(),
              (scene.hi + BOUNDS_PADDING).tolist()]
    dataset = dataset_mod.CaptureDataset(well_frames, fast_frames, ef, crf,
                                         bounds, fps=fps, probes=probe_list)
    if out_dir:
        dataset_mod.write_dataset(out_dir, dataset)
    LOG.info("Synthesized %r with %d probes", dataset, len(probe_list))
    return dataset
