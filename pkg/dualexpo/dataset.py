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

"""On-disk dual exposure capture datasets

Layout of a dataset directory::

    meta.json             exposure factor, gamma, size, fps, bounds
    poses.json            {"frames": [{"id", "camera", "q", "t"}]}
    well/<id>.png         well exposed frames
    fast/<id>.png         fast exposed frames
    masks/well.png        optional static mask of each camera
    masks/fast.png
    masks/<camera>/<id>.png   optional per-frame masks
    probes.json           optional {"probes": [{"id", "q", "t"}]}
    probes/<id>.pfm       optional ground truth HDR panoramas
"""

import logging
import os

import numpy as np

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import utils


LOG = logging.getLogger(__name__)


class Frame(object):

    def __init__(self, frame_id, camera, image, pose):
        self.id = frame_id
        self.camera = camera
        self.image = image
        self.pose = pose

    def __repr__(self):
        return 'Frame(%s/%s, %r)' % (self.camera, self.id, self.image)


class Probe(object):
    """A held-out pose with optional ground truth HDR panorama"""

    def __init__(self, probe_id, pose, hdr=None):
        self.id = probe_id
        self.pose = pose
        self.hdr = hdr

    def to_dict(self):
        data = {'id': self.id}
        data.update(self.pose.to_dict())
        return data

    @classmethod
    def from_dict(cls, data):
        if 'id' not in data:
            raise exceptions.InvalidConfiguration(
                "Probe entry without an id: %r" % (data,))
        return cls(str(data['id']), geometry.Pose.from_dict(data))


class CaptureDataset(object):
    """Synchronized well/fast frame pairs and their photometric setup"""

    def __init__(self, well_frames, fast_frames, exposure_factor, crf,
                 bounds, crf_fast=None, fps=constants.DEFAULT_FPS,
                 probes=None):
        self.well_frames = list(well_frames)
        self.fast_frames = list(fast_frames)
        self.exposure_factor = exposure_factor
        self.crf = crf
        self.crf_fast = crf_fast
        self.bounds = [[float(v) for v in bounds[0]],
                       [float(v) for v in bounds[1]]]
        self.fps = float(fps)
        self.probes = list(probes or [])
        self.validate()

    def validate(self):
        problems = structural_problems(self)
        if problems:
            raise exceptions.DatasetError('; '.join(problems))

    @property
    def width(self):
        return self.well_frames[0].image.width

    @property
    def height(self):
        return self.well_frames[0].image.height

    def crf_for(self, camera):
        if camera == constants.CAMERA_FAST and self.crf_fast is not None:
            return self.crf_fast
        return self.crf

    def frames(self, camera):
        if camera == constants.CAMERA_WELL:
            return self.well_frames
        if camera == constants.CAMERA_FAST:
            return self.fast_frames
        raise exceptions.InvalidConfiguration("Unknown camera %r" % camera)

    def pairs(self):
        return list(zip(self.well_frames, self.fast_frames))

    def meta(self):
        data = {
            'exposure_factor': self.exposure_factor.factor,
            'gamma': self.crf.gamma,
            'width': self.width,
            'height': self.height,
            'fps': self.fps,
            'bounds': self.bounds,
        }
        if self.crf_fast is not None:
            data['gamma_fast'] = self.crf_fast.gamma
        return data

    def __repr__(self):
        return 'CaptureDataset(%d pairs, %dx%d, %r)' % (
            len(self.well_frames), self.width, self.height,
            self.exposure_factor)


def structural_problems(dataset):
    """List the invariant violations of an in-memory dataset."""
    problems = []
    if not dataset.well_frames:
        problems.append("dataset has no frames")
        return problems
    if len(dataset.well_frames) != len(dataset.fast_frames):
        problems.append("%d well frames but %d fast frames"
                        % (len(dataset.well_frames),
                           len(dataset.fast_frames)))
    for camera in constants.CAMERAS:
        ids = [f.id for f in dataset.frames(camera)]
        if not utils.all_unique(ids):
            problems.append("%s frame ids are not unique" % camera)
    for well, fast in dataset.pairs():
        if well.id != fast.id:
            problems.append("unpaired frames %s/%s and %s/%s"
                            % (well.camera, well.id, fast.camera, fast.id))
    shape = dataset.well_frames[0].image.shape
    for frame in dataset.well_frames + dataset.fast_frames:
        if frame.image.shape != shape:
            problems.append("%s/%s is %dx%d, expected %dx%d"
                            % (frame.camera, frame.id, frame.image.width,
                               frame.image.height, shape[1], shape[0]))
        if frame.image.kind != imaging.LDR:
            problems.append("%s/%s is not an LDR image"
                            % (frame.camera, frame.id))
    if dataset.exposure_factor.factor < 1:
        problems.append("exposure factor %g is below 1"
                        % dataset.exposure_factor.factor)
    lo, hi = dataset.bounds
    if any(h <= l for l, h in zip(lo, hi)):
        problems.append("degenerate bounds %s" % (dataset.bounds,))
    return problems


def _frame_path(root, camera, frame_id):
    return os.path.join(root, camera, '%s.png' % frame_id)


def _combined_mask(root, camera, frame_id, shape):
    masks = []
    for path in (os.path.join(root, constants.MASKS_DIR, '%s.png' % camera),
                 os.path.join(root, constants.MASKS_DIR, camera,
                              '%s.png' % frame_id)):
        if os.path.isfile(path):
            mask = imaging.read_mask(path)
            if mask.shape != shape:
                raise exceptions.DatasetError(
                    "%s: mask is %dx%d, expected %dx%d"
                    % (path, mask.shape[1], mask.shape[0], shape[1],
                       shape[0]))
            masks.append(mask)
    if not masks:
        return None
    return np.logical_and.reduce(masks)


def read_poses(path):
    """Read a pose file into ``{camera: [(id, Pose)]}`` in file order."""
    data = utils.load_json(path)
    if not isinstance(data, dict) or 'frames' not in data:
        raise exceptions.DatasetError("%s: missing 'frames' list" % path)
    poses = dict((camera, []) for camera in constants.CAMERAS)
    for entry in data['frames']:
        try:
            camera = entry['camera']
            frame_id = str(entry['id'])
        except (KeyError, TypeError):
            raise exceptions.DatasetError(
                "%s: frame entry needs 'id' and 'camera': %r"
                % (path, entry))
        if camera not in poses:
            raise exceptions.DatasetError(
                "%s: unknown camera %r for frame %s"
                % (path, camera, frame_id))
        try:
            poses[camera].append((frame_id, geometry.Pose.from_dict(entry)))
        except (exceptions.InvalidConfiguration,
                exceptions.DegenerateInput) as e:
            raise exceptions.DatasetError("%s: frame %s: %s"
                                          % (path, frame_id, e))
    return poses


def write_poses(path, poses):
    """Write ``{camera: [(id, Pose)]}`` as a pose file."""
    frames = []
    for camera in constants.CAMERAS:
        for frame_id, pose in poses.get(camera, []):
            entry = {'id': frame_id, 'camera': camera}
            entry.update(pose.to_dict())
            frames.append(entry)
    return utils.write_json(path, {'frames': frames})


def read_meta(root):
    path = os.path.join(root, constants.META_NAME)
    meta = utils.load_json(path)
    missing = [k for k in ('exposure_factor', 'gamma', 'width', 'height')
               if k not in meta]
    if missing:
        raise exceptions.DatasetError(
            "%s: missing %s" % (path, ', '.join(missing)))
    return meta


def read_probes(root, with_images=True):
    path = os.path.join(root, constants.PROBES_NAME)
    if not os.path.isfile(path):
        return []
    probes = [Probe.from_dict(p)
              for p in utils.load_json(path).get('probes', [])]
    if with_images:
        for probe in probes:
            image = os.path.join(root, constants.PROBES_DIR,
                                 '%s.pfm' % probe.id)
            if os.path.isfile(image):
                probe.hdr = imaging.read_image(image)
    return probes


def inspect_dataset(root):
    """Load a dataset directory, collecting problems instead of raising

    :returns: ``(dataset or None, problems)``
    """
    problems = []
    try:
        meta = read_meta(root)
        poses = read_poses(os.path.join(root, constants.POSES_NAME))
    except (exceptions.InvalidConfiguration, exceptions.DatasetError) as e:
        return None, [str(e)]

    shape = (int(meta['height']), int(meta['width']))
    frames = dict((camera, []) for camera in constants.CAMERAS)
    for camera in constants.CAMERAS:
        for frame_id, pose in poses[camera]:
            path = _frame_path(root, camera, frame_id)
            if not os.path.isfile(path):
                problems.append("%s: missing frame image" % path)
                continue
            try:
                image = imaging.read_image(path)
                if image.shape != shape:
                    problems.append("%s: image is %dx%d, meta says %dx%d"
                                    % (path, image.width, image.height,
                                       shape[1], shape[0]))
                    continue
                image.mask = _combined_mask(root, camera, frame_id, shape)
            except (exceptions.ImageFormatError,
                    exceptions.DatasetError) as e:
                problems.append(str(e))
                continue
            frames[camera].append(Frame(frame_id, camera, image, pose))

    well_ids = set(i for i, _ in poses[constants.CAMERA_WELL])
    fast_ids = set(i for i, _ in poses[constants.CAMERA_FAST])
    for frame_id in sorted(well_ids ^ fast_ids):
        problems.append("frame %s has no %s counterpart" % (
            frame_id, constants.CAMERA_FAST if frame_id in well_ids
            else constants.CAMERA_WELL))
    for camera in constants.CAMERAS:
        ids = [i for i, _ in poses[camera]]
        if not utils.all_unique(ids):
            problems.append("%s frame ids are not unique" % camera)
    if problems:
        return None, problems

    # Pair in well order, the fast list follows the well ids.
    fast_by_id = dict((f.id, f) for f in frames[constants.CAMERA_FAST])
    fast_frames = [fast_by_id[f.id] for f in frames[constants.CAMERA_WELL]]
    bounds = meta.get('bounds', [[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])
    try:
        crf_fast = None
        if meta.get('gamma_fast') is not None:
            crf_fast = imaging.CRF(meta['gamma_fast'])
        dataset = CaptureDataset(
            frames[constants.CAMERA_WELL], fast_frames,
            imaging.ExposureFactor(meta['exposure_factor']),
            imaging.CRF(meta['gamma']), bounds, crf_fast=crf_fast,
            fps=meta.get('fps', constants.DEFAULT_FPS),
            probes=read_probes(root))
    except (exceptions.DatasetError, exceptions.InvalidConfiguration,
            exceptions.ImageFormatError) as e:
        return None, [str(e)]
    return dataset, []


def load_dataset(root):
    dataset, problems = inspect_dataset(root)
    if problems:
        raise exceptions.DatasetError(
            "%s: %s" % (root, '; '.join(problems)))
    LOG.info("Loaded %r from %s", dataset, root)
    return dataset


def write_dataset(root, dataset):
    """Write a dataset directory, returning its root."""
    utils.ensure_directory(root)
    poses = dict((camera, []) for camera in constants.CAMERAS)
    for camera in constants.CAMERAS:
        utils.ensure_directory(os.path.join(root, camera))
        for frame in dataset.frames(camera):
            imaging.write_image(_frame_path(root, camera, frame.id),
                                frame.image)
            if frame.image.mask is not None:
                mask_dir = utils.ensure_directory(
                    os.path.join(root, constants.MASKS_DIR, camera))
                imaging.write_mask(os.path.join(mask_dir,
                                                '%s.png' % frame.id),
                                   frame.image.mask)
            poses[camera].append((frame.id, frame.pose))
    write_poses(os.path.join(root, constants.POSES_NAME), poses)
    utils.write_json(os.path.join(root, constants.META_NAME),
                     dataset.meta())
    if dataset.probes:
        utils.write_json(os.path.join(root, constants.PROBES_NAME),
                         {'probes': [p.to_dict() for p in dataset.probes]})
        probe_dir = utils.ensure_directory(
            os.path.join(root, constants.PROBES_DIR))
        for probe in dataset.probes:
            if probe.hdr is not None:
                imaging.write_image(
                    os.path.join(probe_dir, '%s.pfm' % probe.id), probe.hdr)
    LOG.info("Wrote %r to %s", dataset, root)
    return root


def exposure_report(dataset, well_threshold=constants.WELL_THRESHOLD,
                    fast_threshold=constants.FAST_THRESHOLD):
    """Fraction of valid pixels clipped or underexposed per camera

    A pixel is saturated when its brightest channel is at or above the
    well threshold after the CRF, and underexposed when its brightest
    channel is at or below the fast threshold.
    """
    report = {}
    for camera in constants.CAMERAS:
        crf = dataset.crf_for(camera)
        saturated_level = crf.forward(well_threshold)
        dark_level = crf.forward(fast_threshold)
        saturated = dark = total = 0
        for frame in dataset.frames(camera):
            peak = frame.image.data.max(axis=2)[frame.image.valid()]
            total += peak.size
            saturated += int(np.count_nonzero(peak >= saturated_level))
            dark += int(np.count_nonzero(peak <= dark_level))
        total = max(total, 1)
        report[camera] = {'saturated': saturated / float(total)}
        if camera == constants.CAMERA_FAST:
            report[camera]['underexposed'] = dark / float(total)
    return report
