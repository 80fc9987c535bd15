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
from dualexpo import dataset
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo.tests import base
from dualexpo.tests import fakes


class TestPoses(base.TestCase):

    def setUp(self):
        super(TestPoses, self).setUp()
        self.path = os.path.join(self.temp_dir(), 'poses.json')

    def _write(self, data):
        with open(self.path, 'w') as f:
            json.dump(data, f)

    def test_round_trip(self):
        poses = {
            'well': [('a', geometry.Pose(translation=(1, 2, 3)))],
            'fast': [('a', geometry.Pose(
                geometry.Quaternion(0, 0, 0, 1), (0, 0, 1)))],
        }
        dataset.write_poses(self.path, poses)
        loaded = dataset.read_poses(self.path)
        self.assertEqual(['a'], [i for i, _ in loaded['well']])
        self.assertEqual([1.0, 2.0, 3.0],
                         loaded['well'][0][1].translation.tolist())
        self.assertEqual(poses['fast'][0][1].rotation,
                         loaded['fast'][0][1].rotation)

    def test_unknown_camera(self):
        self._write({'frames': [{'id': 'a', 'camera': 'side',
                                 'q': [1, 0, 0, 0], 't': [0, 0, 0]}]})
        self.assertRaises(exceptions.DatasetError, dataset.read_poses,
                          self.path)

    def test_zero_quaternion(self):
        self._write({'frames': [{'id': 'a', 'camera': 'well',
                                 'q': [0, 0, 0, 0], 't': [0, 0, 0]}]})
        self.assertRaises(exceptions.DatasetError, dataset.read_poses,
                          self.path)

    def test_missing_frames(self):
        self._write({'poses': []})
        self.assertRaises(exceptions.DatasetError, dataset.read_poses,
                          self.path)


class TestCaptureDataset(base.TestCase):

    def _frames(self, camera, ids, shape=(2, 4)):
        return [dataset.Frame(i, camera,
                              imaging.ImageBuffer(np.zeros(shape + (3,))),
                              geometry.Pose()) for i in ids]

    def _make(self, well_ids=('0', '1'), fast_ids=('0', '1'), factor=10.0):
        return dataset.CaptureDataset(
            self._frames('well', well_ids), self._frames('fast', fast_ids),
            imaging.ExposureFactor(factor), imaging.CRF(),
            ((-1, -1, -1), (1, 1, 1)))

    def test_valid(self):
        data = self._make()
        self.assertEqual(2, len(data.pairs()))
        self.assertEqual(4, data.width)
        self.assertEqual(imaging.CRF(), data.crf_for('fast'))

    def test_unpaired(self):
        self.assertRaises(exceptions.DatasetError, self._make,
                          fast_ids=('0',))
        self.assertRaises(exceptions.DatasetError, self._make,
                          fast_ids=('0', '2'))

    def test_duplicate_ids(self):
        self.assertRaises(exceptions.DatasetError, self._make,
                          well_ids=('0', '0'), fast_ids=('0', '0'))

    def test_exposure_factor_below_one(self):
        self.assertRaises(exceptions.DatasetError, self._make, factor=0.5)

    def test_empty(self):
        self.assertRaises(exceptions.DatasetError, self._make, (), ())

    def test_separate_fast_response(self):
        data = self._make()
        data.crf_fast = imaging.CRF(1.8)
        self.assertEqual(1.8, data.crf_for('fast').gamma)
        self.assertEqual(1.8, data.meta()['gamma_fast'])


class TestOnDisk(base.TestCase):

    def setUp(self):
        super(TestOnDisk, self).setUp()
        self.root = os.path.join(self.temp_dir(), 'data')
        self.data = fakes.make_dataset(frames=2, height=4, probes=1,
                                       out_dir=self.root)

    def test_load(self):
        loaded = dataset.load_dataset(self.root)
        self.assertEqual(len(self.data.well_frames),
                         len(loaded.well_frames))
        self.assertEqual(self.data.bounds, loaded.bounds)
        self.assertEqual(self.data.exposure_factor.factor,
                         loaded.exposure_factor.factor)
        self.assertEqual(1, len(loaded.probes))
        self.assertIsNotNone(loaded.probes[0].hdr)
        self.assertTrue(loaded.fast_frames[1].pose.rotation.same_rotation(
            self.data.fast_frames[1].pose.rotation, 1e-12))
        # 8-bit storage
        self.assertArrayAlmostEqual(self.data.well_frames[0].image.data,
                                    loaded.well_frames[0].image.data,
                                    atol=0.5 / 255 + 1e-9)

    def test_missing_image(self):
        os.remove(os.path.join(self.root, 'fast', '0001.png'))
        data, problems = dataset.inspect_dataset(self.root)
        self.assertIsNone(data)
        self.assertEqual(1, len([p for p in problems
                                 if 'missing frame image' in p]))
        self.assertRaises(exceptions.DatasetError, dataset.load_dataset,
                          self.root)

    def test_missing_meta(self):
        os.remove(os.path.join(self.root, constants.META_NAME))
        data, problems = dataset.inspect_dataset(self.root)
        self.assertIsNone(data)
        self.assertEqual(1, len(problems))

    def test_masks_are_combined(self):
        mask_dir = os.path.join(self.root, constants.MASKS_DIR)
        os.makedirs(os.path.join(mask_dir, 'well'))
        static = np.ones((4, 8), dtype=bool)
        static[0] = False
        per_frame = np.ones((4, 8), dtype=bool)
        per_frame[:, 0] = False
        imaging.write_mask(os.path.join(mask_dir, 'well.png'), static)
        imaging.write_mask(os.path.join(mask_dir, 'well', '0000.png'),
                           per_frame)
        loaded = dataset.load_dataset(self.root)
        mask = loaded.well_frames[0].image.mask
        self.assertEqual((static & per_frame).tolist(), mask.tolist())
        self.assertEqual(static.tolist(),
                         loaded.well_frames[1].image.mask.tolist())
        self.assertIsNone(loaded.fast_frames[0].image.mask)

    def test_mask_size_mismatch(self):
        mask_dir = os.path.join(self.root, constants.MASKS_DIR)
        os.makedirs(mask_dir)
        imaging.write_mask(os.path.join(mask_dir, 'fast.png'),
                           np.ones((2, 2), dtype=bool))
        data, problems = dataset.inspect_dataset(self.root)
        self.assertIsNone(data)
        self.assertEqual(2, len(problems))

    def test_exposure_report(self):
        report = dataset.exposure_report(self.data)
        self.assertEqual(set(['saturated']), set(report['well']))
        self.assertEqual(set(['saturated', 'underexposed']),
                         set(report['fast']))
        for values in report.values():
            for value in values.values():
                self.assertTrue(0.0 <= value <= 1.0)
        # the emitter clips the well exposure
        self.assertGreater(report['well']['saturated'], 0.0)
