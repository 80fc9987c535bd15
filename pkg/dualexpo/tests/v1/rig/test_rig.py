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

import os

from dualexpo import constants
from dualexpo import dataset as dataset_mod
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import synth
from dualexpo import utils
from dualexpo.tests import base
from dualexpo.tests import fakes
from dualexpo.v1 import rig


def _poses(pairs):
    ids = ['%04d' % i for i in range(len(pairs))]
    return {
        constants.CAMERA_WELL: [(i, w) for i, (w, _) in zip(ids, pairs)],
        constants.CAMERA_FAST: [(i, f) for i, (_, f) in zip(ids, pairs)],
    }


class TestHelpers(base.TestCase):

    def test_pose_pairs_match_ids(self):
        a, b = geometry.Pose(), geometry.Pose(translation=(1, 0, 0))
        poses = {constants.CAMERA_WELL: [('0', a), ('1', b)],
                 constants.CAMERA_FAST: [('1', a)]}
        self.assertEqual([(b, a)], rig.pose_pairs(poses))

    def test_residual_summary(self):
        summary = rig.residual_summary([(0.1, 0.0), (0.3, 0.0)])
        self.assertAlmostEqual(0.2, summary['translation_mean'])
        self.assertEqual(0.3, summary['translation_max'])
        self.assertEqual(0.0, summary['angle_max_deg'])


class TestEstimateRig(base.TestCommand):

    def setUp(self):
        super(TestEstimateRig, self).setUp()
        self.tmp = self.temp_dir()
        self.pairs = synth.make_rig_trajectory(6, fakes.make_scene(), seed=2)
        self.poses = os.path.join(self.tmp, 'calib.json')
        dataset_mod.write_poses(self.poses, _poses(self.pairs))
        self.out = os.path.join(self.tmp, 'rig.json')
        self.cmd = rig.EstimateRig(self.app, None)

    def test_recovers_offset(self):
        parsed_args = self.check_parser(
            self.cmd, ['--poses', self.poses, '--out', self.out],
            [('apply_to', None)])
        columns, data = self.cmd.take_action(parsed_args)
        values = dict(zip(columns, data))
        self.assertEqual(6, values['pairs'])
        self.assertAlmostEqual(constants.RIG_ROTATION_DEGREES,
                               values['rotation_deg'], delta=1e-6)
        self.assertArrayAlmostEqual(constants.RIG_TRANSLATION, values['t'])
        self.assertLess(values['translation_max'], 1e-9)
        saved = utils.load_json(self.out)
        self.assertEqual(6, saved['pairs'])
        self.assertEqual(values['q'], saved['q'])

    def test_apply_to(self):
        target = os.path.join(self.tmp, 'capture.json')
        rewritten = os.path.join(self.tmp, 'capture-fixed.json')
        poses = _poses(self.pairs)
        poses[constants.CAMERA_FAST] = []
        dataset_mod.write_poses(target, poses)
        parsed_args = self.check_parser(
            self.cmd, ['--poses', self.poses, '--out', self.out,
                       '--apply-to', target, '--poses-out', rewritten],
            [('poses_out', rewritten)])
        self.cmd.take_action(parsed_args)
        fixed = dataset_mod.read_poses(rewritten)
        self.assertEqual(6, len(fixed[constants.CAMERA_FAST]))
        for (_, fast), (_, expected) in zip(fixed[constants.CAMERA_FAST],
                                            self.pairs):
            self.assertArrayAlmostEqual(expected.translation,
                                        fast.translation)
            self.assertTrue(fast.rotation.same_rotation(expected.rotation,
                                                        1e-9))

    def test_apply_to_needs_output(self):
        parsed_args = self.check_parser(
            self.cmd, ['--poses', self.poses, '--out', self.out,
                       '--apply-to', self.poses], [])
        self.assertRaises(exceptions.InvalidConfiguration,
                          self.cmd.take_action, parsed_args)

    def test_no_pairs(self):
        poses = _poses(self.pairs)
        poses[constants.CAMERA_FAST] = []
        dataset_mod.write_poses(self.poses, poses)
        parsed_args = self.check_parser(
            self.cmd, ['--poses', self.poses, '--out', self.out], [])
        self.assertRaises(exceptions.EmptyInput, self.cmd.take_action,
                          parsed_args)
