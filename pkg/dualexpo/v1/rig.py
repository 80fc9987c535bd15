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

import logging
import math

from cliff import show
import numpy as np

from dualexpo import constants
from dualexpo import dataset
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import utils


def pose_pairs(poses):
    """Pair the well and fast poses of a pose file by frame id."""
    fast = dict(poses[constants.CAMERA_FAST])
    pairs = []
    for frame_id, well_pose in poses[constants.CAMERA_WELL]:
        if frame_id in fast:
            pairs.append((well_pose, fast[frame_id]))
    return pairs


def residual_summary(residuals):
    translations = np.array([r[0] for r in residuals])
    angles = np.degrees([r[1] for r in residuals])
    return {
        'translation_mean': float(translations.mean()),
        'translation_max': float(translations.max()),
        'angle_mean_deg': float(np.mean(angles)),
        'angle_max_deg': float(np.max(angles)),
    }


class EstimateRig(show.ShowOne):
    """Estimate the offset of the fast camera from calibration poses"""

    log = logging.getLogger(__name__ + ".EstimateRig")

    def get_parser(self, prog_name):
        parser = super(EstimateRig, self).get_parser(prog_name)
        parser.add_argument('--poses', required=True,
                            help="Pose file of the calibration sequence, "
                                 "both cameras well exposed.")
        parser.add_argument('--out', required=True,
                            help="Output file for the rig offset (JSON).")
        parser.add_argument('--apply-to', dest='apply_to',
                            help="Pose file whose fast poses are replaced "
                                 "by the well poses moved by the offset.")
        parser.add_argument('--poses-out', dest='poses_out',
                            help="Where to write the rewritten pose file.")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        if bool(parsed_args.apply_to) != bool(parsed_args.poses_out):
            raise exceptions.InvalidConfiguration(
                "--apply-to and --poses-out must be given together")

        pairs = pose_pairs(dataset.read_poses(parsed_args.poses))
        if not pairs:
            raise exceptions.EmptyInput("no pose pairs")
        rel = geometry.estimate_relative_pose(pairs)
        summary = residual_summary(geometry.pose_residuals(pairs, rel))
        if summary['angle_max_deg'] > 1.0:
            self.log.warning("Largest rotation residual is %.3f degrees",
                             summary['angle_max_deg'])

        result = rel.to_dict()
        result['pairs'] = len(pairs)
        result['residuals'] = summary
        utils.write_json(parsed_args.out, result)

        if parsed_args.apply_to:
            poses = dataset.read_poses(parsed_args.apply_to)
            poses[constants.CAMERA_FAST] = [
                (frame_id, geometry.apply_relative_pose(pose, rel))
                for frame_id, pose in poses[constants.CAMERA_WELL]]
            dataset.write_poses(parsed_args.poses_out, poses)
            self.log.info("Wrote %d fast poses to %s",
                          len(poses[constants.CAMERA_FAST]),
                          parsed_args.poses_out)

        angle = math.degrees(rel.delta_rotation.angle_to(
            geometry.Quaternion.identity()))
        columns = ('pairs', 'rotation_deg', 'q', 't', 'translation_mean',
                   'translation_max', 'angle_mean_deg', 'angle_max_deg')
        data = (len(pairs), angle, result['q'], result['t'],
                summary['translation_mean'], summary['translation_max'],
                summary['angle_mean_deg'], summary['angle_max_deg'])
        return columns, data
