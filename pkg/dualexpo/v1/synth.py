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

from cliff import command

from dualexpo import imaging
from dualexpo import synth


class SynthScene(command.Command):
    """Render a synthetic dual exposure dataset with ground truth probes"""

    log = logging.getLogger(__name__ + ".SynthScene")

    def get_parser(self, prog_name):
        parser = super(SynthScene, self).get_parser(prog_name)
        parser.add_argument('--scene', required=True,
                            help="Scene description (YAML).")
        parser.add_argument('--frames', type=int, default=60,
                            help="Number of synchronized frame pairs.")
        parser.add_argument('--factor', type=float, default=250.0,
                            help="Exposure factor between the well and the "
                                 "fast camera.")
        parser.add_argument('--gamma', type=float, default=2.2,
                            help="Gamma of the simulated camera response.")
        parser.add_argument('--height', type=int, default=32,
                            help="Panorama height, the width is twice it.")
        parser.add_argument('--probes', type=int, default=2,
                            help="Number of ground truth HDR probes.")
        parser.add_argument('--out', required=True,
                            help="Output dataset directory.")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        seed = self.app.options.seed
        scene = synth.load_scene(parsed_args.scene)
        trajectory = synth.make_rig_trajectory(parsed_args.frames, scene,
                                               seed=seed)
        probes = synth.make_probe_poses(scene, parsed_args.probes, seed=seed)
        dataset = synth.make_dataset(
            scene, trajectory, imaging.ExposureFactor(parsed_args.factor),
            imaging.CRF(parsed_args.gamma), 2 * parsed_args.height,
            parsed_args.height, probes=probes, out_dir=parsed_args.out)
        print("Wrote %d frame pairs and %d probes to %s"
              % (len(dataset.well_frames), len(dataset.probes),
                 parsed_args.out))
