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
import os

from cliff import command

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import relight
from dualexpo import trainer
from dualexpo import utils


def parse_pose(text):
    """Parse ``qw,qx,qy,qz,tx,ty,tz`` into a pose."""
    try:
        return geometry.Pose.from_list(
            utils.parse_float_list(text, 7, 'pose (qw,qx,qy,qz,tx,ty,tz)'))
    except exceptions.DegenerateInput as e:
        raise exceptions.InvalidConfiguration("Malformed pose: %s" % e)


def hole_mask_path(path):
    return os.path.splitext(path)[0] + '-holes.png'


class RenderHdr(command.Command):
    """Render the HDR environment map of a trained field at a pose"""

    log = logging.getLogger(__name__ + ".RenderHdr")

    def get_parser(self, prog_name):
        parser = super(RenderHdr, self).get_parser(prog_name)
        parser.add_argument('--checkpoint', required=True,
                            help="Training checkpoint.")
        parser.add_argument('--pose', required=True,
                            metavar='<qw,qx,qy,qz,tx,ty,tz>',
                            help="Camera pose of the panorama.")
        parser.add_argument('--height', type=int, default=128,
                            help="Panorama height, the width is twice it.")
        parser.add_argument('--samples', type=int,
                            default=constants.RENDER_SAMPLES,
                            help="Samples per ray.")
        parser.add_argument('--out', required=True,
                            help="Output HDR panorama (PFM).")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        pose = parse_pose(parsed_args.pose)
        if not parsed_args.out.lower().endswith('.pfm'):
            raise exceptions.InvalidConfiguration(
                "HDR output must be a .pfm file: %s" % parsed_args.out)
        field, crf, crf_fast, ef = trainer.load_checkpoint_field(
            parsed_args.checkpoint)
        cam = geometry.EquirectCamera(2 * parsed_args.height,
                                      parsed_args.height, pose)
        hdr, holes = trainer.recover_hdr_panorama(
            field, cam, crf, ef, crf_fast, parsed_args.samples)
        imaging.write_image(parsed_args.out, hdr)
        imaging.write_mask(hole_mask_path(parsed_args.out), ~holes)
        print("Wrote %s (%d hole pixels)" % (parsed_args.out,
                                             int(holes.sum())))


class RenderIbl(command.Command):
    """Render a diffuse sphere lit by an HDR environment map"""

    log = logging.getLogger(__name__ + ".RenderIbl")

    def get_parser(self, prog_name):
        parser = super(RenderIbl, self).get_parser(prog_name)
        parser.add_argument('--env', required=True,
                            help="Equirectangular HDR environment (PFM).")
        parser.add_argument('--size', type=int, default=128,
                            help="Width and height of the render.")
        parser.add_argument('--samples', type=int,
                            default=constants.IBL_SAMPLES,
                            help="Hemisphere samples per pixel.")
        parser.add_argument('--gamma', type=float, default=2.2,
                            help="Response used for PNG output.")
        parser.add_argument('--exposure', type=float, default=1.0,
                            help="Exposure scale used for PNG output.")
        parser.add_argument('--out', required=True,
                            help="Output render, HDR for .pfm and "
                                 "tone-mapped for .png.")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        env = imaging.read_image(parsed_args.env)
        render = relight.render_ibl(env, parsed_args.size, parsed_args.size,
                                    samples=parsed_args.samples)
        if not parsed_args.out.lower().endswith('.pfm'):
            render = imaging.expose(render, parsed_args.exposure,
                                    imaging.CRF(parsed_args.gamma))
        imaging.write_image(parsed_args.out, render)
        print("Wrote %s" % parsed_args.out)
