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
from dualexpo import dataset
from dualexpo import exceptions
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import utils


class ValidateDataset(command.Command):
    """Validate a capture dataset directory"""

    log = logging.getLogger(__name__ + ".ValidateDataset")

    def get_parser(self, prog_name):
        parser = super(ValidateDataset, self).get_parser(prog_name)
        parser.add_argument('--dataset', required=True,
                            help="Dataset directory.")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        self.error_count = 0

        data, problems = dataset.inspect_dataset(parsed_args.dataset)
        for problem in problems:
            self.log.error('ERROR: %s', problem)
            self.error_count += 1

        if data is not None:
            self.log.info("Checking exposures of %r", data)
            report = dataset.exposure_report(data)
            for camera in constants.CAMERAS:
                self.log.info("%s camera: %.4f%% saturated", camera,
                              100 * report[camera]['saturated'])
            if report[constants.CAMERA_FAST]['saturated'] > 0:
                self.log.warning(
                    'WARNING: %.4f%% of the fast exposure is saturated, '
                    'the brightest sources will be clipped.',
                    100 * report[constants.CAMERA_FAST]['saturated'])

        if self.error_count == 0:
            print('SUCCESS: found 0 errors')
        else:
            print('FAILURE: found %d errors' % self.error_count)
            raise exceptions.DatasetError(
                "%s: found %d errors" % (parsed_args.dataset,
                                         self.error_count))


def _parse_view(text):
    yaw, pitch = utils.parse_float_list(text, 2, 'view (yaw,pitch)')
    return [yaw, pitch]


class ExtractViews(command.Command):
    """Write perspective crops of every panorama of a dataset"""

    log = logging.getLogger(__name__ + ".ExtractViews")

    def get_parser(self, prog_name):
        parser = super(ExtractViews, self).get_parser(prog_name)
        parser.add_argument('--dataset', required=True,
                            help="Dataset directory.")
        parser.add_argument('--out', required=True,
                            help="Output directory.")
        parser.add_argument('--camera', choices=constants.CAMERAS,
                            action='append', dest='cameras',
                            help="Camera to extract, repeatable "
                                 "(default: both).")
        parser.add_argument('--fov', type=float, default=constants.VIEW_FOV,
                            help="Horizontal field of view in degrees.")
        parser.add_argument('--size', type=int, default=constants.VIEW_SIZE,
                            help="Width and height of every crop.")
        parser.add_argument('--view', type=_parse_view, action='append',
                            dest='layout', metavar='<yaw,pitch>',
                            help="View direction in degrees, repeatable "
                                 "(default: eight views around the "
                                 "horizon).")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        data = dataset.load_dataset(parsed_args.dataset)
        cameras = parsed_args.cameras or list(constants.CAMERAS)
        entries = []
        for camera in cameras:
            out_dir = utils.ensure_directory(
                os.path.join(parsed_args.out, camera))
            for frame in data.frames(camera):
                cam = geometry.EquirectCamera(frame.image.width,
                                              frame.image.height, frame.pose)
                views = geometry.extract_perspective_views(
                    frame.image, cam, parsed_args.fov, parsed_args.size,
                    parsed_args.layout)
                for k, (image, view_cam) in enumerate(views):
                    name = '%s-%d' % (frame.id, k)
                    imaging.write_image(
                        os.path.join(out_dir, name + '.png'), image)
                    if image.mask is not None:
                        imaging.write_mask(
                            os.path.join(out_dir, name + '-mask.png'),
                            image.mask)
                    entry = {'id': name, 'camera': camera,
                             'frame': frame.id}
                    entry.update(view_cam.to_dict())
                    entries.append(entry)
        utils.write_json(os.path.join(parsed_args.out, 'views.json'),
                         {'views': entries})
        print("Wrote %d views to %s" % (len(entries), parsed_args.out))
