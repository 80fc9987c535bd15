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

from cliff import show

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import imaging
from dualexpo import metrics
from dualexpo import relight


def parse_groups(text):
    """Expand ``ldr,hdr,render`` into metric group names."""
    groups = []
    for name in text.split(','):
        name = name.strip()
        if name in constants.CLI_GROUPS:
            groups.extend(constants.CLI_GROUPS[name])
        elif name in constants.METRIC_GROUPS:
            groups.append(name)
        else:
            raise exceptions.InvalidConfiguration(
                "Unknown metric group %r, expected any of %s"
                % (name, ', '.join(sorted(constants.CLI_GROUPS))))
    return list(dict.fromkeys(groups))


class Evaluate(show.ShowOne):
    """Compare a predicted HDR panorama with the ground truth"""

    log = logging.getLogger(__name__ + ".Evaluate")

    def get_parser(self, prog_name):
        parser = super(Evaluate, self).get_parser(prog_name)
        parser.add_argument('--pred', required=True,
                            help="Predicted HDR panorama (PFM).")
        parser.add_argument('--gt', required=True,
                            help="Ground truth HDR panorama (PFM).")
        parser.add_argument('--groups', type=parse_groups,
                            default=parse_groups('ldr,hdr'),
                            help="Comma separated metric groups among "
                                 "ldr, hdr and render (default: ldr,hdr).")
        parser.add_argument('--mask',
                            help="Validity mask (PNG), e.g. the hole mask "
                                 "written by render-hdr.")
        parser.add_argument('--gamma', type=float, default=2.2,
                            help="Response used for the LDR groups.")
        parser.add_argument('--exposure', type=float, default=1.0,
                            help="Exposure scale of the LDR groups.")
        parser.add_argument('--render-env', dest='render_env',
                            action='store_true',
                            help="Also compute the render groups on IBL "
                                 "renders lit by both panoramas.")
        parser.add_argument('--render-size', dest='render_size', type=int,
                            default=64, help="Size of the IBL renders.")
        parser.add_argument('--out', help="Write the report as JSON.")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        pred = imaging.read_image(parsed_args.pred)
        gt = imaging.read_image(parsed_args.gt)
        if pred.shape != gt.shape:
            raise exceptions.DimensionMismatch(
                "%s is %dx%d but %s is %dx%d"
                % (parsed_args.pred, pred.width, pred.height,
                   parsed_args.gt, gt.width, gt.height))
        mask = None
        if parsed_args.mask:
            mask = imaging.read_mask(parsed_args.mask)

        groups = list(parsed_args.groups)
        if parsed_args.render_env:
            groups.extend(g for g in constants.CLI_GROUPS['render']
                          if g not in groups)
        renders = None
        if any(g in constants.CLI_GROUPS['render'] for g in groups):
            size = parsed_args.render_size
            renders = (relight.render_ibl(pred, size, size),
                       relight.render_ibl(gt, size, size))

        report = metrics.evaluate(pred, gt, imaging.CRF(parsed_args.gamma),
                                  parsed_args.exposure, groups, mask,
                                  renders)
        if parsed_args.out:
            with open(parsed_args.out, 'w') as f:
                f.write(report.to_json())
                f.write('\n')
        self.log.debug("\n%s", report.to_table())

        rows = [r for r in report.rows() if r[2] is not None]
        columns = tuple('%s.%s' % (group, name) for group, name, _ in rows)
        return columns, tuple(value for _, _, value in rows)
