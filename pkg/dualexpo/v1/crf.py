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

import csv
import logging

from cliff import show

from dualexpo import exceptions
from dualexpo import imaging
from dualexpo import utils


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_pairs(pairs_file):
    """Read ``reflectance,observation`` rows.

    Only the first non-comment row may be a non-numeric header; any other
    row that does not parse is an error naming its line.
    """
    pairs = []
    header_allowed = True
    reader = csv.reader(pairs_file)
    for row in reader:
        if not row or row[0].strip().startswith('#'):
            continue
        try:
            pairs.append((float(row[0]), float(row[1])))
        except (IndexError, ValueError):
            if not (header_allowed and len(row) >= 2 and
                    not _is_number(row[0])):
                raise exceptions.InvalidConfiguration(
                    "Malformed calibration row at line %d: %r"
                    % (reader.line_num, row))
        header_allowed = False
    return pairs


class CalibrateCrf(show.ShowOne):
    """Fit the gamma camera response to color checker observations"""

    log = logging.getLogger(__name__ + ".CalibrateCrf")

    def get_parser(self, prog_name):
        parser = super(CalibrateCrf, self).get_parser(prog_name)
        parser.add_argument('--pairs', required=True,
                            help="CSV of linear reflectance, observed pixel "
                                 "value rows.")
        parser.add_argument('--out', required=True,
                            help="Output file for the response (JSON).")
        return parser

    def take_action(self, parsed_args):
        self.log.debug("take_action(%s)" % parsed_args)

        with open(parsed_args.pairs, 'r') as pairs_file:
            pairs = _read_pairs(pairs_file)
        crf = imaging.fit_gamma(pairs)
        utils.write_json(parsed_args.out, crf.to_dict())
        return ('gamma', 'pairs'), (crf.gamma, len(pairs))
