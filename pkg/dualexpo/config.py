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

"""Run configuration files

A run file is a YAML mapping::

    dataset: path/to/dataset
    output: path/to/run
    train: {iters_stage1: 2000, iters_stage2: 2000, mode: two_stage}
    field: {grid_resolutions: [16, 32, 64]}
    metrics: [ldr_pano, hdr_pano]
    probes: [{id: p0, q: [1, 0, 0, 0], t: [0, 0, 1]}]
    layout: [[0, 0], [90, 0]]

Relative dataset and output paths are resolved against the directory of
the run file.
"""

import logging
import os

from dualexpo import constants
from dualexpo import dataset as dataset_mod
from dualexpo import exceptions
from dualexpo import field
from dualexpo import trainer
from dualexpo import utils


LOG = logging.getLogger(__name__)

KEYS = ('dataset', 'output', 'train', 'field', 'metrics', 'probes',
        'layout')


class RunConfig(object):

    def __init__(self, dataset=None, output=None, train=None,
                 field_config=None, metrics=None, probes=None, layout=None):
        self.dataset = dataset
        self.output = output
        self.train = train if train is not None else trainer.TrainConfig()
        self.field = field_config if field_config is not None \
            else field.FieldConfig()
        self.metrics = list(metrics) if metrics is not None else \
            [constants.GROUP_LDR_PANO, constants.GROUP_HDR_PANO]
        unknown = set(self.metrics) - set(constants.METRIC_GROUPS)
        if unknown:
            raise exceptions.InvalidConfiguration(
                "Unknown metric groups: %s" % ', '.join(sorted(unknown)))
        self.probes = list(probes or [])
        self.layout = None if layout is None else \
            [[float(yaw), float(pitch)] for yaw, pitch in layout]

    @classmethod
    def from_dict(cls, data, base_dir=None, default_seed=None):
        """Build a run configuration from a parsed run file

        :param default_seed: training seed used when the file sets none
        """
        data = dict(data or {})
        unknown = set(data) - set(KEYS)
        if unknown:
            raise exceptions.InvalidConfiguration(
                "Unknown run settings: %s" % ', '.join(sorted(unknown)))

        def resolve(path):
            if path and base_dir and not os.path.isabs(path):
                return os.path.normpath(os.path.join(base_dir, path))
            return path

        train = dict(data.get('train') or {})
        if default_seed is not None:
            train.setdefault('seed', default_seed)

        try:
            probes = [dataset_mod.Probe.from_dict(p)
                      for p in data.get('probes') or []]
        except exceptions.DegenerateInput as e:
            raise exceptions.InvalidConfiguration("Bad probe pose: %s" % e)
        return cls(dataset=resolve(data.get('dataset')),
                   output=resolve(data.get('output')),
                   train=trainer.TrainConfig.from_dict(train),
                   field_config=field.FieldConfig.from_dict(
                       data.get('field')),
                   metrics=data.get('metrics'),
                   probes=probes,
                   layout=data.get('layout'))

    def to_dict(self):
        return {
            'dataset': self.dataset,
            'output': self.output,
            'train': self.train.to_dict(),
            'field': self.field.to_dict(),
            'metrics': list(self.metrics),
            'probes': [p.to_dict() for p in self.probes],
            'layout': self.layout,
        }

    def __eq__(self, other):
        return isinstance(other, RunConfig) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other


def load_run_config(path, default_seed=None):
    data = utils.load_yaml(path)
    if not isinstance(data, dict):
        raise exceptions.InvalidConfiguration(
            "%s: a run file must be a mapping" % path)
    config = RunConfig.from_dict(data, os.path.dirname(
        os.path.abspath(path)), default_seed)
    LOG.debug("Loaded run configuration from %s", path)
    return config


def save_run_config(path, config):
    return utils.dump_yaml(path, config.to_dict())
