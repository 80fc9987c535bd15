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

import numpy as np
import yaml

from dualexpo import imaging
from dualexpo.tests import fakes


def write_scene(directory):
    path = os.path.join(directory, 'scene.yaml')
    with open(path, 'w') as f:
        yaml.safe_dump(fakes.SCENE, f)
    return path


def write_dataset(directory, frames=2, height=4, probes=1):
    root = os.path.join(directory, 'data')
    fakes.make_dataset(frames=frames, height=height, probes=probes,
                       out_dir=root)
    return root


def write_run_file(directory, dataset_root, **train):
    settings = fakes.train_config(**train).to_dict()
    run = {
        'dataset': dataset_root,
        'output': 'run',
        'train': settings,
        'field': fakes.field_config().to_dict(),
    }
    path = os.path.join(directory, 'run.yaml')
    with open(path, 'w') as f:
        yaml.safe_dump(run, f)
    return path


def write_hdr(path, height=16, seed=0):
    rng = np.random.default_rng(seed)
    img = imaging.ImageBuffer(rng.uniform(0.01, 2.0, (height, 2 * height, 3)),
                              imaging.HDR)
    imaging.write_image(path, img)
    return path
