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

# Exposure fusion weights (strict inequalities).
WELL_THRESHOLD = 0.98
FAST_THRESHOLD = 0.1

GAMMA_SEARCH_RANGE = (1.0, 4.0)
GAMMA_TOLERANCE = 1e-6

# Perspective crops taken from every panorama frame.
VIEW_FOV = 120.0
VIEW_SIZE = 960
VIEW_LAYOUT = [[float(yaw), 0.0] for yaw in range(0, 360, 45)]

TRAIN_SAMPLES = 96
RENDER_SAMPLES = 192
RENDER_CHUNK = 8192
DEPTH_EPSILON = 1e-6

CAMERA_WELL = 'well'
CAMERA_FAST = 'fast'
CAMERAS = (CAMERA_WELL, CAMERA_FAST)

MODE_TWO_STAGE = 'two_stage'
MODE_ONE_STEP = 'one_step'
MODE_LINEARIZE_BEFORE = 'linearize_before'
TRAIN_MODES = (MODE_TWO_STAGE, MODE_ONE_STEP, MODE_LINEARIZE_BEFORE)

CHECKPOINT_VERSION = 1
FIELD_FORMAT_VERSION = 1

# Dataset layout
META_NAME = 'meta.json'
POSES_NAME = 'poses.json'
PROBES_NAME = 'probes.json'
MASKS_DIR = 'masks'
PROBES_DIR = 'probes'
DEFAULT_FPS = 15.0

# Run output layout
CHECKPOINT_NAME = 'checkpoint.pt'
CHECKPOINT_PATTERN = 'checkpoint-%d.pt'
TRAIN_LOG_NAME = 'train_log.csv'
RUN_CONFIG_NAME = 'run.yaml'
TRAIN_LOG_COLUMNS = ('iteration', 'stage', 'loss_well', 'loss_fast',
                     'wall_ms')

# Metrics
PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
REC709_LUMA = (0.2126, 0.7152, 0.0722)
ANGULAR_MIN_NORM = 1e-8
PU_TABLE = os.path.join(os.path.dirname(__file__), 'data', 'pu21.yaml')
PU_TABLE_FIT = 'banding_glare'
PU_MEDIAN_LUMINANCE = 100.0

GROUP_LDR_PANO = 'ldr_pano'
GROUP_HDR_PANO = 'hdr_pano'
GROUP_HDR_RENDER = 'hdr_render'
GROUP_LDR_RENDER = 'ldr_render'
METRIC_GROUPS = {
    GROUP_LDR_PANO: ('psnr', 'ssim'),
    GROUP_HDR_PANO: ('pu_psnr', 'pu_ssim', 'rmse', 'si_rmse', 'rgb_angular'),
    GROUP_HDR_RENDER: ('si_rmse', 'rmse', 'rgb_angular'),
    GROUP_LDR_RENDER: ('psnr',),
}
# Columns kept in the report schema but never computed.
RESERVED_METRICS = {
    GROUP_LDR_PANO: ('lpips',),
    GROUP_HDR_PANO: ('hdr_vdp3',),
}
CLI_GROUPS = {
    'ldr': (GROUP_LDR_PANO,),
    'hdr': (GROUP_HDR_PANO,),
    'render': (GROUP_HDR_RENDER, GROUP_LDR_RENDER),
}

IBL_SAMPLES = 512

# Synthetic rig mounted on the monopod: quarter turn about the vertical
# axis and a small sideways offset, both in the world frame.
RIG_ROTATION_DEGREES = 90.0
RIG_TRANSLATION = (0.05, 0.0, 0.0)
ORACLE_QUADRATURE = 8
