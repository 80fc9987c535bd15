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

"""Exception definitions"""


class InvalidConfiguration(ValueError):
    """Invalid parameters were specified for a run"""
    pass


class EmptyInput(ValueError):
    """An operation received no usable input"""
    pass


class DegenerateInput(ValueError):
    """The input does not determine a unique answer"""
    pass


class OutOfRange(ValueError):
    """A pixel or parameter lies outside its valid range"""
    pass


class DimensionMismatch(ValueError):
    """Two images or arrays do not have matching shapes"""
    pass


class ImageFormatError(IOError):
    """An image file could not be read or written"""
    pass


class DatasetError(ValueError):
    """A capture dataset is malformed or inconsistent"""
    pass


class NoForwardRecorded(RuntimeError):
    """Backward was requested without a recorded forward pass"""
    pass


class TrainingDiverged(RuntimeError):
    """The training loss became NaN or infinite"""
    pass


class CheckpointError(IOError):
    """A checkpoint file could not be read"""
    pass


class CheckpointVersionMismatch(CheckpointError):
    """The checkpoint was written by an incompatible format version"""
    pass


class MetricError(ValueError):
    """A metric cannot be computed on the given images"""
    pass
