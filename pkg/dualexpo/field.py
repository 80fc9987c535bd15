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

"""Shared-density radiance field with a well and a fast color head

A stack of dense feature grids is sampled trilinearly and fed to a density
head and an embedding head. The embedding, together with the encoded view
direction, is decoded by two independent color heads, one per exposure.
"""

import collections
import logging
import math
import pickle

import torch
from torch import nn
from torch.nn import functional as F

from dualexpo import constants
from dualexpo import exceptions


LOG = logging.getLogger(__name__)

HEADS = ('well', 'fast', 'both')
GROUPS = ('shared', 'well', 'fast')

_ACTIVATIONS = {
    'relu': nn.ReLU,
    'softplus': nn.Softplus,
}
_DTYPES = {
    'float32': torch.float32,
    'float64': torch.float64,
}


class FieldConfig(object):
    """Capacity and initialization of a :class:`RadianceField`"""

    def __init__(self, grid_resolutions=(16, 32, 64, 128),
                 features_per_level=4, embedding_dim=16,
                 color_head_hidden=(32, 32), direction_encoding_bands=4,
                 bounds=((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
                 head_activation='relu', initial_density=0.1,
                 grid_init_scale=1e-4, dtype='float32'):
        self.grid_resolutions = [int(r) for r in grid_resolutions]
        self.features_per_level = int(features_per_level)
        self.embedding_dim = int(embedding_dim)
        self.color_head_hidden = [int(h) for h in color_head_hidden]
        self.direction_encoding_bands = int(direction_encoding_bands)
        self.bounds = [[float(v) for v in bounds[0]],
                       [float(v) for v in bounds[1]]]
        self.head_activation = head_activation
        self.initial_density = float(initial_density)
        self.grid_init_scale = float(grid_init_scale)
        self.dtype = dtype
        self.validate()

    def validate(self):
        if not self.grid_resolutions or min(self.grid_resolutions) < 2:
            raise exceptions.InvalidConfiguration(
                "Every grid level needs a resolution of at least 2")
        for name in ('features_per_level', 'embedding_dim'):
            if getattr(self, name) <= 0:
                raise exceptions.InvalidConfiguration(
                    "%s must be positive" % name)
        if any(h <= 0 for h in self.color_head_hidden):
            raise exceptions.InvalidConfiguration(
                "Color head layer sizes must be positive")
        if self.direction_encoding_bands < 0:
            raise exceptions.InvalidConfiguration(
                "direction_encoding_bands cannot be negative")
        lo, hi = self.bounds
        if len(lo) != 3 or len(hi) != 3 or \
                any(h <= l for l, h in zip(lo, hi)):
            raise exceptions.InvalidConfiguration(
                "Degenerate field bounds %s" % (self.bounds,))
        if self.head_activation not in _ACTIVATIONS:
            raise exceptions.InvalidConfiguration(
                "Unknown head activation %r, expected one of %s"
                % (self.head_activation, ', '.join(sorted(_ACTIVATIONS))))
        if self.dtype not in _DTYPES:
            raise exceptions.InvalidConfiguration(
                "Unknown dtype %r" % self.dtype)
        if not self.initial_density > 0:
            raise exceptions.InvalidConfiguration(
                "initial_density must be positive")

    @property
    def torch_dtype(self):
        return _DTYPES[self.dtype]

    @property
    def grid_features(self):
        return len(self.grid_resolutions) * self.features_per_level

    @property
    def direction_features(self):
        return 3 + 6 * self.direction_encoding_bands

    def parameter_counts(self):
        """Number of scalar parameters in each partition group."""
        grids = self.features_per_level * sum(
            r ** 3 for r in self.grid_resolutions)
        shared = grids + (self.grid_features + 1) * (1 + self.embedding_dim)
        sizes = ([self.embedding_dim + self.direction_features] +
                 self.color_head_hidden + [3])
        head = sum((a + 1) * b for a, b in zip(sizes[:-1], sizes[1:]))
        return {'shared': shared, 'well': head, 'fast': head}

    def to_dict(self):
        return {
            'grid_resolutions': list(self.grid_resolutions),
            'features_per_level': self.features_per_level,
            'embedding_dim': self.embedding_dim,
            'color_head_hidden': list(self.color_head_hidden),
            'direction_encoding_bands': self.direction_encoding_bands,
            'bounds': [list(self.bounds[0]), list(self.bounds[1])],
            'head_activation': self.head_activation,
            'initial_density': self.initial_density,
            'grid_init_scale': self.grid_init_scale,
            'dtype': self.dtype,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        unknown = set(data) - set(cls().to_dict())
        if unknown:
            raise exceptions.InvalidConfiguration(
                "Unknown field settings: %s" % ', '.join(sorted(unknown)))
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, FieldConfig) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'FieldConfig(%r)' % self.to_dict()


FieldSample = collections.namedtuple(
    'FieldSample', ['density', 'embedding', 'color_well', 'color_fast'])


def encode_direction(d, bands):
    """Identity plus sine and cosine of ``2^k pi d`` for ``k < bands``."""
    parts = [d]
    for k in range(bands):
        scaled = (2.0 ** k) * math.pi * d
        parts.append(torch.sin(scaled))
        parts.append(torch.cos(scaled))
    return torch.cat(parts, dim=-1)


def _color_head(config):
    sizes = ([config.embedding_dim + config.direction_features] +
             config.color_head_hidden + [3])
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(nn.Linear(a, b, dtype=config.torch_dtype))
        if i < len(sizes) - 2:
            layers.append(_ACTIVATIONS[config.head_activation]())
    return nn.Sequential(*layers)


class RadianceField(nn.Module):

    def __init__(self, config=None, seed=0):
        super(RadianceField, self).__init__()
        self.config = config if config is not None else FieldConfig()
        dtype = self.config.torch_dtype
        self.grids = nn.ParameterList([
            nn.Parameter(torch.empty(
                (1, self.config.features_per_level, r, r, r), dtype=dtype))
            for r in self.config.grid_resolutions])
        self.density_head = nn.Linear(self.config.grid_features, 1,
                                      dtype=dtype)
        self.embedding_head = nn.Linear(self.config.grid_features,
                                        self.config.embedding_dim,
                                        dtype=dtype)
        self.well_head = _color_head(self.config)
        self.fast_head = _color_head(self.config)
        lo, hi = self.config.bounds
        self.register_buffer('bounds_lo', torch.tensor(lo, dtype=dtype))
        self.register_buffer('bounds_hi', torch.tensor(hi, dtype=dtype))
        self.reset_parameters(seed)

    @torch.no_grad()
    def reset_parameters(self, seed=0):
        """Deterministically initialize every parameter from ``seed``."""
        generator = torch.Generator().manual_seed(int(seed))
        scale = self.config.grid_init_scale
        for grid in self.grids:
            grid.uniform_(-scale, scale, generator=generator)
        for module in self.modules():
            if isinstance(module, nn.Linear):
                bound = 1.0 / math.sqrt(module.in_features)
                module.weight.uniform_(-bound, bound, generator=generator)
                module.bias.uniform_(-bound, bound, generator=generator)
        # softplus(bias) == initial_density
        self.density_head.bias.fill_(
            math.log(math.expm1(self.config.initial_density)))

    def _grid_features(self, x):
        span = self.bounds_hi - self.bounds_lo
        # grid_sample orders the last axis (W, H, D), the grids are (x, y, z)
        normalized = ((x - self.bounds_lo) / span * 2.0 - 1.0).flip(-1)
        coords = normalized.reshape(1, 1, 1, -1, 3)
        features = []
        for grid in self.grids:
            sampled = F.grid_sample(grid, coords, mode='bilinear',
                                    padding_mode='border',
                                    align_corners=True)
            features.append(sampled.reshape(grid.shape[1], -1).t())
        return torch.cat(features, dim=-1)

    def inside(self, x):
        return torch.all((x >= self.bounds_lo) & (x <= self.bounds_hi),
                         dim=-1)

    def eval_density(self, x):
        """Density and embedding at (N, 3) points

        Points outside the bounds get zero density and a zero embedding.
        """
        x = torch.as_tensor(x, dtype=self.bounds_lo.dtype)
        shape = x.shape[:-1]
        x = x.reshape(-1, 3)
        features = self._grid_features(x)
        inside = self.inside(x)[:, None]
        sigma = F.softplus(self.density_head(features))
        embedding = self.embedding_head(features)
        sigma = torch.where(inside, sigma, torch.zeros_like(sigma))
        embedding = torch.where(inside, embedding,
                                torch.zeros_like(embedding))
        return (sigma.reshape(shape),
                embedding.reshape(shape + (self.config.embedding_dim,)))

    def eval_colors(self, embedding, d, heads='both'):
        """Colors of the selected head(s) as ``(c_well, c_fast)``

        The unselected head is returned as None and is never evaluated.
        """
        if heads not in HEADS:
            raise exceptions.InvalidConfiguration(
                "Unknown heads %r, expected one of %s"
                % (heads, ', '.join(HEADS)))
        d = torch.as_tensor(d, dtype=self.bounds_lo.dtype)
        d = d.expand(embedding.shape[:-1] + (3,))
        inputs = torch.cat(
            [embedding,
             encode_direction(d, self.config.direction_encoding_bands)],
            dim=-1)
        c_well = c_fast = None
        if heads in ('well', 'both'):
            c_well = torch.sigmoid(self.well_head(inputs))
        if heads in ('fast', 'both'):
            c_fast = torch.sigmoid(self.fast_head(inputs))
        return c_well, c_fast

    def forward(self, x, d, heads='both'):
        sigma, embedding = self.eval_density(x)
        c_well, c_fast = self.eval_colors(embedding, d, heads)
        return FieldSample(sigma, embedding, c_well, c_fast)

    def parameter_partition(self):
        """Split the parameters into the shared, well and fast groups."""
        groups = collections.OrderedDict((g, []) for g in GROUPS)
        for name, param in self.named_parameters():
            if name.startswith('well_head.'):
                groups['well'].append(param)
            elif name.startswith('fast_head.'):
                groups['fast'].append(param)
            else:
                groups['shared'].append(param)
        return groups

    def extra_repr(self):
        return 'resolutions=%s, features=%d, embedding=%d' % (
            self.config.grid_resolutions, self.config.features_per_level,
            self.config.embedding_dim)


def backward(field, outputs, upstream):
    """Reverse-mode gradients of recorded outputs

    :param outputs: tensors produced by a forward pass of ``field``
    :type  outputs: sequence of torch.Tensor (None entries are skipped)

    :param upstream: gradients of the loss with respect to each output
    :type  upstream: sequence of torch.Tensor

    :returns: ordered mapping of parameter name to gradient tensor
    """
    pairs = [(o, torch.as_tensor(g, dtype=o.dtype))
             for o, g in zip(outputs, upstream) if o is not None]
    recorded = [(o, g) for o, g in pairs if o.grad_fn is not None]
    if not recorded:
        raise exceptions.NoForwardRecorded(
            "No recorded forward pass to differentiate")
    names, params = zip(*field.named_parameters())
    grads = torch.autograd.grad([o for o, _ in recorded], params,
                                grad_outputs=[g for _, g in recorded],
                                retain_graph=True, allow_unused=True)
    return collections.OrderedDict(
        (name, torch.zeros_like(p) if g is None else g)
        for name, p, g in zip(names, params, grads))


def field_payload(field):
    return {
        'version': constants.FIELD_FORMAT_VERSION,
        'config': field.config.to_dict(),
        'state': field.state_dict(),
    }


def field_from_payload(payload, source='<memory>'):
    try:
        version = payload['version']
        config = FieldConfig.from_dict(payload['config'])
        state = payload['state']
    except (KeyError, TypeError):
        raise exceptions.CheckpointError(
            "%s: not a field checkpoint" % source)
    if version != constants.FIELD_FORMAT_VERSION:
        raise exceptions.CheckpointVersionMismatch(
            "%s: field format version %r, expected %d"
            % (source, version, constants.FIELD_FORMAT_VERSION))
    field = RadianceField(config)
    try:
        field.load_state_dict(state)
    except RuntimeError as e:
        raise exceptions.CheckpointError("%s: %s" % (source, e))
    return field


def load_torch_file(path):
    """torch.load with every failure reported as a CheckpointError."""
    try:
        return torch.load(path, map_location='cpu', weights_only=True)
    except IOError as e:
        raise exceptions.CheckpointError("%s: %s" % (path, e.strerror or e))
    except (RuntimeError, EOFError, ValueError, KeyError, TypeError,
            pickle.UnpicklingError) as e:
        raise exceptions.CheckpointError("%s: unreadable checkpoint (%s)"
                                         % (path, e))


def save_field(path, field):
    torch.save(field_payload(field), path)
    LOG.debug("Saved field to %s", path)
    return path


def load_field(path):
    return field_from_payload(load_torch_file(path), path)
