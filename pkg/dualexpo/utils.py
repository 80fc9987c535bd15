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

import json
import logging
import os

import numpy as np
import yaml

from dualexpo import exceptions


LOG = logging.getLogger(__name__)


def env(*names, **kwargs):
    """Return the first environment variable set, or the default

    :param names: Environment variable names, checked in order
    :type  names: string

    :param default: Value returned when none of the variables is set
    """
    for name in names:
        value = os.environ.get(name)
        if value:
            return value
    return kwargs.get('default', '')


def all_unique(x):
    """Return True if the collection has no duplications."""
    return len(set(x)) == len(x)


def ensure_directory(path):
    """Create the directory (and parents) if it does not exist yet."""
    if path and not os.path.isdir(path):
        os.makedirs(path)
    return path


def load_yaml(path):
    """Load a YAML document, returning an empty dict for empty files."""
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
    except IOError as e:
        raise exceptions.InvalidConfiguration(
            "%s: %s" % (path, e.strerror or e))
    except yaml.YAMLError as e:
        raise exceptions.InvalidConfiguration("%s: %s" % (path, e))
    return data or {}


def dump_yaml(path, data):
    with open(path, 'w') as f:
        yaml.safe_dump(data, f, default_flow_style=None, sort_keys=False)
    return path


def load_json(path):
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except IOError as e:
        raise exceptions.InvalidConfiguration(
            "%s: %s" % (path, e.strerror or e))
    except ValueError as e:
        raise exceptions.InvalidConfiguration("%s: %s" % (path, e))


def write_json(path, data):
    """Write ``data`` as indented JSON and return the path."""
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')
    LOG.debug("Wrote %s", path)
    return path


def seeded_rng(seed, *stream):
    """Return a numpy generator for the given seed and stream position

    Generators built from the same ``(seed, *stream)`` key always produce
    the same sequence, so any position of a stream can be re-created
    without replaying the ones before it.
    """
    return np.random.default_rng([int(seed)] + [int(s) for s in stream])


def parse_float_list(text, count, what='value'):
    """Parse ``count`` comma separated floats from a string."""
    try:
        values = [float(v) for v in text.split(',')]
    except (AttributeError, ValueError):
        raise exceptions.InvalidConfiguration(
            "Malformed %s: %r" % (what, text))
    if len(values) != count:
        raise exceptions.InvalidConfiguration(
            "Malformed %s: expected %d numbers, got %d"
            % (what, count, len(values)))
    if not np.all(np.isfinite(values)):
        raise exceptions.InvalidConfiguration(
            "Malformed %s: non-finite number in %r" % (what, text))
    return values


def chunks(total, size):
    """Yield ``slice`` objects covering ``range(total)`` in steps of size."""
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))
