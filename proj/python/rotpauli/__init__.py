# Copyright 2026 The rotpauli Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the rotpauli C++ core."""

import json
from pathlib import Path

from ._core import (
    ConfigError,
    NumericalError,
    __version__,
    commutes,
    lex_index,
    multiply,
    structure_constant,
)
from . import _core

__all__ = [
    "ConfigError",
    "NumericalError",
    "__version__",
    "commutes",
    "lex_index",
    "multiply",
    "structure_constant",
    "protocol_counts",
    "validate_config",
    "run",
]


def _text(config):
    if isinstance(config, (str, bytes)):
        return config
    return json.dumps(config)


def protocol_counts(config, max_repetitions=3):
    """Preparations, measurement bases and circuit count for a config's layer."""
    return dict(_core.protocol_counts(_text(config), max_repetitions))


def validate_config(config, base_dir=""):
    """Resolved config as a dict; raises ConfigError."""
    return json.loads(_core.validate_config(_text(config), str(base_dir)))


def run(kind, config, base_dir="", threads=0, output_dir=None):
    """Run 'echo', 'characterize' or 'mitigate'. Returns kind/config/model/derived."""
    out = "" if output_dir is None else str(Path(output_dir))
    return json.loads(_core.run(kind, _text(config), str(base_dir), threads, out))
