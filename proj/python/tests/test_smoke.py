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

import json

import pytest

import rotpauli

LINE2 = {"schema": "rotpauli.config/1", "device": {"preset": "line", "num_qubits": 2}}


def test_pauli_products():
    assert rotpauli.multiply("X", "Y") == ("Z", 1)
    assert rotpauli.multiply("Y", "X") == ("Z", 3)
    assert rotpauli.multiply("XZ", "XZ") == ("II", 0)
    assert not rotpauli.commutes("XI", "ZI")
    assert rotpauli.commutes("XX", "ZZ")
    assert rotpauli.lex_index("ZZ") == 15
    assert rotpauli.structure_constant("Z", "X", "Y") in (-2.0, 2.0)


def test_tree_protocol_counts():
    config = {
        "schema": "rotpauli.config/1",
        "device": {"preset": "seven_qubit_tree"},
        "layer": [
            {"gate": "cx", "qubits": [0, 1]},
            {"gate": "h", "qubits": [2]},
            {"gate": "sx", "qubits": [3]},
            {"gate": "x", "qubits": [4]},
            {"gate": "cx", "qubits": [5, 6]},
        ],
    }
    counts = rotpauli.protocol_counts(config, 4)
    assert counts == {"preparations": 216, "bases": 27, "circuits": 23328}


def test_config_errors_raise():
    bad = dict(LINE2, shotz=3)
    with pytest.raises(rotpauli.ConfigError, match="unknown key"):
        rotpauli.validate_config(bad)
    with pytest.raises(ValueError):
        rotpauli.validate_config("{not json")


def test_characterize_recovers_injected_angle():
    config = dict(
        LINE2,
        layer=[{"gate": "cx", "qubits": [0, 1]}],
        noise={"theta": [{"generator": "YZ", "theta": 0.02}]},
    )
    out = rotpauli.run("characterize", config)
    assert out["kind"] == "characterize"
    assert out["derived"]["dominant_two_qubit"] == "YZ"
    assert out["derived"]["diagnostics"]["max_abs_error"] < 5e-4


def test_echo_and_files(tmp_path):
    config = dict(LINE2, noise={"theta": [{"generator": "YZ", "theta": 0.03}]}, echo={"max_repetitions": 8})
    out = rotpauli.run("echo", config, output_dir=tmp_path)
    assert "twirled" in json.dumps(out["derived"])
    assert (tmp_path / "run.json").exists()
    assert (tmp_path / "derived.json").exists()
