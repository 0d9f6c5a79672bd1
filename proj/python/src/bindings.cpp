// Copyright 2026 The rotpauli Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <string>

#include "rotpauli/characterization.hpp"
#include "rotpauli/errors.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/runner.hpp"
#include "rotpauli/serialization.hpp"

namespace py = pybind11;
using namespace rotpauli;

namespace {

RunArtifact run_kind(const std::string& kind, const ExperimentConfig& config) {
    if (kind == "echo") return run_echo(config);
    if (kind == "characterize") return run_characterization(config);
    if (kind == "mitigate") return run_mitigation_pipeline(config);
    throw std::invalid_argument("unknown run kind '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "rotpauli native core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "multiply",
        [](const std::string& a, const std::string& b) {
            auto r = multiply(PauliString::from_string(a), PauliString::from_string(b));
            return py::make_tuple(r.pauli.str(), static_cast<int>(r.phase));
        },
        py::arg("a"), py::arg("b"), "Product a*b as (label, k) with phase i^k.");
    m.def(
        "commutes",
        [](const std::string& a, const std::string& b) {
            return commutes(PauliString::from_string(a), PauliString::from_string(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "structure_constant",
        [](const std::string& k, const std::string& i, const std::string& j) {
            return structure_constant(PauliString::from_string(k), PauliString::from_string(i),
                                      PauliString::from_string(j));
        },
        py::arg("k"), py::arg("i"), py::arg("j"));
    m.def(
        "lex_index", [](const std::string& p) { return PauliString::from_string(p).lex_index(); },
        py::arg("pauli"));

    m.def(
        "protocol_counts",
        [](const std::string& config_text, std::size_t max_repetitions) {
            auto config = parse_config(config_text);
            auto plan = build_preparation_plan(config.graph, config.layer);
            auto bases = build_measurement_bases(config.graph, plan.subsystems);
            py::dict out;
            out["preparations"] = plan.preparations.size();
            out["bases"] = bases.size();
            out["circuits"] = plan.preparations.size() * bases.size() * max_repetitions;
            return out;
        },
        py::arg("config_text"), py::arg("max_repetitions") = 3);

    m.def(
        "validate_config",
        [](const std::string& config_text, const std::string& base_dir) {
            return dump_json(config_to_json(parse_config(config_text, base_dir)));
        },
        py::arg("config_text"), py::arg("base_dir") = "");

    m.def(
        "run",
        [](const std::string& kind, const std::string& config_text, const std::string& base_dir,
           std::size_t threads, const std::string& output_dir) {
            auto config = parse_config(config_text, base_dir);
            if (threads > 0) config.threads = threads;
            RunArtifact artifact;
            {
                py::gil_scoped_release release;
                artifact = run_kind(kind, config);
                if (!output_dir.empty()) write_artifact(artifact, output_dir);
            }
            Json doc = {{"kind", artifact.kind},
                        {"config", artifact.config},
                        {"model", artifact.model},
                        {"derived", artifact.derived}};
            return dump_json(doc);
        },
        py::arg("kind"), py::arg("config_text"), py::arg("base_dir") = "", py::arg("threads") = 0,
        py::arg("output_dir") = "");

    m.attr("__version__") = ROTPAULI_VERSION;
}
