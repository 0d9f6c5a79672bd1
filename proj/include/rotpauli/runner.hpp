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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rotpauli/characterization.hpp"
#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/mitigation.hpp"
#include "rotpauli/noise_model.hpp"
#include "rotpauli/serialization.hpp"

namespace rotpauli {

/// Where the injected noise model comes from. Explicit angle and rate
/// entries are applied on top of the source.
struct NoiseSpec {
    enum class Source { kNone, kRandom, kFile };
    Source source = Source::kNone;
    std::uint64_t seed = 0;
    double theta_max = 0.0;
    double p_max = 0.0;
    std::filesystem::path path;
    std::vector<std::pair<PauliString, double>> theta;
    std::vector<PauliRates> rates;
};

/// Idle layer (one noisy identity) or two noisy CX gates on the edge.
enum class EchoLayer { kIdentity, kCxPair };

struct EchoSettings {
    Edge edge{0, 1};
    std::string preparation = "0+";
    std::size_t max_repetitions = 16;
    EchoLayer layer = EchoLayer::kIdentity;
    /// Sampled mode draws this many random twirls per repetition count.
    std::size_t twirl_samples = 32;
    bool mitigate = false;
    std::size_t rounds = 2;
};

enum class PecMethod { kExhaustive, kSampled };

struct MitigationSettings {
    Edge edge{0, 1};
    EchoLayer layer = EchoLayer::kIdentity;
    std::size_t max_repetitions = 8;
    std::size_t rounds = 2;
    std::vector<std::string> preparations;
    std::size_t twirl_samples = 32;
    PecMethod pec = PecMethod::kExhaustive;
    std::size_t ensemble = 280;
    std::uint64_t pec_shots = 512;
};

struct CharacterizationSettings {
    std::size_t max_repetitions = 3;
    std::size_t rounds = 1;
    ProblemOptions problem;
    PlanOptions plan;
    bool save_raw = true;
};

/// A complete run description. Two runs of the same config produce
/// byte-identical files regardless of the thread count.
struct ExperimentConfig {
    ConnectivityGraph graph;
    GateLayer layer;
    NoiseSpec noise;
    std::uint64_t seed = 1;
    ExecutionMode mode = ExecutionMode::kExact;
    std::uint64_t shots = 128;
    std::size_t threads = 1;
    std::filesystem::path output_dir = "rotpauli-out";
    double readout_p01 = 0.0;
    double readout_p10 = 0.0;
    bool mitigate_readout = true;
    CharacterizationSettings characterization;
    EchoSettings echo;
    MitigationSettings mitigation;
};

/// Validates every field before returning. Errors are ConfigError with the
/// JSON path and, where it can be located, the line of the offending entry.
/// Relative model paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved config without the thread count and output directory.
Json config_to_json(const ExperimentConfig& config);

LayerNoiseModel build_noise_model(const ExperimentConfig& config);
/// The qubit and edge terms of `edge` as a two-qubit model (edge qubits
/// become 0 and 1).
LayerNoiseModel restrict_model(const LayerNoiseModel& model, Edge edge);

/// Everything a run produces. `raw` holds simulated measurement data,
/// `derived` holds every table computed from `raw` and the config.
struct RunArtifact {
    std::string kind;
    Json config;
    Json model;
    Json raw;
    Json derived;
};

RunArtifact run_echo(const ExperimentConfig& config);
RunArtifact run_characterization(const ExperimentConfig& config);
RunArtifact run_mitigation_pipeline(const ExperimentConfig& config);

/// Recomputes `derived` from `raw`, the config and the model.
Json derive(const std::string& kind, const ExperimentConfig& config, const LayerNoiseModel& model,
            const Json& raw);

enum class PlotFormat { kCsv, kJson };

/// File name -> contents.
std::map<std::string, std::string> emit_plot_data(const RunArtifact& artifact, PlotFormat format);

/// run.json, raw.json (when present), derived.json and the plot data.
void write_artifact(const RunArtifact& artifact, const std::filesystem::path& dir,
                    PlotFormat format = PlotFormat::kCsv);
RunArtifact read_artifact(const std::filesystem::path& dir);
/// Re-derives an artifact read from disk.
RunArtifact rederive(const RunArtifact& artifact, const std::filesystem::path& base_dir);

}  // namespace rotpauli
