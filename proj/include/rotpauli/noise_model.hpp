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
#include <span>
#include <vector>

#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/simulator.hpp"

namespace rotpauli {

/// Coherently rotated Pauli noise attached to one gate layer: the layer acts
/// as U_theta o P o U_ideal.
///
/// Pauli supports are every qubit (in qubit order) followed by every edge (in
/// edge order), and are applied in that order.
class LayerNoiseModel {
  public:
    static constexpr double kDefaultSmallNoiseLimit = 0.15;

    LayerNoiseModel() = default;
    /// Zero noise on `graph`.
    explicit LayerNoiseModel(ConnectivityGraph graph);

    const ConnectivityGraph& graph() const { return graph_; }
    std::size_t num_qubits() const { return graph_.num_qubits(); }
    const std::vector<PauliString>& generators() const { return generators_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<PauliRates>& rates() const { return rates_; }

    /// Index of `generator` in generators(); throws if absent.
    std::size_t generator_index(const PauliString& generator) const;
    void set_theta(std::span<const double> theta);
    void set_theta(std::size_t index, double value);
    void set_theta(const PauliString& generator, double value);
    double theta_of(const PauliString& generator) const;

    /// Support index: qubit q -> q, edge e -> n + e.
    std::size_t support_index(const LocalSupport& support) const;
    void set_rates(const PauliRates& rates);
    bool has_pauli_noise() const;
    bool has_coherent_noise() const;

    double small_noise_limit() const { return small_noise_limit_; }
    void set_small_noise_limit(double limit);
    bool in_small_noise_regime() const;
    double max_abs_theta() const;

  private:
    ConnectivityGraph graph_;
    std::vector<PauliString> generators_;
    std::vector<double> theta_;
    std::vector<PauliRates> rates_;
    double small_noise_limit_ = kDefaultSmallNoiseLimit;
};

/// Qubits then edges of a graph, in the order used by LayerNoiseModel.
std::vector<LocalSupport> noise_supports(const ConnectivityGraph& graph);

struct NoisyLayer {
    GateLayer ideal;
    LayerNoiseModel noise;

    /// Throws unless every gate fits the register and two-qubit gates sit on edges.
    void validate() const;
};

/// P followed by the exact U_theta, without the ideal layer.
Channel noise_channel(const LayerNoiseModel& model);
/// U_ideal, then P, then U_theta.
Channel instantiate(const NoisyLayer& layer);

/// A layered circuit; each layer may carry the noise of one model.
struct Circuit {
    std::size_t num_qubits = 0;
    std::vector<GateLayer> layers;
    /// Per layer: index into the noise channel list, or -1 for a noiseless layer.
    std::vector<int> noise;

    void add(GateLayer layer, int noise_index = -1);
};

/// Applies every layer, followed by noise_channels[noise[i]] where tagged.
void run_circuit(DensityMatrix& rho, const Circuit& circuit, std::span<const Channel> noise_channels);

/// Angles uniform in [-theta_max, theta_max]; each non-identity rate uniform
/// in [0, p_max / (4^l - 1)] so the per-support error probability is at most p_max.
LayerNoiseModel random_model(const ConnectivityGraph& graph, std::uint64_t seed, double theta_max,
                             double p_max);

/// max over non-identity rates of |p(i) - p(j)|, times max_k |theta_k|.
double commutation_bound(const LayerNoiseModel& model);

struct ModelDiff {
    std::vector<PauliString> generators;
    std::vector<double> theta_delta;
    std::vector<LocalSupport> supports;
    /// b - a per support, over lex indices 1..4^l-1.
    std::vector<std::vector<double>> rate_delta;

    double max_single_qubit_theta = 0.0;
    double max_two_qubit_theta = 0.0;
    double mean_abs_theta = 0.0;
    double max_rate = 0.0;
    double mean_abs_rate = 0.0;
};

/// Elementwise b - a with summary statistics.
ModelDiff model_diff(const LayerNoiseModel& a, const LayerNoiseModel& b);

}  // namespace rotpauli
