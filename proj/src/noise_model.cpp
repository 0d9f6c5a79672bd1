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

#include "rotpauli/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace rotpauli {

std::vector<LocalSupport> noise_supports(const ConnectivityGraph& graph) {
    std::vector<LocalSupport> out;
    for (std::size_t q = 0; q < graph.num_qubits(); ++q) {
        out.push_back({{q}});
    }
    for (const auto& [a, b] : graph.edges()) {
        out.push_back({{a, b}});
    }
    return out;
}

LayerNoiseModel::LayerNoiseModel(ConnectivityGraph graph)
    : graph_(std::move(graph)), generators_(local_generators(graph_)), theta_(generators_.size(), 0.0) {
    for (auto& support : noise_supports(graph_)) {
        rates_.push_back(PauliRates::zero(std::move(support)));
    }
}

std::size_t LayerNoiseModel::generator_index(const PauliString& generator) const {
    auto it = std::find(generators_.begin(), generators_.end(), generator);
    if (it == generators_.end()) {
        throw std::invalid_argument("generator " + generator.str() + " is not part of the model");
    }
    return static_cast<std::size_t>(it - generators_.begin());
}

void LayerNoiseModel::set_theta(std::span<const double> theta) {
    if (theta.size() != generators_.size()) {
        throw std::invalid_argument("expected " + std::to_string(generators_.size()) + " angles, got " +
                                    std::to_string(theta.size()));
    }
    for (double t : theta) {
        if (!std::isfinite(t)) {
            throw std::invalid_argument("non-finite rotation angle");
        }
    }
    theta_.assign(theta.begin(), theta.end());
}

void LayerNoiseModel::set_theta(std::size_t index, double value) {
    if (index >= theta_.size()) {
        throw std::invalid_argument("generator index out of range");
    }
    if (!std::isfinite(value)) {
        throw std::invalid_argument("non-finite rotation angle");
    }
    theta_[index] = value;
}

void LayerNoiseModel::set_theta(const PauliString& generator, double value) {
    set_theta(generator_index(generator), value);
}

double LayerNoiseModel::theta_of(const PauliString& generator) const {
    return theta_[generator_index(generator)];
}

std::size_t LayerNoiseModel::support_index(const LocalSupport& support) const {
    if (support.size() == 1 && support.qubits[0] < num_qubits()) {
        return support.qubits[0];
    }
    if (support.size() == 2) {
        Edge e{std::min(support.qubits[0], support.qubits[1]),
               std::max(support.qubits[0], support.qubits[1])};
        const auto& edges = graph_.edges();
        auto it = std::find(edges.begin(), edges.end(), e);
        if (it != edges.end() && support.qubits[0] < support.qubits[1]) {
            return num_qubits() + static_cast<std::size_t>(it - edges.begin());
        }
    }
    std::string text;
    for (std::size_t q : support.qubits) {
        text += " " + std::to_string(q);
    }
    throw std::invalid_argument("support {" + text + " } is not a qubit or an ordered edge of the graph");
}

void LayerNoiseModel::set_rates(const PauliRates& rates) {
    rates_[support_index(rates.support())] = rates;
}

bool LayerNoiseModel::has_pauli_noise() const {
    for (const auto& r : rates_) {
        if (r.error_probability() > 0.0) {
            return true;
        }
    }
    return false;
}

bool LayerNoiseModel::has_coherent_noise() const {
    return max_abs_theta() > 0.0;
}

void LayerNoiseModel::set_small_noise_limit(double limit) {
    if (!(limit > 0.0)) {
        throw std::invalid_argument("small-noise limit must be positive");
    }
    small_noise_limit_ = limit;
}

bool LayerNoiseModel::in_small_noise_regime() const {
    return max_abs_theta() <= small_noise_limit_;
}

double LayerNoiseModel::max_abs_theta() const {
    double m = 0.0;
    for (double t : theta_) {
        m = std::max(m, std::abs(t));
    }
    return m;
}

void NoisyLayer::validate() const {
    ideal.validate(noise.num_qubits());
    for (const Gate& g : ideal.gates) {
        if (g.qubits.size() == 2 && !noise.graph().has_edge(g.qubits[0], g.qubits[1])) {
            throw std::invalid_argument("two-qubit gate " + g.name() + " is not on a graph edge");
        }
    }
}

Channel noise_channel(const LayerNoiseModel& model) {
    std::vector<PauliString> active;
    std::vector<double> angles;
    for (std::size_t k = 0; k < model.generators().size(); ++k) {
        if (model.theta()[k] != 0.0) {
            active.push_back(model.generators()[k]);
            angles.push_back(model.theta()[k]);
        }
    }
    auto qubits = std::make_shared<std::vector<std::size_t>>(joint_support(active));
    auto unitary = std::make_shared<Eigen::MatrixXcd>();
    if (!active.empty()) {
        *unitary = rotation_unitary(active, angles, *qubits);
    }
    auto rates = std::make_shared<std::vector<PauliRates>>();
    for (const auto& r : model.rates()) {
        if (r.error_probability() > 0.0) {
            rates->push_back(r);
        }
    }
    std::size_t n = model.num_qubits();
    return [n, qubits, unitary, rates](DensityMatrix& rho) {
        if (rho.num_qubits() != n) {
            throw std::invalid_argument("noise model and state sizes differ");
        }
        apply_pauli_channel(rho, *rates);
        if (!qubits->empty()) {
            apply_unitary(rho, *unitary, *qubits);
        }
    };
}

Channel instantiate(const NoisyLayer& layer) {
    layer.validate();
    Channel noise = noise_channel(layer.noise);
    auto ideal = std::make_shared<GateLayer>(layer.ideal);
    return [ideal, noise](DensityMatrix& rho) {
        apply_layer(rho, *ideal);
        noise(rho);
    };
}

void Circuit::add(GateLayer layer, int noise_index) {
    layers.push_back(std::move(layer));
    noise.push_back(noise_index);
}

void run_circuit(DensityMatrix& rho, const Circuit& circuit, std::span<const Channel> noise_channels) {
    if (circuit.noise.size() != circuit.layers.size()) {
        throw std::invalid_argument("circuit needs one noise tag per layer");
    }
    if (rho.num_qubits() != circuit.num_qubits) {
        throw std::invalid_argument("circuit and state sizes differ");
    }
    for (std::size_t i = 0; i < circuit.layers.size(); ++i) {
        apply_layer(rho, circuit.layers[i]);
        int tag = circuit.noise[i];
        if (tag >= 0) {
            if (static_cast<std::size_t>(tag) >= noise_channels.size()) {
                throw std::invalid_argument("layer " + std::to_string(i) +
                                            " refers to a missing noise channel");
            }
            noise_channels[static_cast<std::size_t>(tag)](rho);
        }
    }
}

LayerNoiseModel random_model(const ConnectivityGraph& graph, std::uint64_t seed, double theta_max,
                             double p_max) {
    if (!(theta_max >= 0.0) || !(p_max >= 0.0) || p_max > 1.0) {
        throw std::invalid_argument("random_model bounds must satisfy theta_max >= 0 and 0 <= p_max <= 1");
    }
    LayerNoiseModel model(graph);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> theta(model.generators().size());
    for (double& t : theta) {
        t = theta_max * (2.0 * unit(rng) - 1.0);
    }
    model.set_theta(theta);
    for (const auto& support : noise_supports(graph)) {
        std::size_t count = support.num_paulis() - 1;
        double cap = p_max / static_cast<double>(count);
        std::vector<double> rates(count);
        for (double& p : rates) {
            p = cap * unit(rng);
        }
        model.set_rates(PauliRates(support, rates));
    }
    return model;
}

double commutation_bound(const LayerNoiseModel& model) {
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& r : model.rates()) {
        for (std::size_t a = 1; a < r.rates().size(); ++a) {
            lo = std::min(lo, r.rates()[a]);
            hi = std::max(hi, r.rates()[a]);
        }
    }
    if (hi < lo) {
        return 0.0;
    }
    return (hi - lo) * model.max_abs_theta();
}

ModelDiff model_diff(const LayerNoiseModel& a, const LayerNoiseModel& b) {
    if (!(a.graph() == b.graph())) {
        throw std::invalid_argument("model_diff requires models on the same graph");
    }
    ModelDiff d;
    d.generators = a.generators();
    double sum_theta = 0.0;
    for (std::size_t k = 0; k < a.theta().size(); ++k) {
        double delta = b.theta()[k] - a.theta()[k];
        d.theta_delta.push_back(delta);
        sum_theta += std::abs(delta);
        if (a.generators()[k].weight() == 1) {
            d.max_single_qubit_theta = std::max(d.max_single_qubit_theta, std::abs(delta));
        } else {
            d.max_two_qubit_theta = std::max(d.max_two_qubit_theta, std::abs(delta));
        }
    }
    if (!d.theta_delta.empty()) {
        d.mean_abs_theta = sum_theta / static_cast<double>(d.theta_delta.size());
    }
    double sum_rate = 0.0;
    std::size_t count_rate = 0;
    for (std::size_t s = 0; s < a.rates().size(); ++s) {
        d.supports.push_back(a.rates()[s].support());
        std::vector<double> row;
        for (std::size_t i = 1; i < a.rates()[s].rates().size(); ++i) {
            double delta = b.rates()[s].rates()[i] - a.rates()[s].rates()[i];
            row.push_back(delta);
            sum_rate += std::abs(delta);
            ++count_rate;
            d.max_rate = std::max(d.max_rate, std::abs(delta));
        }
        d.rate_delta.push_back(std::move(row));
    }
    if (count_rate > 0) {
        d.mean_abs_rate = sum_rate / static_cast<double>(count_rate);
    }
    return d;
}

}  // namespace rotpauli
