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

#include "rotpauli/mitigation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "rotpauli/errors.hpp"
#include "rotpauli/parallel.hpp"
#include "rotpauli/random.hpp"

namespace rotpauli {

namespace {

enum Role { kControl, kTarget };

struct RotationSlot {
    Role qubit;
    Pauli1 axis;
    std::size_t angle;
    double sign;
};

// Angle indices: 0-2 control X/Y/Z, 3-5 target X/Y/Z, 6 + 3(a-1) + (b-1) for
// the two-qubit generator with control label a and target label b.
constexpr std::size_t kXX = 6, kXY = 7, kXZ = 8, kYX = 9, kYY = 10, kYZ = 11, kZX = 12, kZY = 13, kZZ = 14;

// Between the skeleton CX gates each slot's rotation is conjugated into the
// listed two-qubit generator (with the listed sign).
constexpr RotationSlot kSegment1[3] = {
    {kControl, Pauli1::X, kXX, 1.0}, {kControl, Pauli1::Y, kYX, 1.0}, {kTarget, Pauli1::Y, kZY, 1.0}};
constexpr RotationSlot kSegment2[3] = {
    {kControl, Pauli1::Y, kXZ, 1.0}, {kControl, Pauli1::X, kYZ, -1.0}, {kTarget, Pauli1::Y, kZX, 1.0}};
constexpr RotationSlot kSegment3[3] = {
    {kControl, Pauli1::X, kXY, 1.0}, {kControl, Pauli1::Y, kYY, 1.0}, {kTarget, Pauli1::Z, kZZ, 1.0}};
constexpr RotationSlot kFinal[6] = {{kControl, Pauli1::X, 0, 1.0}, {kControl, Pauli1::Y, 1, 1.0},
                                    {kControl, Pauli1::Z, 2, 1.0}, {kTarget, Pauli1::X, 3, 1.0},
                                    {kTarget, Pauli1::Y, 4, 1.0},  {kTarget, Pauli1::Z, 5, 1.0}};

PauliString full_register_pauli(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> four(0, 3);
    PauliString p(n);
    for (std::size_t q = 0; q < n; ++q) {
        p.set(q, static_cast<Pauli1>(four(rng)));
    }
    return p;
}

GateLayer pauli_layer(const PauliString& p) {
    std::vector<std::size_t> all(p.num_qubits());
    for (std::size_t q = 0; q < all.size(); ++q) {
        all[q] = q;
    }
    return GateLayer{Gate::paulis(p, all)};
}

}  // namespace

std::vector<PauliString> CorrectionElement::local_generators() {
    return rotpauli::local_generators(ConnectivityGraph::line(2));
}

CorrectionElement CorrectionElement::from_estimate(std::size_t control, std::size_t target,
                                                   std::span<const PauliString> generators,
                                                   std::span<const double> theta) {
    if (generators.size() != theta.size() || generators.empty()) {
        throw std::invalid_argument("one angle per generator required");
    }
    std::size_t n = generators[0].num_qubits();
    if (control >= n || target >= n || control == target) {
        throw std::invalid_argument("invalid correction edge");
    }
    CorrectionElement e;
    e.control = control;
    e.target = target;
    std::vector<std::size_t> pair{control, target};
    auto local = local_generators();
    for (std::size_t k = 0; k < local.size(); ++k) {
        PauliString full = PauliString::embed(local[k], pair, n);
        bool found = false;
        for (std::size_t g = 0; g < generators.size(); ++g) {
            if (generators[g] == full) {
                e.theta[k] = theta[g];
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::invalid_argument("estimate lacks generator " + full.str());
        }
    }
    return e;
}

std::vector<GateLayer> build_correction_element(const CorrectionElement& element, bool corrected_cx) {
    if (element.control == element.target) {
        throw std::invalid_argument("correction element needs two distinct qubits");
    }
    for (double t : element.theta) {
        if (!std::isfinite(t)) {
            throw std::invalid_argument("non-finite correction angle");
        }
    }
    std::size_t c = element.control;
    std::size_t t = element.target;
    std::vector<GateLayer> out;
    auto rotate = [&](const RotationSlot& slot) {
        PauliString axis(1);
        axis.set(0, slot.axis);
        std::size_t q = slot.qubit == kControl ? c : t;
        out.push_back(GateLayer{{Gate::rp(axis, {q}, -slot.sign * element.theta[slot.angle])}});
    };
    auto cx = [&] { out.push_back(GateLayer{{Gate::cx(c, t)}}); };
    auto rz = [&](double phi) { out.push_back(GateLayer{{Gate::rz(t, phi)}}); };
    const double quarter = std::numbers::pi / 2;

    if (!corrected_cx) {
        cx();
    }
    for (const auto& s : kSegment1) {
        rotate(s);
    }
    rz(quarter);
    cx();
    for (const auto& s : kSegment2) {
        rotate(s);
    }
    rz(-quarter);
    cx();
    for (const auto& s : kSegment3) {
        rotate(s);
    }
    rz(-quarter);
    cx();
    rz(quarter);
    for (const auto& s : kFinal) {
        rotate(s);
    }
    return out;
}

Channel fragment_channel(const std::vector<GateLayer>& fragment) {
    auto layers = std::make_shared<std::vector<GateLayer>>(fragment);
    return [layers](DensityMatrix& rho) {
        for (const auto& layer : *layers) {
            apply_layer(rho, layer);
        }
    };
}

CorrectedLayerFactory correction_element_factory(const NoisyLayer& layer, std::size_t control,
                                                 std::size_t target) {
    layer.validate();
    if (!layer.noise.graph().has_edge(control, target)) {
        throw std::invalid_argument("correction element must sit on a graph edge");
    }
    auto base = std::make_shared<NoisyLayer>(layer);
    return [base, control, target](std::span<const double> accumulated) -> Channel {
        Channel noisy = instantiate(*base);
        auto element =
            CorrectionElement::from_estimate(control, target, base->noise.generators(), accumulated);
        Channel fix = fragment_channel(build_correction_element(element));
        return [noisy, fix](DensityMatrix& rho) {
            noisy(rho);
            fix(rho);
        };
    };
}

PauliString conjugate_pauli(const GateLayer& layer, const PauliString& p, int* sign) {
    PauliString out = p;
    int s = 1;
    for (const Gate& g : layer.gates) {
        if (g.qubits.size() > 2) {
            throw std::invalid_argument("gate acts on too many qubits");
        }
        PauliString local = out.restrict_to(g.qubits);
        if (local.is_identity()) {
            continue;
        }
        TransferMatrix t = unitary_ptm(g.matrix());
        std::size_t j = local.lex_index();
        std::size_t hit = 0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < (std::size_t{1} << (2 * g.qubits.size())); ++i) {
            double v = t(i, j);
            if (std::abs(v) > 1e-9) {
                ++hits;
                hit = i;
            }
        }
        if (hits != 1 || std::abs(std::abs(t(hit, j)) - 1.0) > 1e-9) {
            throw std::invalid_argument("gate " + g.name() + " is not Clifford");
        }
        if (t(hit, j) < 0) {
            s = -s;
        }
        PauliString mapped = PauliString::from_lex_index(g.qubits.size(), hit);
        for (std::size_t k = 0; k < g.qubits.size(); ++k) {
            out.set(g.qubits[k], mapped[k]);
        }
    }
    if (sign != nullptr) {
        *sign = s;
    }
    return out;
}

TwirlSet build_twirl_set(const GateLayer& layer, std::size_t num_qubits,
                         std::span<const std::size_t> qubits) {
    layer.validate(num_qubits);
    if (!layer.is_clifford()) {
        throw std::invalid_argument("Pauli twirling requires a Clifford layer");
    }
    TwirlSet set;
    std::size_t count = std::size_t{1} << (2 * qubits.size());
    for (std::size_t i = 0; i < count; ++i) {
        PauliString before =
            PauliString::embed(PauliString::from_lex_index(qubits.size(), i), qubits, num_qubits);
        set.pairs.push_back({before, conjugate_pauli(layer, before)});
    }
    return set;
}

Channel twirl_average(const Channel& layer, const TwirlSet& set) {
    if (set.pairs.empty()) {
        throw std::invalid_argument("empty twirl set");
    }
    auto pairs = std::make_shared<std::vector<TwirlPair>>(set.pairs);
    return [layer, pairs](DensityMatrix& rho) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
        for (const auto& pair : *pairs) {
            DensityMatrix copy = rho;
            apply_pauli(copy, pair.before);
            layer(copy);
            apply_pauli(copy, pair.after);
            acc += copy.matrix();
        }
        rho.mutable_matrix() = acc / static_cast<double>(pairs->size());
    };
}

std::vector<Circuit> pauli_twirl(const Circuit& circuit, std::span<const std::size_t> layer_indices,
                                 std::size_t samples, std::uint64_t seed) {
    std::vector<bool> twirled(circuit.layers.size(), false);
    for (std::size_t i : layer_indices) {
        if (i >= circuit.layers.size()) {
            throw std::invalid_argument("twirled layer index out of range");
        }
        if (!circuit.layers[i].is_clifford()) {
            throw std::invalid_argument("layer " + std::to_string(i) +
                                        " is not Clifford and cannot be twirled");
        }
        twirled[i] = true;
    }
    std::vector<Circuit> out;
    out.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        std::mt19937_64 rng(derive_seed(seed, s));
        Circuit c;
        c.num_qubits = circuit.num_qubits;
        for (std::size_t i = 0; i < circuit.layers.size(); ++i) {
            if (!twirled[i]) {
                c.add(circuit.layers[i], circuit.noise[i]);
                continue;
            }
            PauliString before = full_register_pauli(circuit.num_qubits, rng);
            PauliString after = conjugate_pauli(circuit.layers[i], before);
            c.add(pauli_layer(before));
            c.add(circuit.layers[i], circuit.noise[i]);
            c.add(pauli_layer(after));
        }
        out.push_back(std::move(c));
    }
    return out;
}

QuasiProbability pec_inverse(const PauliRates& rates) {
    auto f = rates_to_eigenvalues(rates);
    std::size_t l = rates.support().size();
    std::vector<double> inv(f.size());
    for (std::size_t b = 0; b < f.size(); ++b) {
        if (!(f[b] > 0.0)) {
            throw NumericalError("Pauli channel eigenvalue of " + PauliString::from_lex_index(l, b).str() +
                                 " is not positive; the channel cannot be inverted");
        }
        inv[b] = 1.0 / f[b];
    }
    QuasiProbability q;
    q.support = rates.support();
    q.weights = inverse_walsh_hadamard(l, inv);
    q.gamma = 0.0;
    for (double w : q.weights) {
        q.gamma += std::abs(w);
    }
    return q;
}

PecInverse pec_inverse(std::span<const PauliRates> rates) {
    PecInverse out;
    for (const auto& r : rates) {
        if (r.error_probability() == 0.0) {
            continue;
        }
        out.factors.push_back(pec_inverse(r));
        out.gamma *= out.factors.back().gamma;
    }
    return out;
}

void apply_quasi_inverse(DensityMatrix& rho, const PecInverse& inverse) {
    for (const auto& f : inverse.factors) {
        apply_weighted_paulis(rho, f.support, f.weights);
    }
}

DensityMatrix pec_exhaustive_state(const PecExperiment& experiment) {
    if (!experiment.layer) {
        throw std::invalid_argument("PEC experiment has no layer channel");
    }
    Channel layer =
        experiment.twirl.pairs.empty() ? experiment.layer : twirl_average(experiment.layer, experiment.twirl);
    DensityMatrix rho = prepare_product_state(experiment.preparation);
    for (std::size_t m = 0; m < experiment.repetitions; ++m) {
        layer(rho);
        apply_quasi_inverse(rho, experiment.inverse);
    }
    return rho;
}

PecEstimate pec_exhaustive(const PecExperiment& experiment, const PauliString& observable) {
    PecEstimate e;
    e.value = expectation(pec_exhaustive_state(experiment), observable);
    e.gamma = std::pow(experiment.inverse.gamma, static_cast<double>(experiment.repetitions));
    return e;
}

double parity_expectation(const Histogram& hist, const PauliString& observable) {
    auto support = observable.support();
    std::uint64_t total = 0;
    double acc = 0.0;
    for (const auto& [bits, count] : hist) {
        if (bits.size() != observable.num_qubits()) {
            throw std::invalid_argument("bitstring length differs from the observable");
        }
        std::size_t ones = 0;
        for (std::size_t q : support) {
            ones += bits[q] == '1' ? 1 : 0;
        }
        acc += (ones & 1) ? -static_cast<double>(count) : static_cast<double>(count);
        total += count;
    }
    if (total == 0) {
        throw std::invalid_argument("empty histogram");
    }
    return acc / static_cast<double>(total);
}

double parity_expectation(std::span<const double> probabilities, const PauliString& observable) {
    std::size_t n = observable.num_qubits();
    if (probabilities.size() != (std::size_t{1} << n)) {
        throw std::invalid_argument("probability vector length differs from the observable");
    }
    std::uint64_t mask = 0;
    for (std::size_t q : observable.support()) {
        mask |= std::uint64_t{1} << (n - 1 - q);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += (std::popcount(i & mask) & 1) ? -probabilities[i] : probabilities[i];
    }
    return acc;
}

std::vector<PecSample> pec_sample(const PecExperiment& experiment, const std::vector<Pauli1>& basis,
                                  std::size_t ensemble, std::uint64_t shots, std::uint64_t seed,
                                  std::size_t threads) {
    if (ensemble == 0) {
        throw std::invalid_argument("ensemble size must be at least 1");
    }
    if (!experiment.layer) {
        throw std::invalid_argument("PEC experiment has no layer channel");
    }
    std::size_t n = experiment.preparation.size();
    if (basis.size() != n) {
        throw std::invalid_argument("basis length differs from the register");
    }
    std::vector<std::vector<double>> abs_weights;
    for (const auto& f : experiment.inverse.factors) {
        std::vector<double> w;
        for (double x : f.weights) {
            w.push_back(std::abs(x));
        }
        abs_weights.push_back(std::move(w));
    }
    double gamma_total = std::pow(experiment.inverse.gamma, static_cast<double>(experiment.repetitions));

    std::vector<PecSample> samples(ensemble);
    parallel_for(ensemble, threads, [&](std::size_t i) {
        std::uint64_t member_seed = derive_seed(seed, i);
        std::mt19937_64 rng(member_seed);
        DensityMatrix rho = prepare_product_state(experiment.preparation);
        double sign = 1.0;
        for (std::size_t m = 0; m < experiment.repetitions; ++m) {
            if (!experiment.twirl.pairs.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, experiment.twirl.pairs.size() - 1);
                const auto& pair = experiment.twirl.pairs[pick(rng)];
                apply_pauli(rho, pair.before);
                experiment.layer(rho);
                apply_pauli(rho, pair.after);
            } else {
                experiment.layer(rho);
            }
            for (std::size_t f = 0; f < experiment.inverse.factors.size(); ++f) {
                const auto& factor = experiment.inverse.factors[f];
                std::discrete_distribution<std::size_t> draw(abs_weights[f].begin(), abs_weights[f].end());
                std::size_t a = draw(rng);
                if (factor.weights[a] < 0) {
                    sign = -sign;
                }
                if (a != 0) {
                    PauliString local = PauliString::from_lex_index(factor.support.size(), a);
                    apply_pauli(rho, PauliString::embed(local, factor.support.qubits, n));
                }
            }
        }
        PecSample& out = samples[i];
        out.weight = gamma_total * sign;
        if (shots == 0) {
            out.probabilities = basis_probabilities(rho, basis);
        } else {
            out.counts = sample_counts(rho, basis, shots, derive_seed(member_seed, 1));
        }
    });
    return samples;
}

PecEstimate pec_combine(std::span<const PecSample> samples, const PauliString& observable, double gamma) {
    if (samples.empty()) {
        throw std::invalid_argument("no PEC samples");
    }
    std::vector<double> values;
    values.reserve(samples.size());
    std::uint64_t shots = 0;
    for (const auto& s : samples) {
        double v = s.counts.empty() ? parity_expectation(s.probabilities, observable)
                                    : parity_expectation(s.counts, observable);
        if (!s.counts.empty()) {
            shots = total_shots(s.counts);
        }
        values.push_back(s.weight * v);
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    std::size_t count = values.size();
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    PecEstimate e;
    e.value = mean;
    e.gamma = gamma;
    e.ensemble = count;
    e.shots = shots;
    e.standard_error =
        count > 1 ? std::sqrt(var / static_cast<double>(count - 1) / static_cast<double>(count)) : 0.0;
    return e;
}

PecEstimate pec_estimate(const PecExperiment& experiment, const PauliString& observable, std::size_t ensemble,
                         std::uint64_t shots, std::uint64_t seed, std::size_t threads) {
    std::size_t n = experiment.preparation.size();
    if (observable.num_qubits() != n) {
        throw std::invalid_argument("observable size differs from the register");
    }
    std::vector<Pauli1> basis(n, Pauli1::Z);
    for (std::size_t q : observable.support()) {
        basis[q] = observable[q];
    }
    auto samples = pec_sample(experiment, basis, ensemble, shots, seed, threads);
    auto e = pec_combine(samples, observable,
                         std::pow(experiment.inverse.gamma, static_cast<double>(experiment.repetitions)));
    e.shots = shots;
    return e;
}

double state_fidelity(const DensityMatrix& sigma, const DensityMatrix& rho) {
    if (sigma.dim() != rho.dim()) {
        throw std::invalid_argument("fidelity needs states of equal size");
    }
    auto psd_root = [](const DensityMatrix& s) {
        Eigen::MatrixXcd h = 0.5 * (s.matrix() + s.matrix().adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        if (es.eigenvalues().minCoeff() < -1e-8) {
            throw std::invalid_argument("fidelity input is not positive semidefinite");
        }
        Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Eigen::MatrixXcd(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint());
    };
    // pure input: F = Tr[rho sigma] exactly, the root route loses ~sqrt(eps)
    auto purity = [](const DensityMatrix& s) { return (s.matrix() * s.matrix()).trace().real(); };
    if (purity(rho) > 1.0 - 1e-12 || purity(sigma) > 1.0 - 1e-12) {
        psd_root(rho);
        psd_root(sigma);
        double overlap = (rho.matrix() * sigma.matrix()).trace().real();
        return std::clamp(overlap, 0.0, 1.0);
    }
    Eigen::MatrixXcd r = psd_root(rho);
    psd_root(sigma);
    Eigen::MatrixXcd inner = r * sigma.matrix() * r;
    inner = 0.5 * (inner + inner.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner, Eigen::EigenvaluesOnly);
    double acc = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(acc * acc, 0.0, 1.0);
}

Reconstruction reconstruct_state(const PauliVector& v) {
    DensityMatrix raw = devectorize(v);
    Eigen::MatrixXcd h = 0.5 * (raw.matrix() + raw.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Reconstruction out;
    if (es.eigenvalues().minCoeff() >= 0.0) {
        out.state = DensityMatrix::from_matrix(h, false);
        return out;
    }
    Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    double total = clipped.sum();
    if (total <= 0.0) {
        throw NumericalError("reconstructed operator has no positive eigenvalue");
    }
    clipped /= total;
    Eigen::MatrixXcd projected = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    out.projection_distance = (projected - h).norm();
    out.state = DensityMatrix::from_matrix(projected, false);
    return out;
}

}  // namespace rotpauli
