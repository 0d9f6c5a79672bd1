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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rotpauli/characterization.hpp"
#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/noise_model.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/ptm.hpp"
#include "rotpauli/simulator.hpp"

namespace rotpauli {

/// Angles of a two-qubit coherent correction, in the order of
/// local_generators on a single edge: X, Y, Z on the control, X, Y, Z on the
/// target, then XX, XY, ..., ZZ (control label first).
struct CorrectionElement {
    std::size_t control = 0;
    std::size_t target = 1;
    std::array<double, 15> theta{};

    /// The 15 generators as two-qubit strings over (control, target).
    static std::vector<PauliString> local_generators();
    /// Picks the angles of (control, target) out of a device-wide estimate.
    static CorrectionElement from_estimate(std::size_t control, std::size_t target,
                                           std::span<const PauliString> generators,
                                           std::span<const double> theta);
};

/// Expands to 4 CX gates, 4 fixed Rz(+-pi/2) and 15 single-qubit Pauli
/// rotations that together approximate exp(+i sum_k theta_k P_k) to second
/// order. With all angles zero the fragment is exactly the identity. Without
/// the leading CX the fragment is a corrected CX gate.
std::vector<GateLayer> build_correction_element(const CorrectionElement& element, bool corrected_cx = false);

/// Applies a gate list in order without noise.
Channel fragment_channel(const std::vector<GateLayer>& fragment);

/// Corrects the layer's (control, target) pair with a correction element
/// after every repetition, using the accumulated estimate.
CorrectedLayerFactory correction_element_factory(const NoisyLayer& layer, std::size_t control,
                                                 std::size_t target);

struct TwirlPair {
    PauliString before;
    PauliString after;
};

/// Pauli pairs with after = C before C^dag up to phase for a Clifford layer C.
struct TwirlSet {
    std::vector<TwirlPair> pairs;
};

/// C P C^dag for a Clifford layer, gate by gate. `sign` receives +1 or -1.
PauliString conjugate_pauli(const GateLayer& layer, const PauliString& p, int* sign = nullptr);

/// Every Pauli on `qubits` (4^|qubits| pairs). Throws for non-Clifford layers.
TwirlSet build_twirl_set(const GateLayer& layer, std::size_t num_qubits, std::span<const std::size_t> qubits);

/// Averages before -> `layer` -> after over the whole set.
Channel twirl_average(const Channel& layer, const TwirlSet& set);

/// Wraps the selected layers of `circuit` in a random pair of Paulis over
/// all qubits, independently for each sample and each layer.
std::vector<Circuit> pauli_twirl(const Circuit& circuit, std::span<const std::size_t> layer_indices,
                                 std::size_t samples, std::uint64_t seed);

/// Signed weights over the local Paulis of one support.
struct QuasiProbability {
    LocalSupport support;
    std::vector<double> weights;
    double gamma = 1.0;
};

/// Product of per-support quasi-probabilities inverting a Pauli channel.
struct PecInverse {
    std::vector<QuasiProbability> factors;
    double gamma = 1.0;
};

/// Throws NumericalError when an eigenvalue is not positive.
QuasiProbability pec_inverse(const PauliRates& rates);
PecInverse pec_inverse(std::span<const PauliRates> rates);

/// Applies the quasi-channel sum_a q_a P_a . P_a of every factor.
void apply_quasi_inverse(DensityMatrix& rho, const PecInverse& inverse);

/// prepare -> m x (optional twirl pair, layer) with the PEC inverse inserted
/// after each repetition.
struct PecExperiment {
    ProductState preparation;
    std::size_t repetitions = 1;
    Channel layer;
    /// Optional twirl set applied around every repetition.
    TwirlSet twirl;
    PecInverse inverse;
};

struct PecEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    double gamma = 1.0;
    std::size_t ensemble = 0;
    std::uint64_t shots = 0;
};

/// The quasi-propagated operator with every insertion enumerated exactly
/// (twirls are averaged exactly as well).
DensityMatrix pec_exhaustive_state(const PecExperiment& experiment);
PecEstimate pec_exhaustive(const PecExperiment& experiment, const PauliString& observable);

/// One sampled PEC circuit measured in a product basis. `weight` is
/// gamma^m times the product of insertion signs. Sampled circuits fill
/// `counts`; a zero shot count fills exact `probabilities` instead.
struct PecSample {
    double weight = 1.0;
    Histogram counts;
    std::vector<double> probabilities;
};

/// Draws `ensemble` circuits (member i uses derive_seed(seed, i)).
std::vector<PecSample> pec_sample(const PecExperiment& experiment, const std::vector<Pauli1>& basis,
                                  std::size_t ensemble, std::uint64_t shots, std::uint64_t seed,
                                  std::size_t threads = 1);

/// Mean and standard error of weight * parity over the samples. The basis
/// used for sampling must agree with `observable` on its support.
PecEstimate pec_combine(std::span<const PecSample> samples, const PauliString& observable, double gamma);

/// Importance sampling of insertions (and twirl pairs) with finite shots,
/// measured in the observable's basis (Z elsewhere). A zero shot count uses
/// exact probabilities per sampled circuit.
PecEstimate pec_estimate(const PecExperiment& experiment, const PauliString& observable, std::size_t ensemble,
                         std::uint64_t shots, std::uint64_t seed, std::size_t threads = 1);

/// Parity estimate of a Pauli observable from a histogram measured in a
/// basis that agrees with the observable on its support.
double parity_expectation(const Histogram& hist, const PauliString& observable);
/// Same from outcome probabilities indexed as in basis_probabilities.
double parity_expectation(std::span<const double> probabilities, const PauliString& observable);

/// (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double state_fidelity(const DensityMatrix& sigma, const DensityMatrix& rho);

struct Reconstruction {
    DensityMatrix state;
    /// Frobenius distance between the raw and projected matrices.
    double projection_distance = 0.0;
};

/// Builds the state from its Pauli vector and clips negative eigenvalues.
Reconstruction reconstruct_state(const PauliVector& v);

}  // namespace rotpauli
