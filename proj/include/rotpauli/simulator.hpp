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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/pauli.hpp"

namespace rotpauli {

/// Dense simulation is limited to this register size.
inline constexpr std::size_t kMaxSimulatedQubits = 10;

/// Dense 2^n x 2^n operator, qubit 0 is the most significant bit of the
/// basis index. Simulator operations keep it a valid state; channel_to_ptm
/// also pushes non-physical operators through the same routines.
class DensityMatrix {
  public:
    DensityMatrix() = default;
    /// |0...0><0...0|.
    explicit DensityMatrix(std::size_t num_qubits);
    /// Wraps a matrix. Validates Hermiticity, unit trace and positivity
    /// unless `check` is false.
    static DensityMatrix from_matrix(Eigen::MatrixXcd matrix, bool check = true);
    static DensityMatrix maximally_mixed(std::size_t num_qubits);

    std::size_t num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    Eigen::MatrixXcd& mutable_matrix() { return matrix_; }

    double trace() const;
    double purity() const;
    double hermiticity_error() const;
    double min_eigenvalue() const;
    /// Throws std::invalid_argument if not a state within the tolerances
    /// (Hermitian 1e-10, trace 1e-10, eigenvalues >= -1e-9).
    void validate() const;

  private:
    std::size_t num_qubits_ = 0;
    Eigen::MatrixXcd matrix_;
};

/// In-place linear map on operators.
using Channel = std::function<void(DensityMatrix&)>;

enum class StateLabel : std::uint8_t { Zero, One, Plus, Minus, PlusI, MinusI };

inline constexpr StateLabel kAllStateLabels[6] = {StateLabel::Zero,  StateLabel::One,   StateLabel::Plus,
                                                  StateLabel::Minus, StateLabel::PlusI, StateLabel::MinusI};

using ProductState = std::vector<StateLabel>;

/// Parses per-qubit labels "0 1 + - r l" ("i" and "-i" are accepted for r and l).
ProductState parse_product_state(std::string_view text);
/// Canonical one-character-per-qubit form using r/l for +i/-i.
std::string to_string(const ProductState& state);
/// Bloch vector (x, y, z) of a single-qubit label.
Eigen::Vector3d bloch_vector(StateLabel label);

DensityMatrix prepare_product_state(const ProductState& state);
DensityMatrix prepare_product_state(std::string_view text);

Eigen::MatrixXcd pauli_matrix(const PauliString& p);

/// rho -> U rho U^dag with U acting on `qubits` (qubits[0] most significant).
void apply_unitary(DensityMatrix& rho, const Eigen::MatrixXcd& unitary, std::span<const std::size_t> qubits);
void apply_gate(DensityMatrix& rho, const Gate& gate);
void apply_layer(DensityMatrix& rho, const GateLayer& layer);
/// rho -> P rho P.
void apply_pauli(DensityMatrix& rho, const PauliString& p);
/// Applies sum_a p(a) P_a rho P_a for each support in order.
void apply_pauli_channel(DensityMatrix& rho, std::span<const PauliRates> channels);
void apply_pauli_channel(DensityMatrix& rho, const PauliRates& channel);
/// Same map with arbitrary real weights over the local Paulis (quasi-channels).
void apply_weighted_paulis(DensityMatrix& rho, const LocalSupport& support, std::span<const double> weights);

/// Qubits touched by any generator, sorted.
std::vector<std::size_t> joint_support(std::span<const PauliString> generators);
/// exp(-i sum_k theta_k P_k) restricted to `qubits` (which must cover every
/// generator's support).
Eigen::MatrixXcd rotation_unitary(std::span<const PauliString> generators, std::span<const double> theta,
                                  std::span<const std::size_t> qubits);
/// Applies exp(-i sum_k theta_k P_k) exactly over the joint support. With a
/// graph, generators must act on one qubit or on one edge.
void apply_coherent_rotation(DensityMatrix& rho, std::span<const PauliString> generators,
                             std::span<const double> theta, const ConnectivityGraph* graph = nullptr);

/// Tr[P rho].
double expectation(const DensityMatrix& rho, const PauliString& p);
/// Reduced state on `qubits`, which become qubits 0..k-1 in the given order.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> qubits);

/// Outcome probabilities when measuring qubit q in basis[q] (X, Y or Z);
/// index bit (n-1-q) is qubit q's outcome, 0 meaning the +1 eigenvalue.
std::vector<double> basis_probabilities(const DensityMatrix& rho, const std::vector<Pauli1>& basis);
std::vector<Pauli1> parse_basis(std::string_view text);

/// Bitstring (qubit 0 leftmost) -> count.
using Histogram = std::map<std::string, std::uint64_t>;

std::string bitstring(std::size_t index, std::size_t num_bits);
Histogram sample_probabilities(std::span<const double> probabilities, std::size_t num_qubits,
                               std::uint64_t shots, std::uint64_t seed);
Histogram sample_counts(const DensityMatrix& rho, const std::vector<Pauli1>& basis, std::uint64_t shots,
                        std::uint64_t seed);
std::uint64_t total_shots(const Histogram& hist);

/// Per-qubit readout error; entry (t, o) is the probability of observing o
/// when the true outcome is t. Rows sum to one.
class ReadoutConfusion {
  public:
    ReadoutConfusion() = default;
    explicit ReadoutConfusion(std::vector<Eigen::Matrix2d> per_qubit);
    static ReadoutConfusion identity(std::size_t num_qubits);
    /// p(1|0) = p01, p(0|1) = p10 on every qubit.
    static ReadoutConfusion uniform(std::size_t num_qubits, double p01, double p10);

    std::size_t num_qubits() const { return matrices_.size(); }
    const Eigen::Matrix2d& qubit(std::size_t q) const { return matrices_.at(q); }
    bool is_identity() const;

  private:
    std::vector<Eigen::Matrix2d> matrices_;
};

/// Flips every shot's bits independently according to `confusion`.
Histogram apply_readout_confusion(const Histogram& hist, const ReadoutConfusion& confusion,
                                  std::uint64_t seed);

}  // namespace rotpauli
