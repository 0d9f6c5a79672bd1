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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotpauli/graph.hpp"

namespace rotpauli {

/// Single-qubit Pauli label. The numeric value is the lexicographic rank used
/// to index Pauli vectors and transfer matrices (I < X < Y < Z).
enum class Pauli1 : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli1_char(Pauli1 p);
Pauli1 pauli1_from_char(char c);

/// An n-qubit Pauli operator without phase, stored as X/Z bit masks.
/// Qubit q lives in bit q of both masks; Y sets both bits.
class PauliString {
  public:
    static constexpr std::size_t kMaxQubits = 32;

    PauliString() = default;
    /// Identity on n qubits.
    explicit PauliString(std::size_t num_qubits);

    /// Parses the canonical text form, qubit 0 first, e.g. "IXZY".
    static PauliString from_string(std::string_view text);
    static PauliString single(std::size_t num_qubits, std::size_t qubit, Pauli1 p);
    /// Inverse of lex_index().
    static PauliString from_lex_index(std::size_t num_qubits, std::size_t index);
    /// Places `local` (one label per entry of `qubits`) into an n-qubit string.
    static PauliString embed(const PauliString& local, std::span<const std::size_t> qubits,
                             std::size_t num_qubits);

    std::size_t num_qubits() const { return num_qubits_; }
    Pauli1 operator[](std::size_t qubit) const;
    void set(std::size_t qubit, Pauli1 p);

    std::uint32_t x_mask() const { return x_; }
    std::uint32_t z_mask() const { return z_; }

    bool is_identity() const { return (x_ | z_) == 0; }
    std::size_t weight() const;
    std::vector<std::size_t> support() const;
    std::size_t num_y() const;

    /// Rank in lexicographic order with qubit 0 most significant.
    std::size_t lex_index() const;
    /// The labels at `qubits`, as a |qubits|-qubit string.
    PauliString restrict_to(std::span<const std::size_t> qubits) const;

    std::string str() const;

    friend bool operator==(const PauliString&, const PauliString&) = default;
    friend std::strong_ordering operator<=>(const PauliString& a, const PauliString& b);

  private:
    std::uint8_t num_qubits_ = 0;
    std::uint32_t x_ = 0;
    std::uint32_t z_ = 0;
};

/// A Pauli string with a global phase i^phase, phase in {0,1,2,3}.
struct PhasedPauli {
    PauliString pauli;
    std::uint8_t phase = 0;

    std::string str() const;
    friend bool operator==(const PhasedPauli&, const PhasedPauli&) = default;
};

PhasedPauli multiply(const PhasedPauli& a, const PhasedPauli& b);
PhasedPauli multiply(const PauliString& a, const PauliString& b);
bool commutes(const PauliString& a, const PauliString& b);

/// Coefficient C_kij of the first-order transfer matrix of exp(-i theta P_k):
/// T_ij = delta_ij + theta * C_kij, with vector components Tr[P rho] / 2^n.
/// Takes values in {-2, 0, 2}.
double structure_constant(const PauliString& k, const PauliString& i, const PauliString& j);

/// Ordered set of one or two qubits carrying local noise.
struct LocalSupport {
    std::vector<std::size_t> qubits;

    std::size_t size() const { return qubits.size(); }
    /// Number of local Pauli operators, 4^size.
    std::size_t num_paulis() const { return std::size_t{1} << (2 * qubits.size()); }
    friend bool operator==(const LocalSupport&, const LocalSupport&) = default;
};

/// All 4^l Pauli strings on l qubits in lexicographic order.
std::vector<PauliString> all_paulis(std::size_t num_qubits);

/// Walsh-Hadamard map between a full probability vector over the 4^l local
/// Paulis (index 0 = identity) and the Pauli eigenvalues (index 0 = 1).
std::vector<double> walsh_hadamard(std::size_t num_local_qubits, std::span<const double> values);
std::vector<double> inverse_walsh_hadamard(std::size_t num_local_qubits, std::span<const double> eigenvalues);

/// Pauli error rates over a local support. rates()[a] is the probability of
/// local Pauli with lex index a; rates()[0] is the identity remainder.
class PauliRates {
  public:
    PauliRates() = default;
    /// `non_identity` holds 4^l - 1 rates for lex indices 1..4^l-1.
    PauliRates(LocalSupport support, std::span<const double> non_identity);
    static PauliRates zero(LocalSupport support);

    const LocalSupport& support() const { return support_; }
    const std::vector<double>& rates() const { return rates_; }
    double rate(std::size_t local_index) const { return rates_.at(local_index); }
    double error_probability() const { return 1.0 - rates_[0]; }

  private:
    LocalSupport support_;
    std::vector<double> rates_;
};

/// Eigenvalue f_b = sum_a (-1)^[a,b] p(a) for every local Pauli b.
std::vector<double> rates_to_eigenvalues(const PauliRates& rates);
/// Inverse transform; tiny negative rates (> -1e-12) are clamped to zero.
PauliRates eigenvalues_to_rates(const LocalSupport& support, std::span<const double> eigenvalues);

/// Coherent-noise generators of a device: X, Y, Z on every qubit (qubit
/// order), then the nine {X,Y,Z}x{X,Y,Z} products on every edge (edge order).
std::vector<PauliString> local_generators(const ConnectivityGraph& graph);

}  // namespace rotpauli
