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

#include "rotpauli/pauli.hpp"

#include <algorithm>

#include <bit>
#include <stdexcept>

namespace rotpauli {

namespace {

constexpr double kRateTolerance = 1e-12;

void check_same_size(const PauliString& a, const PauliString& b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("Pauli length mismatch: " + std::to_string(a.num_qubits()) + " vs " +
                                    std::to_string(b.num_qubits()));
    }
}

int popcount(std::uint32_t v) {
    return std::popcount(v);
}

}  // namespace

char pauli1_char(Pauli1 p) {
    return "IXYZ"[static_cast<int>(p)];
}

Pauli1 pauli1_from_char(char c) {
    switch (c) {
        case 'I':
        case '_':
            return Pauli1::I;
        case 'X':
            return Pauli1::X;
        case 'Y':
            return Pauli1::Y;
        case 'Z':
            return Pauli1::Z;
        default:
            throw std::invalid_argument(std::string("not a Pauli label: '") + c + "'");
    }
}

PauliString::PauliString(std::size_t num_qubits) {
    if (num_qubits > kMaxQubits) {
        throw std::invalid_argument("PauliString supports at most 32 qubits");
    }
    num_qubits_ = static_cast<std::uint8_t>(num_qubits);
}

PauliString PauliString::from_string(std::string_view text) {
    PauliString result(text.size());
    for (std::size_t q = 0; q < text.size(); ++q) {
        result.set(q, pauli1_from_char(text[q]));
    }
    return result;
}

PauliString PauliString::single(std::size_t num_qubits, std::size_t qubit, Pauli1 p) {
    PauliString result(num_qubits);
    result.set(qubit, p);
    return result;
}

PauliString PauliString::from_lex_index(std::size_t num_qubits, std::size_t index) {
    PauliString result(num_qubits);
    for (std::size_t q = num_qubits; q-- > 0;) {
        result.set(q, static_cast<Pauli1>(index & 3));
        index >>= 2;
    }
    if (index != 0) {
        throw std::invalid_argument("lex index out of range");
    }
    return result;
}

PauliString PauliString::embed(const PauliString& local, std::span<const std::size_t> qubits,
                               std::size_t num_qubits) {
    if (local.num_qubits() != qubits.size()) {
        throw std::invalid_argument("embed: local string length does not match qubit list");
    }
    PauliString result(num_qubits);
    for (std::size_t k = 0; k < qubits.size(); ++k) {
        result.set(qubits[k], local[k]);
    }
    return result;
}

Pauli1 PauliString::operator[](std::size_t qubit) const {
    if (qubit >= num_qubits_) {
        throw std::out_of_range("qubit index out of range");
    }
    int x = (x_ >> qubit) & 1;
    int z = (z_ >> qubit) & 1;
    // (x,z): I=(0,0) X=(1,0) Y=(1,1) Z=(0,1)
    static constexpr Pauli1 table[2][2] = {{Pauli1::I, Pauli1::Z}, {Pauli1::X, Pauli1::Y}};
    return table[x][z];
}

void PauliString::set(std::size_t qubit, Pauli1 p) {
    if (qubit >= num_qubits_) {
        throw std::out_of_range("qubit index out of range");
    }
    std::uint32_t bit = std::uint32_t{1} << qubit;
    x_ &= ~bit;
    z_ &= ~bit;
    if (p == Pauli1::X || p == Pauli1::Y) {
        x_ |= bit;
    }
    if (p == Pauli1::Z || p == Pauli1::Y) {
        z_ |= bit;
    }
}

std::size_t PauliString::weight() const {
    return static_cast<std::size_t>(popcount(x_ | z_));
}

std::vector<std::size_t> PauliString::support() const {
    std::vector<std::size_t> result;
    for (std::size_t q = 0; q < num_qubits_; ++q) {
        if (((x_ | z_) >> q) & 1) {
            result.push_back(q);
        }
    }
    return result;
}

std::size_t PauliString::num_y() const {
    return static_cast<std::size_t>(popcount(x_ & z_));
}

std::size_t PauliString::lex_index() const {
    std::size_t index = 0;
    for (std::size_t q = 0; q < num_qubits_; ++q) {
        index = (index << 2) | static_cast<std::size_t>((*this)[q]);
    }
    return index;
}

PauliString PauliString::restrict_to(std::span<const std::size_t> qubits) const {
    PauliString result(qubits.size());
    for (std::size_t k = 0; k < qubits.size(); ++k) {
        result.set(k, (*this)[qubits[k]]);
    }
    return result;
}

std::string PauliString::str() const {
    std::string out(num_qubits_, 'I');
    for (std::size_t q = 0; q < num_qubits_; ++q) {
        out[q] = pauli1_char((*this)[q]);
    }
    return out;
}

std::strong_ordering operator<=>(const PauliString& a, const PauliString& b) {
    if (auto c = a.num_qubits_ <=> b.num_qubits_; c != 0) {
        return c;
    }
    return a.lex_index() <=> b.lex_index();
}

std::string PhasedPauli::str() const {
    static constexpr const char* prefix[4] = {"+", "+i", "-", "-i"};
    return prefix[phase & 3] + pauli.str();
}

PhasedPauli multiply(const PhasedPauli& a, const PhasedPauli& b) {
    check_same_size(a.pauli, b.pauli);
    std::uint32_t x1 = a.pauli.x_mask(), z1 = a.pauli.z_mask();
    std::uint32_t x2 = b.pauli.x_mask(), z2 = b.pauli.z_mask();
    std::uint32_t x3 = x1 ^ x2, z3 = z1 ^ z2;
    // P = i^(x.z) X^x Z^z per qubit; moving Z^z1 past X^x2 costs (-1)^(z1.x2).
    int e = popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(z1 & x2) - popcount(x3 & z3);
    e += a.phase + b.phase;
    PhasedPauli result;
    result.pauli = PauliString(a.pauli.num_qubits());
    for (std::size_t q = 0; q < result.pauli.num_qubits(); ++q) {
        int x = (x3 >> q) & 1, z = (z3 >> q) & 1;
        result.pauli.set(q, x ? (z ? Pauli1::Y : Pauli1::X) : (z ? Pauli1::Z : Pauli1::I));
    }
    result.phase = static_cast<std::uint8_t>(((e % 4) + 4) % 4);
    return result;
}

PhasedPauli multiply(const PauliString& a, const PauliString& b) {
    return multiply(PhasedPauli{a, 0}, PhasedPauli{b, 0});
}

bool commutes(const PauliString& a, const PauliString& b) {
    check_same_size(a, b);
    int anti = popcount(a.x_mask() & b.z_mask()) + popcount(a.z_mask() & b.x_mask());
    return (anti & 1) == 0;
}

double structure_constant(const PauliString& k, const PauliString& i, const PauliString& j) {
    check_same_size(k, i);
    check_same_size(k, j);
    if (commutes(k, j)) {
        return 0.0;
    }
    // d/dtheta of Tr[P_i U P_j U^dag]/2^n at 0 is -i Tr[P_i [P_k, P_j]]/2^n,
    // and [P_k, P_j] = 2 P_k P_j = 2 i^e P_l with e odd.
    PhasedPauli product = multiply(k, j);
    if (product.pauli != i) {
        return 0.0;
    }
    return product.phase == 1 ? 2.0 : -2.0;
}

std::vector<PauliString> all_paulis(std::size_t num_qubits) {
    std::size_t count = std::size_t{1} << (2 * num_qubits);
    std::vector<PauliString> result;
    result.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        result.push_back(PauliString::from_lex_index(num_qubits, idx));
    }
    return result;
}

std::vector<double> walsh_hadamard(std::size_t num_local_qubits, std::span<const double> values) {
    auto paulis = all_paulis(num_local_qubits);
    if (values.size() != paulis.size()) {
        throw std::invalid_argument("walsh_hadamard: expected 4^l values");
    }
    std::vector<double> out(paulis.size(), 0.0);
    for (std::size_t b = 0; b < paulis.size(); ++b) {
        double acc = 0.0;
        for (std::size_t a = 0; a < paulis.size(); ++a) {
            acc += commutes(paulis[a], paulis[b]) ? values[a] : -values[a];
        }
        out[b] = acc;
    }
    return out;
}

std::vector<double> inverse_walsh_hadamard(std::size_t num_local_qubits,
                                           std::span<const double> eigenvalues) {
    // The sign matrix S satisfies S S = 4^l I.
    auto out = walsh_hadamard(num_local_qubits, eigenvalues);
    double scale = 1.0 / static_cast<double>(out.size());
    for (double& v : out) {
        v *= scale;
    }
    return out;
}

PauliRates::PauliRates(LocalSupport support, std::span<const double> non_identity)
    : support_(std::move(support)) {
    if (support_.size() == 0 || support_.size() > 2) {
        throw std::invalid_argument("local support must have 1 or 2 qubits");
    }
    if (non_identity.size() + 1 != support_.num_paulis()) {
        throw std::invalid_argument("expected " + std::to_string(support_.num_paulis() - 1) +
                                    " non-identity rates");
    }
    rates_.assign(support_.num_paulis(), 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < non_identity.size(); ++a) {
        double p = non_identity[a];
        if (!(p >= -kRateTolerance)) {
            throw std::invalid_argument("negative Pauli rate " + std::to_string(p));
        }
        p = std::max(p, 0.0);
        rates_[a + 1] = p;
        total += p;
    }
    if (total > 1.0 + kRateTolerance) {
        throw std::invalid_argument("Pauli rates sum to " + std::to_string(total) + " > 1");
    }
    rates_[0] = std::max(0.0, 1.0 - total);
}

PauliRates PauliRates::zero(LocalSupport support) {
    std::vector<double> zeros(support.num_paulis() - 1, 0.0);
    return PauliRates(std::move(support), zeros);
}

std::vector<double> rates_to_eigenvalues(const PauliRates& rates) {
    return walsh_hadamard(rates.support().size(), rates.rates());
}

PauliRates eigenvalues_to_rates(const LocalSupport& support, std::span<const double> eigenvalues) {
    auto full = inverse_walsh_hadamard(support.size(), eigenvalues);
    return PauliRates(support, std::span<const double>(full).subspan(1));
}

std::vector<PauliString> local_generators(const ConnectivityGraph& graph) {
    std::size_t n = graph.num_qubits();
    if (n == 0) {
        throw std::invalid_argument("local_generators: empty graph");
    }
    static constexpr Pauli1 axes[3] = {Pauli1::X, Pauli1::Y, Pauli1::Z};
    std::vector<PauliString> result;
    result.reserve(3 * n + 9 * graph.edges().size());
    for (std::size_t q = 0; q < n; ++q) {
        for (Pauli1 a : axes) {
            result.push_back(PauliString::single(n, q, a));
        }
    }
    for (const auto& [a, b] : graph.edges()) {
        for (Pauli1 pa : axes) {
            for (Pauli1 pb : axes) {
                PauliString p(n);
                p.set(a, pa);
                p.set(b, pb);
                result.push_back(p);
            }
        }
    }
    return result;
}

}  // namespace rotpauli
