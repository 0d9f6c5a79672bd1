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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotpauli/pauli.hpp"

namespace rotpauli {

enum class GateKind { X, Y, Z, SX, H, S, Sdg, Rz, Rp, CX };

/// A named gate on one or two qubits.
///   Rz(phi)  = exp(-i phi Z / 2)
///   Rp(P, t) = exp(-i t P), P a Pauli string over the gate's qubits
///   CX       = control qubits[0], target qubits[1]
struct Gate {
    GateKind kind = GateKind::X;
    std::vector<std::size_t> qubits;
    double angle = 0.0;
    PauliString generator;

    static Gate x(std::size_t q) { return {GateKind::X, {q}, 0.0, {}}; }
    static Gate y(std::size_t q) { return {GateKind::Y, {q}, 0.0, {}}; }
    static Gate z(std::size_t q) { return {GateKind::Z, {q}, 0.0, {}}; }
    static Gate sx(std::size_t q) { return {GateKind::SX, {q}, 0.0, {}}; }
    static Gate h(std::size_t q) { return {GateKind::H, {q}, 0.0, {}}; }
    static Gate s(std::size_t q) { return {GateKind::S, {q}, 0.0, {}}; }
    static Gate sdg(std::size_t q) { return {GateKind::Sdg, {q}, 0.0, {}}; }
    static Gate rz(std::size_t q, double phi) { return {GateKind::Rz, {q}, phi, {}}; }
    static Gate rp(PauliString local, std::vector<std::size_t> qubits, double theta);
    static Gate cx(std::size_t control, std::size_t target) {
        return {GateKind::CX, {control, target}, 0.0, {}};
    }
    /// Pauli gate for each non-identity label of `local`; empty if identity.
    static std::vector<Gate> paulis(const PauliString& local, const std::vector<std::size_t>& qubits);

    /// 2^k x 2^k unitary in the local basis, qubits[0] most significant.
    Eigen::MatrixXcd matrix() const;
    bool is_clifford() const;
    std::string name() const;
};

/// Gates executed simultaneously on pairwise disjoint qubits.
struct GateLayer {
    std::vector<Gate> gates;

    /// Throws if a qubit is out of range or used twice.
    void validate(std::size_t num_qubits) const;
    bool is_clifford() const;
    std::vector<std::size_t> qubits() const;
};

}  // namespace rotpauli
