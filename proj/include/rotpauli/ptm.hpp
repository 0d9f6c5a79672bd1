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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rotpauli/gates.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/simulator.hpp"

namespace rotpauli {

/// Largest register for which full transfer matrices are built.
inline constexpr std::size_t kMaxPtmQubits = 4;

/// Pauli-basis coordinates of an operator: component i is Tr[P_i rho] / 2^n,
/// indexed by lex_index().
class PauliVector {
  public:
    PauliVector() = default;
    PauliVector(std::size_t num_qubits, Eigen::VectorXd components);

    std::size_t num_qubits() const { return num_qubits_; }
    const Eigen::VectorXd& components() const { return components_; }
    double operator[](std::size_t i) const { return components_[static_cast<Eigen::Index>(i)]; }
    double operator[](const PauliString& p) const { return (*this)[p.lex_index()]; }
    /// Tr[P rho] for the given index, i.e. the component times 2^n.
    double expectation(std::size_t i) const;

  private:
    std::size_t num_qubits_ = 0;
    Eigen::VectorXd components_;
};

PauliVector vectorize(const DensityMatrix& rho);
/// Throws if the identity component differs from 1/2^n by more than 1e-12.
DensityMatrix devectorize(const PauliVector& v);
/// Reduced vector on `qubits` (in that order).
PauliVector marginalize(const PauliVector& v, std::span<const std::size_t> qubits);

/// Real 4^n x 4^n channel representation acting on PauliVector components.
class TransferMatrix {
  public:
    TransferMatrix() = default;
    TransferMatrix(std::size_t num_qubits, Eigen::MatrixXd matrix);
    static TransferMatrix identity(std::size_t num_qubits);

    std::size_t num_qubits() const { return num_qubits_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    double operator()(std::size_t i, std::size_t j) const {
        return matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    PauliVector apply(const PauliVector& v) const;
    TransferMatrix inverse() const;

  private:
    std::size_t num_qubits_ = 0;
    Eigen::MatrixXd matrix_;
};

/// Exact PTM of an arbitrary linear map given as a simulator channel (n <= 4).
TransferMatrix channel_to_ptm(const Channel& channel, std::size_t num_qubits);
/// PTM of rho -> U rho U^dag for a 2^n x 2^n unitary.
TransferMatrix unitary_ptm(const Eigen::MatrixXcd& unitary);
/// Diagonal PTM of a Pauli channel on one support embedded in n qubits.
TransferMatrix pauli_channel_ptm(const PauliRates& rates, std::size_t num_qubits);
/// exp(-i sum theta_k P_k) exactly; generators are n-qubit strings.
TransferMatrix rotation_ptm(std::span<const PauliString> generators, std::span<const double> theta);
/// The matrix C_k with (C_k)_ij = structure_constant(k, i, j).
Eigen::MatrixXd generator_matrix(const PauliString& k);
/// delta_ij + sum_k theta_k C_kij.
TransferMatrix small_angle_ptm(std::span<const PauliString> generators, std::span<const double> theta,
                               std::size_t num_qubits);
/// a after b.
TransferMatrix compose(const TransferMatrix& a, const TransferMatrix& b);

/// PTM of an ideal layer restricted to `qubits`. Every gate must lie entirely
/// inside or entirely outside the set; gates outside are ignored.
TransferMatrix layer_ptm(const GateLayer& layer, std::span<const std::size_t> qubits);
/// True if no gate of the layer straddles the boundary of `qubits`.
bool layer_separable_on(const GateLayer& layer, std::span<const std::size_t> qubits);

}  // namespace rotpauli
