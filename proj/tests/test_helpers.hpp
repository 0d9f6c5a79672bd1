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

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rotpauli/noise_model.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/ptm.hpp"
#include "rotpauli/simulator.hpp"

namespace rotpauli::testing {

inline double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline std::complex<double> i_pow(int k) {
    static const std::complex<double> table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[((k % 4) + 4) % 4];
}

// Haar-ish random pure state on n qubits.
inline DensityMatrix random_pure_state(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXcd psi(1 << n);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        psi[i] = {g(rng), g(rng)};
    }
    psi.normalize();
    return DensityMatrix::from_matrix(psi * psi.adjoint());
}

inline DensityMatrix random_mixed_state(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(1 << n, 1 << n);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            a(i, j) = {g(rng), g(rng)};
        }
    }
    Eigen::MatrixXcd rho = a * a.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix::from_matrix(rho);
}

inline std::vector<double> random_rates(std::size_t count, double max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, max);
    std::vector<double> out(count);
    for (auto& x : out) {
        x = u(rng);
    }
    return out;
}

}  // namespace rotpauli::testing
