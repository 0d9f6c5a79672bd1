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

#include "rotpauli/ptm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rotpauli/errors.hpp"

namespace rotpauli {

namespace {

std::size_t pauli_count(std::size_t num_qubits) {
    return std::size_t{1} << (2 * num_qubits);
}

void check_ptm_size(std::size_t num_qubits) {
    if (num_qubits == 0 || num_qubits > kMaxPtmQubits) {
        throw std::invalid_argument("transfer matrices are limited to 1.." + std::to_string(kMaxPtmQubits) +
                                    " qubits, got " + std::to_string(num_qubits));
    }
}

}  // namespace

PauliVector::PauliVector(std::size_t num_qubits, Eigen::VectorXd components)
    : num_qubits_(num_qubits), components_(std::move(components)) {
    if (static_cast<std::size_t>(components_.size()) != pauli_count(num_qubits)) {
        throw std::invalid_argument("Pauli vector needs 4^n components");
    }
}

double PauliVector::expectation(std::size_t i) const {
    return (*this)[i] * static_cast<double>(std::size_t{1} << num_qubits_);
}

PauliVector vectorize(const DensityMatrix& rho) {
    std::size_t n = rho.num_qubits();
    std::size_t count = pauli_count(n);
    double scale = 1.0 / static_cast<double>(rho.dim());
    Eigen::VectorXd v(count);
    for (std::size_t i = 0; i < count; ++i) {
        v[static_cast<Eigen::Index>(i)] = scale * expectation(rho, PauliString::from_lex_index(n, i));
    }
    return PauliVector(n, std::move(v));
}

DensityMatrix devectorize(const PauliVector& v) {
    std::size_t n = v.num_qubits();
    double expected = 1.0 / static_cast<double>(std::size_t{1} << n);
    if (std::abs(v[0] - expected) > 1e-12) {
        throw std::invalid_argument("identity component must equal 1/2^n");
    }
    std::size_t d = std::size_t{1} << n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t i = 0; i < pauli_count(n); ++i) {
        if (v[i] != 0.0) {
            m += v[i] * pauli_matrix(PauliString::from_lex_index(n, i));
        }
    }
    return DensityMatrix::from_matrix(std::move(m), false);
}

PauliVector marginalize(const PauliVector& v, std::span<const std::size_t> qubits) {
    std::size_t n = v.num_qubits();
    std::size_t k = qubits.size();
    for (std::size_t q : qubits) {
        if (q >= n) {
            throw std::invalid_argument("marginal qubit out of range");
        }
    }
    double scale = static_cast<double>(std::size_t{1} << (n - k));
    Eigen::VectorXd out(pauli_count(k));
    for (std::size_t i = 0; i < pauli_count(k); ++i) {
        PauliString full = PauliString::embed(PauliString::from_lex_index(k, i), qubits, n);
        out[static_cast<Eigen::Index>(i)] = scale * v[full];
    }
    return PauliVector(k, std::move(out));
}

TransferMatrix::TransferMatrix(std::size_t num_qubits, Eigen::MatrixXd matrix)
    : num_qubits_(num_qubits), matrix_(std::move(matrix)) {
    std::size_t count = pauli_count(num_qubits);
    if (static_cast<std::size_t>(matrix_.rows()) != count ||
        static_cast<std::size_t>(matrix_.cols()) != count) {
        throw std::invalid_argument("transfer matrix must be 4^n x 4^n");
    }
}

TransferMatrix TransferMatrix::identity(std::size_t num_qubits) {
    std::size_t count = pauli_count(num_qubits);
    return TransferMatrix(num_qubits, Eigen::MatrixXd::Identity(count, count));
}

PauliVector TransferMatrix::apply(const PauliVector& v) const {
    if (v.num_qubits() != num_qubits_) {
        throw std::invalid_argument("vector and transfer matrix sizes differ");
    }
    return PauliVector(num_qubits_, matrix_ * v.components());
}

TransferMatrix TransferMatrix::inverse() const {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(matrix_);
    if (!lu.isInvertible()) {
        throw NumericalError("transfer matrix is singular");
    }
    return TransferMatrix(num_qubits_, lu.inverse());
}

TransferMatrix channel_to_ptm(const Channel& channel, std::size_t num_qubits) {
    check_ptm_size(num_qubits);
    std::size_t count = pauli_count(num_qubits);
    Eigen::MatrixXd t(count, count);
    for (std::size_t j = 0; j < count; ++j) {
        DensityMatrix op =
            DensityMatrix::from_matrix(pauli_matrix(PauliString::from_lex_index(num_qubits, j)), false);
        channel(op);
        if (op.num_qubits() != num_qubits) {
            throw std::invalid_argument("channel changed the register size");
        }
        // vectorize gives Tr[P_i E(P_j)] / 2^n, which is T_ij.
        t.col(static_cast<Eigen::Index>(j)) = vectorize(op).components();
    }
    return TransferMatrix(num_qubits, std::move(t));
}

TransferMatrix unitary_ptm(const Eigen::MatrixXcd& unitary) {
    std::size_t d = static_cast<std::size_t>(unitary.rows());
    if (unitary.rows() != unitary.cols() || d < 2 || (d & (d - 1)) != 0) {
        throw std::invalid_argument("unitary must be square with power-of-two dimension");
    }
    std::size_t n = 0;
    while ((std::size_t{1} << n) < d) {
        ++n;
    }
    std::vector<std::size_t> all(n);
    for (std::size_t q = 0; q < n; ++q) {
        all[q] = q;
    }
    return channel_to_ptm([&](DensityMatrix& rho) { apply_unitary(rho, unitary, all); }, n);
}

TransferMatrix pauli_channel_ptm(const PauliRates& rates, std::size_t num_qubits) {
    check_ptm_size(num_qubits);
    const auto& qubits = rates.support().qubits;
    auto eig = rates_to_eigenvalues(rates);
    std::size_t count = pauli_count(num_qubits);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(count, count);
    for (std::size_t i = 0; i < count; ++i) {
        PauliString local = PauliString::from_lex_index(num_qubits, i).restrict_to(qubits);
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = eig[local.lex_index()];
    }
    return TransferMatrix(num_qubits, std::move(t));
}

TransferMatrix rotation_ptm(std::span<const PauliString> generators, std::span<const double> theta) {
    if (generators.empty()) {
        throw std::invalid_argument("rotation needs at least one generator");
    }
    std::size_t n = generators[0].num_qubits();
    std::vector<std::size_t> all(n);
    for (std::size_t q = 0; q < n; ++q) {
        all[q] = q;
    }
    return unitary_ptm(rotation_unitary(generators, theta, all));
}

Eigen::MatrixXd generator_matrix(const PauliString& k) {
    std::size_t n = k.num_qubits();
    std::size_t count = pauli_count(n);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(count, count);
    for (std::size_t j = 0; j < count; ++j) {
        PauliString pj = PauliString::from_lex_index(n, j);
        if (commutes(k, pj)) {
            continue;
        }
        PhasedPauli product = multiply(k, pj);
        c(static_cast<Eigen::Index>(product.pauli.lex_index()), static_cast<Eigen::Index>(j)) =
            product.phase == 1 ? 2.0 : -2.0;
    }
    return c;
}

TransferMatrix small_angle_ptm(std::span<const PauliString> generators, std::span<const double> theta,
                               std::size_t num_qubits) {
    check_ptm_size(num_qubits);
    if (generators.size() != theta.size()) {
        throw std::invalid_argument("one angle per generator required");
    }
    std::size_t count = pauli_count(num_qubits);
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(count, count);
    for (std::size_t k = 0; k < generators.size(); ++k) {
        if (generators[k].num_qubits() != num_qubits) {
            throw std::invalid_argument("generator length does not match the register");
        }
        if (theta[k] != 0.0) {
            t += theta[k] * generator_matrix(generators[k]);
        }
    }
    return TransferMatrix(num_qubits, std::move(t));
}

TransferMatrix compose(const TransferMatrix& a, const TransferMatrix& b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("cannot compose transfer matrices of different sizes");
    }
    return TransferMatrix(a.num_qubits(), a.matrix() * b.matrix());
}

bool layer_separable_on(const GateLayer& layer, std::span<const std::size_t> qubits) {
    for (const Gate& g : layer.gates) {
        std::size_t inside = 0;
        for (std::size_t q : g.qubits) {
            for (std::size_t s : qubits) {
                if (q == s) {
                    ++inside;
                }
            }
        }
        if (inside != 0 && inside != g.qubits.size()) {
            return false;
        }
    }
    return true;
}

TransferMatrix layer_ptm(const GateLayer& layer, std::span<const std::size_t> qubits) {
    if (!layer_separable_on(layer, qubits)) {
        throw std::invalid_argument("a layer gate straddles the subsystem boundary");
    }
    std::size_t k = qubits.size();
    check_ptm_size(k);
    std::vector<Gate> local;
    for (const Gate& g : layer.gates) {
        Gate moved = g;
        bool inside = true;
        for (std::size_t& q : moved.qubits) {
            std::size_t pos = k;
            for (std::size_t t = 0; t < k; ++t) {
                if (qubits[t] == q) {
                    pos = t;
                }
            }
            if (pos == k) {
                inside = false;
                break;
            }
            q = pos;
        }
        if (inside) {
            local.push_back(std::move(moved));
        }
    }
    return channel_to_ptm(
        [&](DensityMatrix& rho) {
            for (const Gate& g : local) {
                apply_gate(rho, g);
            }
        },
        k);
}

}  // namespace rotpauli
