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

#include "rotpauli/gates.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "rotpauli/simulator.hpp"

namespace rotpauli {

namespace {

using cd = std::complex<double>;

bool near_multiple(double value, double unit) {
    double r = value / unit;
    return std::abs(r - std::round(r)) < 1e-12;
}

}  // namespace

Gate Gate::rp(PauliString local, std::vector<std::size_t> qubits, double theta) {
    if (local.num_qubits() != qubits.size()) {
        throw std::invalid_argument("Rp generator length must match the gate's qubit count");
    }
    return {GateKind::Rp, std::move(qubits), theta, std::move(local)};
}

std::vector<Gate> Gate::paulis(const PauliString& local, const std::vector<std::size_t>& qubits) {
    std::vector<Gate> out;
    for (std::size_t k = 0; k < qubits.size(); ++k) {
        switch (local[k]) {
            case Pauli1::X:
                out.push_back(Gate::x(qubits[k]));
                break;
            case Pauli1::Y:
                out.push_back(Gate::y(qubits[k]));
                break;
            case Pauli1::Z:
                out.push_back(Gate::z(qubits[k]));
                break;
            case Pauli1::I:
                break;
        }
    }
    return out;
}

Eigen::MatrixXcd Gate::matrix() const {
    const double r = 1.0 / std::numbers::sqrt2;
    const cd i1(0.0, 1.0);
    Eigen::MatrixXcd m(2, 2);
    switch (kind) {
        case GateKind::X:
            m << 0, 1, 1, 0;
            return m;
        case GateKind::Y:
            m << 0, -i1, i1, 0;
            return m;
        case GateKind::Z:
            m << 1, 0, 0, -1;
            return m;
        case GateKind::SX:
            m << cd(0.5, 0.5), cd(0.5, -0.5), cd(0.5, -0.5), cd(0.5, 0.5);
            return m;
        case GateKind::H:
            m << r, r, r, -r;
            return m;
        case GateKind::S:
            m << 1, 0, 0, i1;
            return m;
        case GateKind::Sdg:
            m << 1, 0, 0, -i1;
            return m;
        case GateKind::Rz:
            m << std::exp(-i1 * (angle / 2)), 0, 0, std::exp(i1 * (angle / 2));
            return m;
        case GateKind::Rp: {
            Eigen::MatrixXcd p = pauli_matrix(generator);
            Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(p.rows(), p.cols());
            return std::cos(angle) * id - i1 * std::sin(angle) * p;
        }
        case GateKind::CX: {
            Eigen::MatrixXcd cx = Eigen::MatrixXcd::Zero(4, 4);
            cx(0, 0) = cx(1, 1) = cx(2, 3) = cx(3, 2) = 1;
            return cx;
        }
    }
    throw std::logic_error("unknown gate kind");
}

bool Gate::is_clifford() const {
    switch (kind) {
        case GateKind::Rz:
            return near_multiple(angle, std::numbers::pi / 2);
        case GateKind::Rp:
            return near_multiple(angle, std::numbers::pi / 4);
        default:
            return true;
    }
}

std::string Gate::name() const {
    switch (kind) {
        case GateKind::X:
            return "X";
        case GateKind::Y:
            return "Y";
        case GateKind::Z:
            return "Z";
        case GateKind::SX:
            return "SX";
        case GateKind::H:
            return "H";
        case GateKind::S:
            return "S";
        case GateKind::Sdg:
            return "Sdg";
        case GateKind::Rz:
            return "Rz";
        case GateKind::Rp:
            return "Rp";
        case GateKind::CX:
            return "CX";
    }
    return "?";
}

void GateLayer::validate(std::size_t num_qubits) const {
    std::vector<bool> used(num_qubits, false);
    for (const Gate& g : gates) {
        std::size_t expected = g.kind == GateKind::CX ? 2 : (g.kind == GateKind::Rp ? g.qubits.size() : 1);
        if (g.qubits.size() != expected || g.qubits.empty() || g.qubits.size() > 2) {
            throw std::invalid_argument("gate " + g.name() + " has the wrong number of qubits");
        }
        for (std::size_t q : g.qubits) {
            if (q >= num_qubits) {
                throw std::invalid_argument("gate " + g.name() + " acts on qubit " + std::to_string(q) +
                                            " outside a " + std::to_string(num_qubits) + "-qubit register");
            }
            if (used[q]) {
                throw std::invalid_argument("qubit " + std::to_string(q) + " used twice in one layer");
            }
            used[q] = true;
        }
    }
}

bool GateLayer::is_clifford() const {
    for (const Gate& g : gates) {
        if (!g.is_clifford()) {
            return false;
        }
    }
    return true;
}

std::vector<std::size_t> GateLayer::qubits() const {
    std::vector<std::size_t> out;
    for (const Gate& g : gates) {
        out.insert(out.end(), g.qubits.begin(), g.qubits.end());
    }
    return out;
}

}  // namespace rotpauli
