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

#include "rotpauli/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rotpauli {

namespace {

using cd = std::complex<double>;

std::size_t dense_bit(std::size_t num_qubits, std::size_t qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

struct DenseMasks {
    std::size_t x = 0;
    std::size_t z = 0;
};

DenseMasks dense_masks(const PauliString& p) {
    DenseMasks m;
    std::size_t n = p.num_qubits();
    for (std::size_t q = 0; q < n; ++q) {
        Pauli1 label = p[q];
        if (label == Pauli1::X || label == Pauli1::Y) {
            m.x |= dense_bit(n, q);
        }
        if (label == Pauli1::Z || label == Pauli1::Y) {
            m.z |= dense_bit(n, q);
        }
    }
    return m;
}

void check_qubits(std::size_t num_qubits, std::span<const std::size_t> qubits) {
    for (std::size_t a = 0; a < qubits.size(); ++a) {
        if (qubits[a] >= num_qubits) {
            throw std::invalid_argument("qubit index " + std::to_string(qubits[a]) + " out of range for " +
                                        std::to_string(num_qubits) + " qubits");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (qubits[a] == qubits[b]) {
                throw std::invalid_argument("repeated qubit index " + std::to_string(qubits[a]));
            }
        }
    }
}

void check_length(const DensityMatrix& rho, const PauliString& p) {
    if (p.num_qubits() != rho.num_qubits()) {
        throw std::invalid_argument("Pauli string has " + std::to_string(p.num_qubits()) +
                                    " qubits, state has " + std::to_string(rho.num_qubits()));
    }
}

// out += weight * P m P, P given by dense masks.
void accumulate_conjugated(const Eigen::MatrixXcd& m, const DenseMasks& masks, double weight,
                           Eigen::MatrixXcd& out) {
    std::size_t d = static_cast<std::size_t>(m.rows());
    std::vector<double> sign(d);
    for (std::size_t k = 0; k < d; ++k) {
        sign[k] = (std::popcount(k & masks.z) & 1) ? -1.0 : 1.0;
    }
    for (std::size_t l = 0; l < d; ++l) {
        std::size_t lx = l ^ masks.x;
        double wl = weight * sign[lx];
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t jx = j ^ masks.x;
            out(j, l) += (wl * sign[jx]) * m(jx, lx);
        }
    }
}

Eigen::Matrix2cd basis_change(Pauli1 axis) {
    const double r = 1.0 / std::numbers::sqrt2;
    Eigen::Matrix2cd u;
    switch (axis) {
        case Pauli1::Z:
            u = Eigen::Matrix2cd::Identity();
            break;
        case Pauli1::X:
            u << r, r, r, -r;
            break;
        case Pauli1::Y:
            // H * Sdg
            u << r, cd(0, -r), r, cd(0, r);
            break;
        default:
            throw std::invalid_argument("measurement basis must be X, Y or Z");
    }
    return u;
}

}  // namespace

DensityMatrix::DensityMatrix(std::size_t num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits == 0 || num_qubits > kMaxSimulatedQubits) {
        throw std::invalid_argument("density matrices support 1.." + std::to_string(kMaxSimulatedQubits) +
                                    " qubits");
    }
    std::size_t d = std::size_t{1} << num_qubits;
    matrix_ = Eigen::MatrixXcd::Zero(d, d);
    matrix_(0, 0) = 1.0;
}

DensityMatrix DensityMatrix::from_matrix(Eigen::MatrixXcd matrix, bool check) {
    std::size_t d = static_cast<std::size_t>(matrix.rows());
    if (matrix.rows() != matrix.cols() || d < 2 || !std::has_single_bit(d)) {
        throw std::invalid_argument("density matrix must be square with power-of-two dimension");
    }
    DensityMatrix rho;
    rho.num_qubits_ = static_cast<std::size_t>(std::countr_zero(d));
    if (rho.num_qubits_ > kMaxSimulatedQubits) {
        throw std::invalid_argument("too many qubits for dense simulation");
    }
    rho.matrix_ = std::move(matrix);
    if (check) {
        rho.validate();
    }
    return rho;
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t num_qubits) {
    DensityMatrix rho(num_qubits);
    rho.matrix_ = Eigen::MatrixXcd::Identity(rho.dim(), rho.dim()) / static_cast<double>(rho.dim());
    return rho;
}

double DensityMatrix::trace() const {
    return matrix_.trace().real();
}

double DensityMatrix::purity() const {
    // Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho.
    return matrix_.cwiseAbs2().sum();
}

double DensityMatrix::hermiticity_error() const {
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::MatrixXcd h = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
    if (hermiticity_error() > 1e-10) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(trace() - 1.0) > 1e-10) {
        throw std::invalid_argument("density matrix trace is " + std::to_string(trace()));
    }
    if (min_eigenvalue() < -1e-9) {
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
}

ProductState parse_product_state(std::string_view text) {
    ProductState out;
    for (std::size_t k = 0; k < text.size(); ++k) {
        char c = text[k];
        switch (c) {
            case '0':
                out.push_back(StateLabel::Zero);
                break;
            case '1':
                out.push_back(StateLabel::One);
                break;
            case '+':
                out.push_back(StateLabel::Plus);
                break;
            case '-':
                if (k + 1 < text.size() && text[k + 1] == 'i') {
                    out.push_back(StateLabel::MinusI);
                    ++k;
                } else {
                    out.push_back(StateLabel::Minus);
                }
                break;
            case 'r':
            case 'i':
                out.push_back(StateLabel::PlusI);
                break;
            case 'l':
                out.push_back(StateLabel::MinusI);
                break;
            default:
                throw std::invalid_argument(std::string("unknown state label '") + c + "'");
        }
    }
    return out;
}

std::string to_string(const ProductState& state) {
    std::string out;
    for (StateLabel s : state) {
        out.push_back("01+-rl"[static_cast<int>(s)]);
    }
    return out;
}

Eigen::Vector3d bloch_vector(StateLabel label) {
    switch (label) {
        case StateLabel::Zero:
            return {0, 0, 1};
        case StateLabel::One:
            return {0, 0, -1};
        case StateLabel::Plus:
            return {1, 0, 0};
        case StateLabel::Minus:
            return {-1, 0, 0};
        case StateLabel::PlusI:
            return {0, 1, 0};
        case StateLabel::MinusI:
            return {0, -1, 0};
    }
    throw std::logic_error("unknown state label");
}

DensityMatrix prepare_product_state(const ProductState& state) {
    if (state.empty()) {
        throw std::invalid_argument("empty product state");
    }
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(1, 1);
    for (StateLabel s : state) {
        Eigen::Vector3d r = bloch_vector(s);
        Eigen::Matrix2cd q;
        q << cd(1 + r.z(), 0), cd(r.x(), -r.y()), cd(r.x(), r.y()), cd(1 - r.z(), 0);
        q *= 0.5;
        Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                next.block<2, 2>(2 * i, 2 * j) = m(i, j) * q;
            }
        }
        m = std::move(next);
    }
    return DensityMatrix::from_matrix(std::move(m), false);
}

DensityMatrix prepare_product_state(std::string_view text) {
    return prepare_product_state(parse_product_state(text));
}

Eigen::MatrixXcd pauli_matrix(const PauliString& p) {
    std::size_t n = p.num_qubits();
    std::size_t d = std::size_t{1} << n;
    DenseMasks masks = dense_masks(p);
    static const cd ipow[4] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
    cd phase = ipow[p.num_y() % 4];
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        double s = (std::popcount(k & masks.z) & 1) ? -1.0 : 1.0;
        m(k ^ masks.x, k) = phase * s;
    }
    return m;
}

void apply_unitary(DensityMatrix& rho, const Eigen::MatrixXcd& unitary, std::span<const std::size_t> qubits) {
    std::size_t n = rho.num_qubits();
    std::size_t k = qubits.size();
    check_qubits(n, qubits);
    std::size_t local_dim = std::size_t{1} << k;
    if (static_cast<std::size_t>(unitary.rows()) != local_dim ||
        static_cast<std::size_t>(unitary.cols()) != local_dim) {
        throw std::invalid_argument("unitary dimension does not match its qubit count");
    }
    Eigen::MatrixXcd& m = rho.mutable_matrix();
    bool in_order = k == n;
    for (std::size_t t = 0; in_order && t < k; ++t) {
        in_order = qubits[t] == t;
    }
    if (in_order) {
        m = unitary * m * unitary.adjoint();
        return;
    }

    std::size_t d = rho.dim();
    std::vector<std::size_t> offset(local_dim, 0);
    std::size_t mask = 0;
    for (std::size_t t = 0; t < k; ++t) {
        mask |= dense_bit(n, qubits[t]);
    }
    for (std::size_t l = 0; l < local_dim; ++l) {
        for (std::size_t t = 0; t < k; ++t) {
            if ((l >> (k - 1 - t)) & 1) {
                offset[l] |= dense_bit(n, qubits[t]);
            }
        }
    }
    std::vector<cd> in(local_dim), out(local_dim);
    // Rows: m <- U m.
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t base = 0; base < d; ++base) {
            if (base & mask) {
                continue;
            }
            for (std::size_t l = 0; l < local_dim; ++l) {
                in[l] = m(base | offset[l], c);
            }
            for (std::size_t a = 0; a < local_dim; ++a) {
                cd acc = 0;
                for (std::size_t l = 0; l < local_dim; ++l) {
                    acc += unitary(a, l) * in[l];
                }
                m(base | offset[a], c) = acc;
            }
        }
    }
    // Columns: m <- m U^dag.
    Eigen::MatrixXcd uc = unitary.conjugate();
    for (std::size_t base = 0; base < d; ++base) {
        if (base & mask) {
            continue;
        }
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t l = 0; l < local_dim; ++l) {
                in[l] = m(r, base | offset[l]);
            }
            for (std::size_t a = 0; a < local_dim; ++a) {
                cd acc = 0;
                for (std::size_t l = 0; l < local_dim; ++l) {
                    acc += uc(a, l) * in[l];
                }
                out[a] = acc;
            }
            for (std::size_t a = 0; a < local_dim; ++a) {
                m(r, base | offset[a]) = out[a];
            }
        }
    }
}

void apply_gate(DensityMatrix& rho, const Gate& gate) {
    apply_unitary(rho, gate.matrix(), gate.qubits);
}

void apply_layer(DensityMatrix& rho, const GateLayer& layer) {
    layer.validate(rho.num_qubits());
    for (const Gate& g : layer.gates) {
        apply_gate(rho, g);
    }
}

void apply_pauli(DensityMatrix& rho, const PauliString& p) {
    check_length(rho, p);
    if (p.is_identity()) {
        return;
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
    accumulate_conjugated(rho.matrix(), dense_masks(p), 1.0, out);
    rho.mutable_matrix() = std::move(out);
}

void apply_weighted_paulis(DensityMatrix& rho, const LocalSupport& support, std::span<const double> weights) {
    std::size_t n = rho.num_qubits();
    check_qubits(n, support.qubits);
    if (weights.size() != support.num_paulis()) {
        throw std::invalid_argument("expected one weight per local Pauli");
    }
    Eigen::MatrixXcd out = weights[0] * rho.matrix();
    for (std::size_t a = 1; a < weights.size(); ++a) {
        if (weights[a] == 0.0) {
            continue;
        }
        PauliString local = PauliString::from_lex_index(support.size(), a);
        PauliString full = PauliString::embed(local, support.qubits, n);
        accumulate_conjugated(rho.matrix(), dense_masks(full), weights[a], out);
    }
    rho.mutable_matrix() = std::move(out);
}

void apply_pauli_channel(DensityMatrix& rho, const PauliRates& channel) {
    apply_weighted_paulis(rho, channel.support(), channel.rates());
}

void apply_pauli_channel(DensityMatrix& rho, std::span<const PauliRates> channels) {
    for (const PauliRates& c : channels) {
        apply_pauli_channel(rho, c);
    }
}

std::vector<std::size_t> joint_support(std::span<const PauliString> generators) {
    std::vector<std::size_t> qubits;
    for (const PauliString& g : generators) {
        for (std::size_t q : g.support()) {
            qubits.push_back(q);
        }
    }
    std::sort(qubits.begin(), qubits.end());
    qubits.erase(std::unique(qubits.begin(), qubits.end()), qubits.end());
    return qubits;
}

Eigen::MatrixXcd rotation_unitary(std::span<const PauliString> generators, std::span<const double> theta,
                                  std::span<const std::size_t> qubits) {
    if (generators.size() != theta.size()) {
        throw std::invalid_argument("one angle per generator required");
    }
    std::size_t d = std::size_t{1} << qubits.size();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k = 0; k < generators.size(); ++k) {
        if (theta[k] == 0.0) {
            continue;
        }
        PauliString local = generators[k].restrict_to(qubits);
        if (local.weight() != generators[k].weight()) {
            throw std::invalid_argument("generator " + generators[k].str() + " leaves the rotation support");
        }
        h += theta[k] * pauli_matrix(local);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phases(d);
    for (std::size_t i = 0; i < d; ++i) {
        phases[static_cast<Eigen::Index>(i)] =
            std::exp(cd(0, -es.eigenvalues()[static_cast<Eigen::Index>(i)]));
    }
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

void apply_coherent_rotation(DensityMatrix& rho, std::span<const PauliString> generators,
                             std::span<const double> theta, const ConnectivityGraph* graph) {
    for (const PauliString& g : generators) {
        check_length(rho, g);
        auto support = g.support();
        bool local = support.size() <= 1 ||
                     (support.size() == 2 && (graph == nullptr || graph->has_edge(support[0], support[1])));
        if (!local) {
            throw std::invalid_argument("non-local generator " + g.str());
        }
    }
    std::vector<PauliString> active;
    std::vector<double> angles;
    for (std::size_t k = 0; k < generators.size(); ++k) {
        if (theta[k] != 0.0) {
            active.push_back(generators[k]);
            angles.push_back(theta[k]);
        }
    }
    if (active.empty()) {
        return;
    }
    auto qubits = joint_support(active);
    apply_unitary(rho, rotation_unitary(active, angles, qubits), qubits);
}

double expectation(const DensityMatrix& rho, const PauliString& p) {
    check_length(rho, p);
    DenseMasks masks = dense_masks(p);
    static const cd ipow[4] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
    const Eigen::MatrixXcd& m = rho.matrix();
    cd acc = 0;
    for (std::size_t k = 0; k < rho.dim(); ++k) {
        double s = (std::popcount(k & masks.z) & 1) ? -1.0 : 1.0;
        acc += s * m(k, k ^ masks.x);
    }
    return (ipow[p.num_y() % 4] * acc).real();
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> qubits) {
    std::size_t n = rho.num_qubits();
    check_qubits(n, qubits);
    if (qubits.empty()) {
        throw std::invalid_argument("partial trace must keep at least one qubit");
    }
    std::size_t k = qubits.size();
    std::vector<std::size_t> kept(std::size_t{1} << k, 0);
    std::size_t kept_mask = 0;
    for (std::size_t t = 0; t < k; ++t) {
        kept_mask |= dense_bit(n, qubits[t]);
    }
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t t = 0; t < k; ++t) {
            if ((a >> (k - 1 - t)) & 1) {
                kept[a] |= dense_bit(n, qubits[t]);
            }
        }
    }
    std::vector<std::size_t> env;
    for (std::size_t e = 0; e < rho.dim(); ++e) {
        if ((e & kept_mask) == 0) {
            env.push_back(e);
        }
    }
    const Eigen::MatrixXcd& m = rho.matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(kept.size(), kept.size());
    for (std::size_t b = 0; b < kept.size(); ++b) {
        for (std::size_t a = 0; a < kept.size(); ++a) {
            cd acc = 0;
            for (std::size_t e : env) {
                acc += m(kept[a] | e, kept[b] | e);
            }
            out(a, b) = acc;
        }
    }
    return DensityMatrix::from_matrix(std::move(out), false);
}

std::vector<Pauli1> parse_basis(std::string_view text) {
    std::vector<Pauli1> out;
    for (char c : text) {
        Pauli1 p = pauli1_from_char(c);
        if (p == Pauli1::I) {
            throw std::invalid_argument("measurement basis must be X, Y or Z");
        }
        out.push_back(p);
    }
    return out;
}

std::vector<double> basis_probabilities(const DensityMatrix& rho, const std::vector<Pauli1>& basis) {
    std::size_t n = rho.num_qubits();
    if (basis.size() != n) {
        throw std::invalid_argument("basis length must equal the qubit count");
    }
    // Rotate and reduce one qubit at a time, keeping only blocks that are
    // diagonal in the already-measured qubits.
    std::vector<Eigen::MatrixXcd> blocks{rho.matrix()};
    for (std::size_t q = 0; q < n; ++q) {
        Eigen::Matrix2cd u = basis_change(basis[q]);
        std::vector<Eigen::MatrixXcd> next;
        next.reserve(blocks.size() * 2);
        for (const auto& m : blocks) {
            Eigen::Index h = m.rows() / 2;
            for (int o = 0; o < 2; ++o) {
                Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(h, h);
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        cd w = u(o, a) * std::conj(u(o, b));
                        if (std::abs(w) < 1e-300) {
                            continue;
                        }
                        acc += w * m.block(a * h, b * h, h, h);
                    }
                }
                next.push_back(std::move(acc));
            }
        }
        blocks = std::move(next);
    }
    std::vector<double> probs(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        probs[i] = std::max(0.0, blocks[i](0, 0).real());
    }
    return probs;
}

std::string bitstring(std::size_t index, std::size_t num_bits) {
    std::string s(num_bits, '0');
    for (std::size_t q = 0; q < num_bits; ++q) {
        if ((index >> (num_bits - 1 - q)) & 1) {
            s[q] = '1';
        }
    }
    return s;
}

Histogram sample_probabilities(std::span<const double> probabilities, std::size_t num_qubits,
                               std::uint64_t shots, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Histogram hist;
    double remaining_mass = 0.0;
    for (double p : probabilities) {
        remaining_mass += p;
    }
    std::uint64_t remaining = shots;
    for (std::size_t i = 0; i < probabilities.size() && remaining > 0; ++i) {
        double p = probabilities[i];
        std::uint64_t count;
        if (i + 1 == probabilities.size() || p >= remaining_mass) {
            count = remaining;
        } else if (p <= 0.0) {
            count = 0;
        } else {
            std::binomial_distribution<std::uint64_t> dist(remaining, std::min(1.0, p / remaining_mass));
            count = dist(rng);
        }
        remaining_mass -= p;
        remaining -= count;
        if (count > 0) {
            hist[bitstring(i, num_qubits)] += count;
        }
    }
    return hist;
}

Histogram sample_counts(const DensityMatrix& rho, const std::vector<Pauli1>& basis, std::uint64_t shots,
                        std::uint64_t seed) {
    if (shots == 0) {
        throw std::invalid_argument("shots must be at least 1");
    }
    return sample_probabilities(basis_probabilities(rho, basis), rho.num_qubits(), shots, seed);
}

std::uint64_t total_shots(const Histogram& hist) {
    std::uint64_t total = 0;
    for (const auto& [key, count] : hist) {
        total += count;
    }
    return total;
}

ReadoutConfusion::ReadoutConfusion(std::vector<Eigen::Matrix2d> per_qubit) : matrices_(std::move(per_qubit)) {
    for (const auto& m : matrices_) {
        for (int t = 0; t < 2; ++t) {
            if (m(t, 0) < 0 || m(t, 1) < 0 || m(t, 0) > 1 || m(t, 1) > 1) {
                throw std::invalid_argument("confusion entries must lie in [0, 1]");
            }
            if (std::abs(m(t, 0) + m(t, 1) - 1.0) > 1e-12) {
                throw std::invalid_argument("confusion rows must sum to 1");
            }
        }
    }
}

ReadoutConfusion ReadoutConfusion::identity(std::size_t num_qubits) {
    return ReadoutConfusion(std::vector<Eigen::Matrix2d>(num_qubits, Eigen::Matrix2d::Identity()));
}

ReadoutConfusion ReadoutConfusion::uniform(std::size_t num_qubits, double p01, double p10) {
    Eigen::Matrix2d m;
    m << 1 - p01, p01, p10, 1 - p10;
    return ReadoutConfusion(std::vector<Eigen::Matrix2d>(num_qubits, m));
}

bool ReadoutConfusion::is_identity() const {
    for (const auto& m : matrices_) {
        if (m(0, 1) != 0.0 || m(1, 0) != 0.0) {
            return false;
        }
    }
    return true;
}

Histogram apply_readout_confusion(const Histogram& hist, const ReadoutConfusion& confusion,
                                  std::uint64_t seed) {
    if (confusion.is_identity()) {
        return hist;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Histogram out;
    for (const auto& [bits, count] : hist) {
        if (bits.size() != confusion.num_qubits()) {
            throw std::invalid_argument("bitstring length does not match the confusion model");
        }
        for (std::uint64_t shot = 0; shot < count; ++shot) {
            std::string observed = bits;
            for (std::size_t q = 0; q < bits.size(); ++q) {
                int t = bits[q] == '1' ? 1 : 0;
                double flip = confusion.qubit(q)(t, 1 - t);
                if (flip > 0.0 && uniform(rng) < flip) {
                    observed[q] = t ? '0' : '1';
                }
            }
            out[observed] += 1;
        }
    }
    return out;
}

}  // namespace rotpauli
