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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rotpauli/simulator.hpp"
#include "test_helpers.hpp"

using namespace rotpauli;
using rotpauli::testing::max_abs_diff;

namespace {

GateLayer random_clifford_layer(std::size_t variant) {
    switch (variant % 4) {
        case 0:
            return GateLayer{{Gate::cx(0, 1), Gate::h(2)}};
        case 1:
            return GateLayer{{Gate::sx(0), Gate::cx(2, 1)}};
        case 2:
            return GateLayer{{Gate::s(1), Gate::y(2), Gate::sdg(0)}};
        default:
            return GateLayer{{Gate::rz(0, 0.3), Gate::rp(PauliString::from_string("XY"), {1, 2}, 0.2)}};
    }
}

}  // namespace

TEST_SUITE("simulator") {
    TEST_CASE("identity layer leaves the state unchanged") {
        auto rho = testing::random_mixed_state(3, 5);
        auto before = rho.matrix();
        apply_layer(rho, GateLayer{});
        CHECK(max_abs_diff(rho.matrix(), before) == 0.0);
    }

    TEST_CASE("CX on |+0> gives a Bell state") {
        auto rho = prepare_product_state("+0");
        apply_gate(rho, Gate::cx(0, 1));
        CHECK(expectation(rho, PauliString::from_string("XX")) == doctest::Approx(1.0));
        CHECK(expectation(rho, PauliString::from_string("ZZ")) == doctest::Approx(1.0));
        CHECK(expectation(rho, PauliString::from_string("YY")) == doctest::Approx(-1.0));
        CHECK(std::abs(expectation(rho, PauliString::from_string("ZI"))) < 1e-14);
    }

    TEST_CASE("gate matrices agree with conjugation of dense Paulis") {
        // H X H = Z, S X S^dag = Y, CX (X I) CX = X X
        auto h = Gate::h(0).matrix();
        CHECK(max_abs_diff(h * pauli_matrix(PauliString::from_string("X")) * h.adjoint(),
                           pauli_matrix(PauliString::from_string("Z"))) < 1e-14);
        auto s = Gate::s(0).matrix();
        CHECK(max_abs_diff(s * pauli_matrix(PauliString::from_string("X")) * s.adjoint(),
                           pauli_matrix(PauliString::from_string("Y"))) < 1e-14);
        auto cx = Gate::cx(0, 1).matrix();
        CHECK(max_abs_diff(cx * pauli_matrix(PauliString::from_string("XI")) * cx.adjoint(),
                           pauli_matrix(PauliString::from_string("XX"))) < 1e-14);
        auto sx = Gate::sx(0).matrix();
        CHECK(max_abs_diff(sx * sx, pauli_matrix(PauliString::from_string("X"))) < 1e-14);
    }

    TEST_CASE("rotation about one Pauli is cos I - i sin P") {
        auto p = PauliString::from_string("YZ");
        double theta = 0.37;
        std::vector<PauliString> gens{p};
        std::vector<double> angles{theta};
        std::vector<std::size_t> qubits{0, 1};
        Eigen::MatrixXcd u = rotation_unitary(gens, angles, qubits);
        Eigen::MatrixXcd expect = std::cos(theta) * Eigen::MatrixXcd::Identity(4, 4) -
                                  std::complex<double>(0, std::sin(theta)) * pauli_matrix(p);
        CHECK(max_abs_diff(u, expect) < 1e-14);
    }

    TEST_CASE("unitaries preserve trace, hermiticity and purity") {
        for (std::size_t v = 0; v < 8; ++v) {
            auto rho = testing::random_pure_state(3, 100 + v);
            apply_layer(rho, random_clifford_layer(v));
            CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(rho.hermiticity_error() < 1e-12);
            CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("noise channels preserve trace and positivity and do not raise purity") {
        auto graph = ConnectivityGraph::line(3);
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            auto model = random_model(graph, seed, 0.1, 0.2);
            auto rho = testing::random_mixed_state(3, seed);
            double purity = rho.purity();
            instantiate(NoisyLayer{random_clifford_layer(seed), model})(rho);
            CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(rho.hermiticity_error() < 1e-12);
            CHECK(rho.min_eigenvalue() > -1e-12);
            CHECK(rho.purity() <= purity + 1e-12);
        }
    }

    TEST_CASE("Pauli channel equals the explicit sum") {
        LocalSupport support{{1, 2}};
        PauliRates rates(support, testing::random_rates(15, 0.02, 3));
        auto rho = testing::random_mixed_state(3, 9);
        Eigen::MatrixXcd expect = Eigen::MatrixXcd::Zero(8, 8);
        auto locals = all_paulis(2);
        for (std::size_t a = 0; a < 16; ++a) {
            auto p = PauliString::embed(locals[a], support.qubits, 3);
            Eigen::MatrixXcd pm = pauli_matrix(p);
            expect += rates.rates()[a] * pm * rho.matrix() * pm;
        }
        apply_pauli_channel(rho, rates);
        CHECK(max_abs_diff(rho.matrix(), expect) < 1e-14);
    }

    TEST_CASE("measurement probabilities match expectations") {
        auto rho = testing::random_mixed_state(2, 21);
        for (std::string basis_text : {"XZ", "YY", "ZX"}) {
            auto basis = parse_basis(basis_text);
            auto probs = basis_probabilities(rho, basis);
            double total = 0.0;
            for (double p : probs) {
                total += p;
            }
            CHECK(total == doctest::Approx(1.0));
            // <P0 P1> = p00 - p01 - p10 + p11
            PauliString full = PauliString::from_string(basis_text);
            CHECK(probs[0] - probs[1] - probs[2] + probs[3] ==
                  doctest::Approx(expectation(rho, full)).epsilon(1e-12));
            PauliString first = PauliString::from_string(basis_text.substr(0, 1) + "I");
            CHECK(probs[0] + probs[1] - probs[2] - probs[3] ==
                  doctest::Approx(expectation(rho, first)).epsilon(1e-12));
        }
    }

    TEST_CASE("sampling is seeded and keeps the shot count") {
        auto rho = prepare_product_state("+r");
        auto basis = parse_basis("ZZ");
        auto a = sample_counts(rho, basis, 1000, 7);
        auto b = sample_counts(rho, basis, 1000, 7);
        auto c = sample_counts(rho, basis, 1000, 8);
        CHECK(a == b);
        CHECK(a != c);
        CHECK(total_shots(a) == 1000);
        for (const auto& [bits, count] : a) {
            CHECK(bits.size() == 2);
            CHECK(count > 150);
        }
    }

    TEST_CASE("bitstrings put qubit 0 first") {
        auto rho = prepare_product_state("10");
        auto probs = basis_probabilities(rho, parse_basis("ZZ"));
        CHECK(probs[2] == doctest::Approx(1.0));
        CHECK(bitstring(2, 2) == "10");
        auto hist = sample_counts(rho, parse_basis("ZZ"), 10, 1);
        CHECK(hist.at("10") == 10);
    }

    TEST_CASE("partial trace of a product state") {
        auto rho = prepare_product_state("0+r");
        std::vector<std::size_t> keep{2, 0};
        auto reduced = partial_trace(rho, keep);
        auto expect = prepare_product_state("r0");
        CHECK(max_abs_diff(reduced.matrix(), expect.matrix()) < 1e-14);
    }

    TEST_CASE("product state labels have the right Bloch vectors") {
        for (auto [text, pauli, value] : {std::tuple{"0", "Z", 1.0},
                                          {"1", "Z", -1.0},
                                          {"+", "X", 1.0},
                                          {"-", "X", -1.0},
                                          {"r", "Y", 1.0},
                                          {"l", "Y", -1.0}}) {
            auto rho = prepare_product_state(text);
            CHECK(expectation(rho, PauliString::from_string(pauli)) == doctest::Approx(value));
        }
        CHECK(to_string(parse_product_state("0+-i")) == "0+l");
        CHECK_THROWS(parse_product_state("0q"));
    }

    TEST_CASE("readout confusion") {
        CHECK(ReadoutConfusion::identity(3).is_identity());
        auto conf = ReadoutConfusion::uniform(1, 0.1, 0.0);
        Histogram zeros{{"0", 10000}};
        auto noisy = apply_readout_confusion(zeros, conf, 3);
        CHECK(total_shots(noisy) == 10000);
        CHECK(noisy.at("1") > 850);
        CHECK(noisy.at("1") < 1150);
        Histogram ones{{"1", 100}};
        CHECK(apply_readout_confusion(ones, conf, 3) == ones);
    }

    TEST_CASE("invalid states are rejected") {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(2, 2);
        CHECK_THROWS(DensityMatrix::from_matrix(m));
        m(0, 0) = 1.5;
        m(1, 1) = -0.5;
        CHECK_THROWS(DensityMatrix::from_matrix(m));
    }
}
