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

#include "doctest.h"
#include "rotpauli/pauli.hpp"
#include "rotpauli/ptm.hpp"
#include "rotpauli/simulator.hpp"
#include "test_helpers.hpp"

using namespace rotpauli;
using rotpauli::testing::i_pow;
using rotpauli::testing::max_abs_diff;

TEST_SUITE("pauli_algebra") {
    TEST_CASE("text and lex index round trip") {
        for (std::size_t n = 1; n <= 3; ++n) {
            auto all = all_paulis(n);
            REQUIRE(all.size() == (std::size_t{1} << (2 * n)));
            for (std::size_t i = 0; i < all.size(); ++i) {
                CHECK(all[i].lex_index() == i);
                CHECK(PauliString::from_lex_index(n, i) == all[i]);
                CHECK(PauliString::from_string(all[i].str()) == all[i]);
            }
        }
        CHECK(PauliString::from_string("XI").lex_index() == 4);
        CHECK(PauliString::from_string("IX").lex_index() == 1);
        CHECK_THROWS(PauliString::from_string("XQ"));
    }

    TEST_CASE("masks put qubit q in bit q") {
        auto p = PauliString::from_string("XYZI");
        CHECK(p.x_mask() == 0b0011);
        CHECK(p.z_mask() == 0b0110);
        CHECK(p.weight() == 3);
        CHECK(p.num_y() == 1);
        CHECK(p.support() == std::vector<std::size_t>{0, 1, 2});
    }

    TEST_CASE("embed and restrict are inverse") {
        auto local = PauliString::from_string("YZ");
        std::vector<std::size_t> qubits{4, 1};
        auto full = PauliString::embed(local, qubits, 6);
        CHECK(full.str() == "IZIIYI");
        CHECK(full.restrict_to(qubits) == local);
    }

    TEST_CASE("products match dense matrices for all one- and two-qubit pairs") {
        for (std::size_t n = 1; n <= 2; ++n) {
            for (const auto& a : all_paulis(n)) {
                for (const auto& b : all_paulis(n)) {
                    auto c = multiply(a, b);
                    Eigen::MatrixXcd dense = pauli_matrix(a) * pauli_matrix(b);
                    Eigen::MatrixXcd expect = i_pow(c.phase) * pauli_matrix(c.pauli);
                    CHECK(max_abs_diff(dense, expect) < 1e-14);
                }
            }
        }
    }

    TEST_CASE("phased products associate") {
        auto paulis = all_paulis(2);
        for (std::size_t i = 0; i < 16; i += 3) {
            for (std::size_t j = 0; j < 16; j += 2) {
                for (std::size_t k = 0; k < 16; ++k) {
                    PhasedPauli a{paulis[i]}, b{paulis[j]}, c{paulis[k]};
                    CHECK(multiply(multiply(a, b), c) == multiply(a, multiply(b, c)));
                }
            }
        }
    }

    TEST_CASE("commutation matches dense commutators") {
        for (std::size_t n = 1; n <= 2; ++n) {
            for (const auto& a : all_paulis(n)) {
                for (const auto& b : all_paulis(n)) {
                    Eigen::MatrixXcd comm =
                        pauli_matrix(a) * pauli_matrix(b) - pauli_matrix(b) * pauli_matrix(a);
                    bool dense_commutes = comm.cwiseAbs().maxCoeff() < 1e-14;
                    CHECK(commutes(a, b) == dense_commutes);
                }
            }
        }
    }

    TEST_CASE("structure constants match the dense first-order generator") {
        // T_ij = delta_ij + theta Tr[P_i (-i [P_k, P_j])] / 2^n
        for (std::size_t n = 1; n <= 2; ++n) {
            auto paulis = all_paulis(n);
            double dim = static_cast<double>(std::size_t{1} << n);
            for (const auto& k : paulis) {
                Eigen::MatrixXcd pk = pauli_matrix(k);
                for (const auto& i : paulis) {
                    for (const auto& j : paulis) {
                        Eigen::MatrixXcd pj = pauli_matrix(j);
                        Eigen::MatrixXcd d = std::complex<double>(0, -1) * (pk * pj - pj * pk);
                        double dense = (pauli_matrix(i) * d).trace().real() / dim;
                        CHECK(structure_constant(k, i, j) == doctest::Approx(dense).epsilon(1e-14));
                    }
                }
            }
        }
    }

    TEST_CASE("Walsh-Hadamard transforms round trip") {
        for (std::size_t l = 1; l <= 2; ++l) {
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                std::size_t count = (std::size_t{1} << (2 * l));
                auto raw = testing::random_rates(count, 1.0, seed);
                auto f = walsh_hadamard(l, raw);
                auto back = inverse_walsh_hadamard(l, f);
                for (std::size_t a = 0; a < count; ++a) {
                    CHECK(back[a] == doctest::Approx(raw[a]).epsilon(1e-13));
                }
                auto again = walsh_hadamard(l, inverse_walsh_hadamard(l, raw));
                for (std::size_t a = 0; a < count; ++a) {
                    CHECK(again[a] == doctest::Approx(raw[a]).epsilon(1e-13));
                }
            }
        }
    }

    TEST_CASE("eigenvalues of a Pauli channel agree with its transfer matrix") {
        LocalSupport support{{0, 1}};
        auto values = testing::random_rates(15, 0.01, 42);
        PauliRates rates(support, values);
        auto f = rates_to_eigenvalues(rates);
        auto ptm = pauli_channel_ptm(rates, 2);
        CHECK(f[0] == doctest::Approx(1.0));
        for (std::size_t b = 0; b < 16; ++b) {
            CHECK(f[b] == doctest::Approx(ptm(b, b)).epsilon(1e-14));
        }
        auto back = eigenvalues_to_rates(support, f);
        for (std::size_t a = 0; a < 16; ++a) {
            CHECK(back.rates()[a] == doctest::Approx(rates.rates()[a]).epsilon(1e-13));
        }
    }

    TEST_CASE("rates must form a distribution") {
        LocalSupport one{{0}};
        CHECK_THROWS(PauliRates(one, std::vector<double>{0.5, 0.4, 0.3}));
        CHECK_THROWS(PauliRates(one, std::vector<double>{-0.1, 0.0, 0.0}));
        CHECK_THROWS(PauliRates(one, std::vector<double>{0.1, 0.0}));
        auto zero = PauliRates::zero(one);
        CHECK(zero.error_probability() == 0.0);
    }

    TEST_CASE("generator counts") {
        CHECK(local_generators(ConnectivityGraph::line(2)).size() == 15);
        CHECK(local_generators(ConnectivityGraph::seven_qubit_tree()).size() == 75);
        auto gens = local_generators(ConnectivityGraph::line(2));
        CHECK(gens.front().str() == "XI");
        CHECK(gens[5].str() == "IZ");
        CHECK(gens[6].str() == "XX");
        CHECK(gens.back().str() == "ZZ");
    }
}
