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
#include <random>

#include "doctest.h"
#include "rotpauli/ptm.hpp"
#include "test_helpers.hpp"

using namespace rotpauli;
using rotpauli::testing::max_abs_diff;

namespace {

std::vector<double> random_angles(std::size_t count, double max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-max, max);
    std::vector<double> out(count);
    for (auto& x : out) {
        x = u(rng);
    }
    return out;
}

}  // namespace

TEST_SUITE("ptm") {
    TEST_CASE("vectorize and devectorize round trip") {
        for (std::size_t n = 1; n <= 3; ++n) {
            auto rho = testing::random_mixed_state(n, 10 + n);
            auto v = vectorize(rho);
            CHECK(v[0] == doctest::Approx(1.0 / static_cast<double>(1 << n)));
            CHECK(v.expectation(0) == doctest::Approx(1.0));
            auto back = devectorize(v);
            CHECK(max_abs_diff(back.matrix(), rho.matrix()) < 1e-14);
        }
    }

    TEST_CASE("unitary transfer matrix agrees with simulated conjugation") {
        GateLayer layer{{Gate::cx(0, 1)}};
        auto via_channel = channel_to_ptm([&](DensityMatrix& rho) { apply_layer(rho, layer); }, 2);
        auto via_unitary = unitary_ptm(Gate::cx(0, 1).matrix());
        CHECK(max_abs_diff(via_channel.matrix(), via_unitary.matrix()) < 1e-14);
        std::vector<std::size_t> qubits{0, 1};
        CHECK(max_abs_diff(layer_ptm(layer, qubits).matrix(), via_unitary.matrix()) < 1e-14);
        // matrix() is in the gate's own qubit order: cx(1, 0) seen from {1, 0}
        GateLayer flipped{{Gate::cx(1, 0)}};
        std::vector<std::size_t> reversed{1, 0};
        CHECK(max_abs_diff(layer_ptm(flipped, reversed).matrix(),
                           unitary_ptm(Gate::cx(1, 0).matrix()).matrix()) < 1e-14);
        CHECK(max_abs_diff(layer_ptm(flipped, qubits).matrix(), via_unitary.matrix()) > 0.5);
    }

    TEST_CASE("transfer matrix acts like the channel on states") {
        auto graph = ConnectivityGraph::line(2);
        auto model = random_model(graph, 3, 0.05, 0.05);
        Channel channel = instantiate(NoisyLayer{GateLayer{{Gate::cx(0, 1)}}, model});
        auto ptm = channel_to_ptm(channel, 2);
        auto rho = testing::random_mixed_state(2, 4);
        auto predicted = ptm.apply(vectorize(rho));
        channel(rho);
        CHECK((predicted.components() - vectorize(rho).components()).cwiseAbs().maxCoeff() < 1e-14);
        // trace preserving: first row is e_0
        CHECK(ptm(0, 0) == doctest::Approx(1.0));
        for (std::size_t j = 1; j < 16; ++j) {
            CHECK(std::abs(ptm(0, j)) < 1e-14);
        }
    }

    TEST_CASE("composition is channel composition") {
        auto graph = ConnectivityGraph::line(2);
        Channel a = instantiate(NoisyLayer{GateLayer{{Gate::h(0)}}, random_model(graph, 1, 0.05, 0.02)});
        Channel b = instantiate(NoisyLayer{GateLayer{{Gate::cx(0, 1)}}, random_model(graph, 2, 0.05, 0.02)});
        auto ab = channel_to_ptm(
            [&](DensityMatrix& rho) {
                b(rho);
                a(rho);
            },
            2);
        auto composed = compose(channel_to_ptm(a, 2), channel_to_ptm(b, 2));
        CHECK(max_abs_diff(ab.matrix(), composed.matrix()) < 1e-13);
    }

    TEST_CASE("rotation transfer matrix matches the exact simulated rotation") {
        auto gens = local_generators(ConnectivityGraph::line(2));
        auto theta = random_angles(gens.size(), 0.1, 77);
        auto exact = rotation_ptm(gens, theta);
        auto simulated =
            channel_to_ptm([&](DensityMatrix& rho) { apply_coherent_rotation(rho, gens, theta); }, 2);
        CHECK(max_abs_diff(exact.matrix(), simulated.matrix()) < 1e-13);
        // orthogonal
        Eigen::MatrixXd m = exact.matrix();
        CHECK(max_abs_diff(Eigen::MatrixXd(m.transpose() * m), Eigen::MatrixXd::Identity(16, 16)) < 1e-13);
    }

    TEST_CASE("small-angle matrix is the first-order expansion") {
        auto gens = local_generators(ConnectivityGraph::line(2));
        std::vector<double> theta(gens.size(), 0.0);
        CHECK(max_abs_diff(small_angle_ptm(gens, theta, 2).matrix(), Eigen::MatrixXd::Identity(16, 16)) ==
              0.0);
        // error is second order: halving theta divides it by about four
        auto base = random_angles(gens.size(), 0.02, 5);
        double prev = 0.0;
        for (double scale : {1.0, 0.5, 0.25}) {
            std::vector<double> t(base);
            for (auto& x : t) {
                x *= scale;
            }
            double err = max_abs_diff(small_angle_ptm(gens, t, 2).matrix(), rotation_ptm(gens, t).matrix());
            if (prev > 0.0) {
                CHECK(prev / err > 3.5);
                CHECK(prev / err < 4.5);
            }
            prev = err;
        }
    }

    TEST_CASE("generator matrix is antisymmetric") {
        for (const auto& k : all_paulis(2)) {
            Eigen::MatrixXd c = generator_matrix(k);
            CHECK(max_abs_diff(c, Eigen::MatrixXd(-c.transpose())) == 0.0);
        }
    }

    TEST_CASE("Pauli channel transfer matrix is diagonal") {
        PauliRates rates(LocalSupport{{1}}, std::vector<double>{0.01, 0.02, 0.03});
        auto ptm = pauli_channel_ptm(rates, 2);
        Eigen::MatrixXd off = ptm.matrix();
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() == 0.0);
        // Z on qubit 1 flips under X and Y errors
        CHECK(ptm(3, 3) == doctest::Approx(1.0 - 2 * (0.01 + 0.02)));
    }

    TEST_CASE("inverse and marginals") {
        auto ptm = unitary_ptm(Gate::h(0).matrix());
        CHECK(max_abs_diff(compose(ptm, ptm.inverse()).matrix(), Eigen::MatrixXd::Identity(4, 4)) < 1e-14);
        auto rho = prepare_product_state("0+r");
        std::vector<std::size_t> keep{1};
        auto marginal = marginalize(vectorize(rho), keep);
        CHECK(marginal.expectation(1) == doctest::Approx(1.0));
        CHECK(std::abs(marginal.expectation(3)) < 1e-14);
    }

    TEST_CASE("separability of layers on subsets") {
        GateLayer layer{{Gate::cx(0, 1), Gate::h(2)}};
        std::vector<std::size_t> ok{0, 1};
        std::vector<std::size_t> bad{1, 2};
        CHECK(layer_separable_on(layer, ok));
        CHECK_FALSE(layer_separable_on(layer, bad));
        CHECK_THROWS(layer_ptm(layer, bad));
    }
}
