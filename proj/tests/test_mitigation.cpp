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
#include "rotpauli/errors.hpp"
#include "rotpauli/mitigation.hpp"
#include "test_helpers.hpp"

using namespace rotpauli;
using rotpauli::testing::max_abs_diff;

namespace {

const Eigen::MatrixXd kId16 = Eigen::MatrixXd::Identity(16, 16);

TransferMatrix element_ptm(const CorrectionElement& e, bool corrected_cx = false) {
    return channel_to_ptm(fragment_channel(build_correction_element(e, corrected_cx)), 2);
}

CorrectionElement element_with(std::span<const double> theta) {
    CorrectionElement e;
    std::copy(theta.begin(), theta.end(), e.theta.begin());
    return e;
}

std::vector<double> mixed_angles(double scale) {
    std::vector<double> a(15);
    for (std::size_t k = 0; k < 15; ++k) {
        a[k] = scale * (0.3 + 0.05 * static_cast<double>(k)) * ((k % 2) ? -1.0 : 1.0);
    }
    return a;
}

}  // namespace

TEST_SUITE("mitigation") {
    TEST_CASE("correction element with zero angles is the identity") {
        CHECK(max_abs_diff(element_ptm(CorrectionElement{}).matrix(), kId16) < 1e-12);
        auto cx = unitary_ptm(Gate::cx(0, 1).matrix());
        CHECK(max_abs_diff(element_ptm(CorrectionElement{}, true).matrix(), cx.matrix()) < 1e-12);
    }

    TEST_CASE("correction element gate counts") {
        CorrectionElement e;
        auto fragment = build_correction_element(e);
        std::size_t cx = 0, rz = 0, rp = 0;
        for (const auto& layer : fragment) {
            CHECK(layer.gates.size() == 1);
            for (const auto& g : layer.gates) {
                cx += g.kind == GateKind::CX;
                rz += g.kind == GateKind::Rz;
                rp += g.kind == GateKind::Rp;
            }
        }
        CHECK(cx == 4);
        CHECK(rz == 4);
        CHECK(rp == 15);
        auto corrected_cx = build_correction_element(e, true);
        CHECK(corrected_cx.size() == fragment.size() - 1);
    }

    TEST_CASE("each angle undoes its own generator") {
        auto gens = CorrectionElement::local_generators();
        for (std::size_t k = 0; k < 15; ++k) {
            CorrectionElement e;
            e.theta[k] = 0.01;
            std::vector<PauliString> g{gens[k]};
            std::vector<double> a{0.01};
            auto noise = rotation_ptm(g, a);
            double uncorrected = max_abs_diff(noise.matrix(), kId16);
            double residual = max_abs_diff(compose(element_ptm(e), noise).matrix(), kId16);
            CAPTURE(gens[k].str());
            CHECK(residual < 1e-12 + 1e-3 * uncorrected);
        }
    }

    TEST_CASE("joint correction leaves a second-order residual") {
        auto gens = CorrectionElement::local_generators();
        double prev = 0.0;
        for (double scale : {0.02, 0.01, 0.005}) {
            auto a = mixed_angles(scale);
            double residual =
                max_abs_diff(compose(element_ptm(element_with(a)), rotation_ptm(gens, a)).matrix(), kId16);
            double uncorrected = max_abs_diff(rotation_ptm(gens, a).matrix(), kId16);
            CHECK(residual < 0.05 * uncorrected);
            if (prev > 0.0) {
                CHECK(prev / residual > 3.5);
            }
            prev = residual;
        }
    }

    TEST_CASE("picking angles out of a device estimate") {
        auto graph = ConnectivityGraph::line(3);
        auto gens = local_generators(graph);
        std::vector<double> theta(gens.size(), 0.0);
        auto yz = LayerNoiseModel(graph).generator_index(PauliString::from_string("IYZ"));
        theta[yz] = 0.02;
        theta[LayerNoiseModel(graph).generator_index(PauliString::from_string("IIX"))] = -0.01;
        auto forward = CorrectionElement::from_estimate(1, 2, gens, theta);
        CHECK(forward.theta[6 + 3 * 1 + 2] == 0.02);
        CHECK(forward.theta[3] == -0.01);
        auto reversed = CorrectionElement::from_estimate(2, 1, gens, theta);
        CHECK(reversed.theta[6 + 3 * 2 + 1] == 0.02);
        CHECK(reversed.theta[0] == -0.01);
    }

    TEST_CASE("Clifford conjugation matches dense matrices") {
        GateLayer layer{{Gate::cx(0, 1), Gate::h(2)}};
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(8, 8);
        auto rho_u = channel_to_ptm([&](DensityMatrix& rho) { apply_layer(rho, layer); }, 3);
        for (const auto& p : all_paulis(3)) {
            int sign = 0;
            auto q = conjugate_pauli(layer, p, &sign);
            // column of the PTM for p has a single entry at q
            CHECK(rho_u(q.lex_index(), p.lex_index()) == doctest::Approx(static_cast<double>(sign)));
        }
        CHECK_THROWS(conjugate_pauli(GateLayer{{Gate::rz(0, 0.1)}}, PauliString::from_string("X")));
    }

    TEST_CASE("twirling projects onto the diagonal") {
        auto graph = ConnectivityGraph::line(2);
        auto model = random_model(graph, 9, 0.05, 0.02);
        std::vector<std::size_t> both{0, 1};
        for (const auto& layer : {GateLayer{}, GateLayer{{Gate::cx(0, 1)}}}) {
            Channel noisy = instantiate(NoisyLayer{layer, model});
            auto set = build_twirl_set(layer, 2, both);
            CHECK(set.pairs.size() == 16);
            auto twirled = channel_to_ptm(twirl_average(noisy, set), 2);
            auto ideal = channel_to_ptm([&](DensityMatrix& rho) { apply_layer(rho, layer); }, 2);
            // undo the ideal layer: the remaining noise must be diagonal
            Eigen::MatrixXd noise = ideal.matrix().transpose() * twirled.matrix();
            Eigen::MatrixXd off = noise;
            off.diagonal().setZero();
            CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
            // diagonal equals the diagonal of the untwirled noise
            Eigen::MatrixXd raw = ideal.matrix().transpose() * channel_to_ptm(noisy, 2).matrix();
            CHECK((noise.diagonal() - raw.diagonal()).cwiseAbs().maxCoeff() < 1e-14);
        }
        CHECK_THROWS(build_twirl_set(GateLayer{{Gate::rz(0, 0.2)}}, 2, both));
    }

    TEST_CASE("random twirls keep the ideal action") {
        Circuit circuit;
        circuit.num_qubits = 2;
        circuit.add(GateLayer{{Gate::h(0)}});
        circuit.add(GateLayer{{Gate::cx(0, 1)}}, 0);
        circuit.add(GateLayer{{Gate::s(1)}}, 0);
        std::vector<std::size_t> which{1, 2};
        auto samples = pauli_twirl(circuit, which, 12, 5);
        CHECK(samples.size() == 12);
        std::vector<Channel> none{[](DensityMatrix&) {}};
        auto reference = prepare_product_state("0+");
        run_circuit(reference, circuit, none);
        for (const auto& c : samples) {
            auto rho = prepare_product_state("0+");
            run_circuit(rho, c, none);
            CHECK(max_abs_diff(rho.matrix(), reference.matrix()) < 1e-13);
        }
        auto again = pauli_twirl(circuit, which, 12, 5);
        for (std::size_t s = 0; s < 12; ++s) {
            CHECK(again[s].layers.size() == samples[s].layers.size());
        }
    }

    TEST_CASE("quasi-probability inverse undoes the channel") {
        LocalSupport support{{0, 1}};
        PauliRates rates(support, testing::random_rates(15, 0.01, 3));
        auto q = pec_inverse(rates);
        double total = 0.0, abs_total = 0.0;
        for (double w : q.weights) {
            total += w;
            abs_total += std::abs(w);
        }
        CHECK(total == doctest::Approx(1.0));
        CHECK(q.gamma == doctest::Approx(abs_total));
        CHECK(q.gamma > 1.0);
        PecInverse inv = pec_inverse(std::vector<PauliRates>{rates});
        auto combined = channel_to_ptm(
            [&](DensityMatrix& rho) {
                apply_pauli_channel(rho, rates);
                apply_quasi_inverse(rho, inv);
            },
            2);
        CHECK(max_abs_diff(combined.matrix(), kId16) < 1e-13);
        PauliRates flip(LocalSupport{{0}}, std::vector<double>{0.5, 0.0, 0.0});
        CHECK_THROWS_AS(pec_inverse(flip), NumericalError);
    }

    TEST_CASE("exhaustive PEC is unbiased") {
        auto graph = ConnectivityGraph::line(2);
        LayerNoiseModel model(graph);
        auto source = random_model(graph, 3, 0.0, 0.03);
        for (const auto& r : source.rates()) {
            model.set_rates(r);
        }
        GateLayer cx{{Gate::cx(0, 1)}};
        NoisyLayer noisy{cx, model};
        // twirled noise of CX is Pauli with the rates read off the PTM diagonal
        std::vector<std::size_t> both{0, 1};
        auto set = build_twirl_set(cx, 2, both);
        auto ideal = unitary_ptm(Gate::cx(0, 1).matrix());
        auto twirled = channel_to_ptm(twirl_average(instantiate(noisy), set), 2);
        Eigen::MatrixXd noise = ideal.matrix().transpose() * twirled.matrix();
        std::vector<double> f(16);
        for (std::size_t i = 0; i < 16; ++i) {
            f[i] = noise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        }
        auto rates = eigenvalues_to_rates(LocalSupport{{0, 1}}, f);
        PecExperiment exp{parse_product_state("0+"), 4, instantiate(noisy), set,
                          pec_inverse(std::vector<PauliRates>{rates})};
        auto state = pec_exhaustive_state(exp);
        auto ideal_state = prepare_product_state("0+");
        for (int m = 0; m < 4; ++m) {
            apply_gate(ideal_state, Gate::cx(0, 1));
        }
        CHECK(max_abs_diff(state.matrix(), ideal_state.matrix()) < 1e-12);
        auto est = pec_exhaustive(exp, PauliString::from_string("IX"));
        CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(est.gamma == doctest::Approx(std::pow(exp.inverse.gamma, 4)));
    }

    TEST_CASE("sampled PEC converges to the exhaustive value") {
        auto graph = ConnectivityGraph::line(2);
        auto model = random_model(graph, 6, 0.0, 0.05);
        Channel noise = noise_channel(model);
        std::vector<PauliRates> rates = model.rates();
        PecExperiment exp{parse_product_state("0+"), 2, noise, {}, pec_inverse(rates)};
        auto obs = PauliString::from_string("ZX");
        auto exact = pec_exhaustive(exp, obs);
        CHECK(exact.value == doctest::Approx(1.0).epsilon(1e-12));
        auto est = pec_estimate(exp, obs, 2000, 0, 17);
        CHECK(est.ensemble == 2000);
        CHECK(est.standard_error > 0.0);
        CHECK(std::abs(est.value - exact.value) < 4.0 * est.standard_error);
        auto sampled = pec_estimate(exp, obs, 500, 200, 18);
        CHECK(std::abs(sampled.value - exact.value) < 4.0 * sampled.standard_error);
        // determinism, independent of thread count
        auto a = pec_estimate(exp, obs, 300, 100, 4, 1);
        auto b = pec_estimate(exp, obs, 300, 100, 4, 3);
        CHECK(a.value == b.value);
        CHECK(a.standard_error == b.standard_error);
    }

    TEST_CASE("parity from histograms and probabilities") {
        auto rho = prepare_product_state("01");
        auto basis = parse_basis("ZZ");
        auto probs = basis_probabilities(rho, basis);
        CHECK(parity_expectation(probs, PauliString::from_string("ZI")) == doctest::Approx(1.0));
        CHECK(parity_expectation(probs, PauliString::from_string("IZ")) == doctest::Approx(-1.0));
        CHECK(parity_expectation(probs, PauliString::from_string("ZZ")) == doctest::Approx(-1.0));
        Histogram h{{"00", 30}, {"11", 10}, {"01", 60}};
        CHECK(parity_expectation(h, PauliString::from_string("ZZ")) == doctest::Approx(-0.2));
        CHECK(parity_expectation(h, PauliString::from_string("IZ")) == doctest::Approx(-0.4));
    }

    TEST_CASE("fidelity closed forms") {
        auto a = prepare_product_state("0");
        auto b = prepare_product_state("+");
        CHECK(state_fidelity(a, b) == doctest::Approx(0.5));
        CHECK(state_fidelity(a, a) == doctest::Approx(1.0));
        CHECK(state_fidelity(a, prepare_product_state("1")) == doctest::Approx(0.0).epsilon(1e-12));
        auto mixed = DensityMatrix::maximally_mixed(2);
        CHECK(state_fidelity(mixed, prepare_product_state("r-")) == doctest::Approx(0.25));
        auto psi = testing::random_pure_state(2, 3);
        auto phi = testing::random_pure_state(2, 4);
        double overlap = (psi.matrix() * phi.matrix()).trace().real();
        CHECK(state_fidelity(psi, phi) == doctest::Approx(overlap).epsilon(1e-10));
        auto r1 = testing::random_mixed_state(2, 5);
        auto r2 = testing::random_mixed_state(2, 6);
        CHECK(state_fidelity(r1, r2) == doctest::Approx(state_fidelity(r2, r1)).epsilon(1e-10));
    }

    TEST_CASE("state reconstruction") {
        auto rho = testing::random_mixed_state(2, 8);
        auto rec = reconstruct_state(vectorize(rho));
        CHECK(rec.projection_distance < 1e-12);
        CHECK(max_abs_diff(rec.state.matrix(), rho.matrix()) < 1e-12);
        // an overshooting vector is projected back to a state
        auto v = vectorize(prepare_product_state("00"));
        Eigen::VectorXd c = v.components();
        c[1] = 0.1;
        c[4] = 0.1;
        auto clipped = reconstruct_state(PauliVector(2, c));
        CHECK(clipped.projection_distance > 0.0);
        CHECK(clipped.state.trace() == doctest::Approx(1.0));
        CHECK(clipped.state.min_eigenvalue() > -1e-12);
    }
}
