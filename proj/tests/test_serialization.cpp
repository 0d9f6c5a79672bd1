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
#include <limits>

#include "doctest.h"
#include "rotpauli/errors.hpp"
#include "rotpauli/serialization.hpp"

using namespace rotpauli;

TEST_SUITE("serialization") {
    TEST_CASE("graph round trip") {
        auto g = ConnectivityGraph::seven_qubit_tree();
        CHECK(graph_from_json(graph_to_json(g)) == g);
        CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"num_qubits": 2, "edges": [[0, 2]]})")), ConfigError);
    }

    TEST_CASE("gates and layers round trip") {
        GateLayer layer{{Gate::cx(2, 0), Gate::rz(1, 0.25),
                         Gate::rp(PauliString::from_string("YZ"), {3, 4}, -0.01), Gate::sx(5)}};
        auto back = layer_from_json(layer_to_json(layer));
        REQUIRE(back.gates.size() == layer.gates.size());
        for (std::size_t i = 0; i < layer.gates.size(); ++i) {
            CHECK(back.gates[i].kind == layer.gates[i].kind);
            CHECK(back.gates[i].qubits == layer.gates[i].qubits);
            CHECK(back.gates[i].angle == layer.gates[i].angle);
            CHECK(back.gates[i].generator == layer.gates[i].generator);
        }
        CHECK_THROWS_AS(gate_from_json(Json::parse(R"({"gate": "toffoli", "qubits": [0, 1, 2]})")),
                        ConfigError);
        CHECK_THROWS_AS(gate_from_json(Json::parse(R"({"gate": "rz", "qubits": [0]})")), ConfigError);
    }

    TEST_CASE("model round trip is exact") {
        auto model = random_model(ConnectivityGraph::seven_qubit_tree(), 4, 0.02, 0.005);
        auto text = dump_json(model_to_json(model));
        auto back = model_from_json(Json::parse(text));
        CHECK(back.theta() == model.theta());
        REQUIRE(back.rates().size() == model.rates().size());
        for (std::size_t s = 0; s < model.rates().size(); ++s) {
            CHECK(back.rates()[s].rates() == model.rates()[s].rates());
        }
        CHECK(dump_json(model_to_json(back)) == text);
    }

    TEST_CASE("schemas are checked") {
        auto j = model_to_json(LayerNoiseModel(ConnectivityGraph::line(2)));
        j["schema"] = "rotpauli.model/99";
        CHECK_THROWS_AS(model_from_json(j), ConfigError);
        CHECK_THROWS_AS(require_schema(Json::object(), kModelSchema), ConfigError);
    }

    TEST_CASE("schedule and results round trip") {
        auto graph = ConnectivityGraph::line(2);
        auto plan = build_preparation_plan(graph, GateLayer{});
        auto bases = build_measurement_bases(graph, plan.subsystems);
        auto schedule = generate_schedule(plan, 3, bases, 32, 5);
        auto back = schedule_from_json(schedule_to_json(schedule));
        CHECK(back.preparations == schedule.preparations);
        CHECK(back.bases == schedule.bases);
        CHECK(back.circuits.size() == schedule.circuits.size());
        CHECK(back.circuit_seed(7) == schedule.circuit_seed(7));

        ExecutionOptions exec;
        exec.mode = ExecutionMode::kSampled;
        exec.readout = ReadoutConfusion::identity(2);
        auto model = random_model(graph, 1, 0.02, 0.01);
        auto results = run_schedule(schedule, noise_channel(model), exec);
        auto results_back = results_from_json(results_to_json(results));
        CHECK(results_back.mode == ExecutionMode::kSampled);
        CHECK(results_back.histograms == results.histograms);

        exec.mode = ExecutionMode::kExact;
        auto exact = run_schedule(schedule, noise_channel(model), exec);
        auto exact_back = results_from_json(Json::parse(dump_json(results_to_json(exact))));
        CHECK(exact_back.probabilities == exact.probabilities);
    }

    TEST_CASE("estimates keep unestimated entries as null") {
        ThetaEstimate est;
        est.generators = {PauliString::from_string("XI"), PauliString::from_string("YI")};
        est.theta = {0.01, std::numeric_limits<double>::quiet_NaN()};
        est.standard_error = {1e-4, std::numeric_limits<double>::quiet_NaN()};
        auto j = estimate_to_json(est);
        CHECK(j["theta"][1]["theta"].is_null());
        auto back = estimate_from_json(j);
        CHECK(back.theta[0] == 0.01);
        CHECK(std::isnan(back.theta[1]));
    }

    TEST_CASE("diff document") {
        auto graph = ConnectivityGraph::line(2);
        auto a = random_model(graph, 1, 0.02, 0.01);
        auto b = random_model(graph, 2, 0.02, 0.01);
        auto j = diff_to_json(model_diff(a, b));
        CHECK(j["schema"] == std::string(kDiffSchema));
        CHECK(j["summary"].contains("max_abs_two_qubit_theta"));
        CHECK(j["theta"].size() == 15);
    }

    TEST_CASE("numbers print in shortest round-trip form") {
        for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e7, 0.0}) {
            CHECK(std::stod(format_double(x)) == x);
        }
        CHECK(format_double(0.5) == "0.5");
    }

    TEST_CASE("csv tables") {
        CsvTable t({"a", "b"});
        t.row().add("x").add(0.25);
        t.row().add(std::size_t{3}).add("y,z");
        CHECK(t.str() == "a,b\nx,0.25\n3,\"y,z\"\n");
        CsvTable short_row({"a", "b"});
        short_row.row().add("only");
        CHECK_THROWS(short_row.str());
    }
}
