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
#include <filesystem>
#include <string>

#include "doctest.h"
#include "rotpauli/errors.hpp"
#include "rotpauli/runner.hpp"

using namespace rotpauli;

namespace {

Json base_config() {
    return Json::parse(R"({
    "schema": "rotpauli.config/1",
    "device": {"preset": "line", "num_qubits": 2},
    "seed": 3,
    "mode": "exact"
  })");
}

ExperimentConfig parse(const Json& j) {
    return parse_config(j.dump(2));
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const Json& series_of(const Json& derived, const std::string& variant, const std::string& op) {
    for (const auto& entry : derived["variants"][variant]) {
        if (entry["operator"] == op) {
            return entry;
        }
    }
    throw std::runtime_error("no series " + op);
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rotpauli_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    return read_text_file(p);
}

void check_same_files(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        auto name = entry.path().filename();
        CAPTURE(name.string());
        REQUIRE(std::filesystem::exists(b / name));
        CHECK(slurp(entry.path()) == slurp(b / name));
        ++count;
    }
    CHECK(count > 3);
}

}  // namespace

TEST_SUITE("runner_cli") {
    TEST_CASE("config errors name the entry and its line") {
        std::string text =
            "{\n"
            "  \"schema\": \"rotpauli.config/1\",\n"
            "  \"device\": {\"preset\": \"line\", \"num_qubits\": 2},\n"
            "  \"echo\": {\n"
            "    \"max_repetitions\": 0\n"
            "  }\n"
            "}\n";
        auto msg = config_error(text);
        CHECK(msg.find("/echo/max_repetitions") != std::string::npos);
        CHECK(msg.find("line 5") != std::string::npos);

        CHECK(config_error("{\n\"schema\": \"rotpauli.config/1\",\n\"device\": {,}\n}").find("line 3") !=
              std::string::npos);
        CHECK(config_error(R"({"schema": "rotpauli.config/1", "device": {"preset": "line", "num_qubits": 2},
                          "shotz": 5})")
                  .find("unknown key") != std::string::npos);
        CHECK(
            config_error(R"({"schema": "rotpauli.config/2", "device": {"preset": "line", "num_qubits": 2}})")
                .find("/schema") != std::string::npos);
        CHECK(config_error(R"({"schema": "rotpauli.config/1", "device": {"preset": "line", "num_qubits": 3},
                          "layer": [{"gate": "cx", "qubits": [0, 2]}]})")
                  .find("/layer") != std::string::npos);
        CHECK(config_error(R"({"schema": "rotpauli.config/1", "device": {"preset": "line", "num_qubits": 2},
                          "noise": {"rates": [{"support": [0], "rates": {"XX": 0.1}}]}})")
                  .find("/noise/rates/0/rates/XX") != std::string::npos);
        CHECK(config_error(R"({"schema": "rotpauli.config/1", "device": {"preset": "line", "num_qubits": 2},
                          "mitigation": {"preparations": ["0+"]}})")
                  .find("missing IY") != std::string::npos);
        CHECK_FALSE(config_error(R"({"schema": "rotpauli.config/1", "device": {"preset": "seven_qubit_tree"},
                                 "noise": {"source": "random", "seed": 1, "theta_max": 0.02}})")
                        .empty());
    }

    TEST_CASE("config snapshot parses back to the same run") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"source": "random", "seed": 2, "theta_max": 0.01, "p_max": 0.002,
                                 "theta": [{"generator": "YZ", "theta": 0.02}]})");
        j["mitigation"] = Json::parse(
            R"({"preparations": ["00", "++", "rr", "0+", "0r", "+0", "+r", "r0", "r+"], "pec": {"method": "sampled"}})");
        auto config = parse(j);
        auto snapshot = config_to_json(config);
        auto again = parse_config(snapshot.dump());
        CHECK(config_to_json(again) == snapshot);
        CHECK(again.mitigation.preparations.size() == 9);
        CHECK(again.mitigation.preparations[3] == "0+");
        CHECK(build_noise_model(again).theta_of(PauliString::from_string("YZ")) == 0.02);
    }

    TEST_CASE("restricting a model to an edge") {
        auto graph = ConnectivityGraph::line(3);
        auto model = random_model(graph, 5, 0.02, 0.01);
        auto fwd = restrict_model(model, {1, 2});
        CHECK(fwd.theta_of(PauliString::from_string("YZ")) ==
              model.theta_of(PauliString::from_string("IYZ")));
        CHECK(fwd.theta_of(PauliString::from_string("XI")) ==
              model.theta_of(PauliString::from_string("IXI")));
        auto rev = restrict_model(model, {2, 1});
        CHECK(rev.theta_of(PauliString::from_string("ZY")) ==
              model.theta_of(PauliString::from_string("IYZ")));
        CHECK(rev.rates()[0].rates() == model.rates()[2].rates());
        // edge rates follow the qubit order
        auto xy = PauliString::from_string("XY").lex_index();
        auto yx = PauliString::from_string("YX").lex_index();
        CHECK(rev.rates()[2].rates()[yx] == model.rates()[4].rates()[xy]);
        CHECK_THROWS_AS(restrict_model(model, {0, 2}), ConfigError);
    }

    TEST_CASE("echo without noise stays at one") {
        auto j = base_config();
        j["echo"] = Json::parse(R"({"max_repetitions": 6, "layer": "cx_pair"})");
        auto a = run_echo(parse(j));
        for (const auto& variant : {"bare", "twirled"}) {
            for (const auto& entry : a.derived["variants"][variant]) {
                for (const auto& v : entry["values"]) {
                    CHECK(v.get<double>() == doctest::Approx(1.0).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("echo with Pauli noise only decays exponentially") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"source": "random", "seed": 4, "theta_max": 0.0, "p_max": 0.02})");
        j["echo"] = Json::parse(R"({"max_repetitions": 12, "layer": "cx_pair"})");
        auto a = run_echo(parse(j));
        for (const auto& op : {"IX", "ZI", "ZX"}) {
            const auto& s = series_of(a.derived, "bare", op);
            REQUIRE(!s["fit"].is_null());
            CHECK(s["fit"]["r_squared"].get<double>() >= 0.999);
        }
    }

    TEST_CASE("echo with coherent noise oscillates until twirled") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"theta": [{"generator": "YZ", "theta": 0.08}]})");
        j["echo"] = Json::parse(R"({"max_repetitions": 40})");
        auto a = run_echo(parse(j));
        CHECK_FALSE(series_of(a.derived, "bare", "IX")["monotone"].get<bool>());
        CHECK(series_of(a.derived, "twirled", "IX")["monotone"].get<bool>());
        CHECK(series_of(a.derived, "twirled", "IX")["fit"]["r_squared"].get<double>() >= 0.999);
    }

    TEST_CASE("echo with calibration adds a mitigated series") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"theta": [{"generator": "YZ", "theta": 0.03}]})");
        j["echo"] = Json::parse(R"({"max_repetitions": 20, "mitigate": true, "rounds": 2})");
        auto a = run_echo(parse(j));
        const auto& bare = series_of(a.derived, "bare", "IX")["values"];
        const auto& fixed = series_of(a.derived, "mitigated", "IX")["values"];
        CHECK(std::abs(1.0 - fixed.back().get<double>()) < 0.01 * std::abs(1.0 - bare.back().get<double>()));
        CHECK(a.derived["calibration"]["rounds"].size() == 2);
    }

    TEST_CASE("characterization without noise stays within three standard errors") {
        auto j = base_config();
        j["mode"] = "sampled";
        j["shots"] = 256;
        j["layer"] = Json::parse(R"([{"gate": "cx", "qubits": [0, 1]}])");
        auto a = run_characterization(parse(j));
        for (const auto& row : a.derived["generators"]) {
            CAPTURE(row["generator"].get<std::string>());
            CHECK(std::abs(row["theta"].get<double>()) <= 3.0 * row["standard_error"].get<double>());
        }
    }

    TEST_CASE("the dominant injected edge angle is ranked first") {
        auto j = base_config();
        j["device"] = Json::parse(R"({"preset": "line", "num_qubits": 3})");
        j["layer"] = Json::parse(R"([{"gate": "cx", "qubits": [0, 1]}, {"gate": "h", "qubits": [2]}])");
        j["noise"] = Json::parse(R"({"source": "random", "seed": 9, "theta_max": 0.01, "p_max": 0.003,
                                 "theta": [{"generator": "YZ", "qubits": [0, 1], "theta": 0.03}]})");
        auto a = run_characterization(parse(j));
        CHECK(a.derived["dominant_two_qubit"] == "YZI");
        CHECK(a.derived["per_edge"][0]["YZ"].get<double>() == doctest::Approx(0.03).epsilon(0.05));
        CHECK(a.derived["diagnostics"]["preparations"] == 216);
        CHECK(a.derived["diagnostics"]["max_abs_error"].get<double>() < 5e-4);
    }

    TEST_CASE("mitigation without noise leaves all panels ideal") {
        auto j = base_config();
        j["mitigation"] = Json::parse(R"({"max_repetitions": 3, "rounds": 1})");
        auto a = run_mitigation_pipeline(parse(j));
        for (const auto& panel : {"a", "b", "c"}) {
            CHECK(a.derived["summary"][panel]["max_abs_ideally_zero"].get<double>() < 1e-10);
            CHECK(a.derived["summary"][panel]["max_eigenoperator_deviation"].get<double>() < 1e-10);
        }
        CHECK(a.derived["panels"]["a"] == a.derived["panels"]["b"]);
        CHECK(a.derived["panels"]["a"].size() == 9);
    }

    TEST_CASE("mitigation with coherent noise suppresses the spread") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"source": "random", "seed": 2, "theta_max": 0.01, "p_max": 0.003,
                                 "theta": [{"generator": "YZ", "theta": 0.03}]})");
        j["mitigation"] = Json::parse(R"({"max_repetitions": 6, "rounds": 2})");
        auto a = run_mitigation_pipeline(parse(j));
        const auto& s = a.derived["summary"];
        CHECK(s["spread_reduction_ab"].get<double>() >= 3.0);
        CHECK(s["c"]["max_eigenoperator_deviation"].get<double>() < 1e-6);
    }

    TEST_CASE("sampled PEC reports standard errors") {
        auto j = base_config();
        j["mode"] = "sampled";
        j["shots"] = 256;
        j["noise"] = Json::parse(R"({"source": "random", "seed": 2, "theta_max": 0.0, "p_max": 0.01})");
        j["mitigation"] = Json::parse(R"({"max_repetitions": 3, "rounds": 1,
                                      "twirl_samples": 4, "pec": {"method": "sampled", "ensemble": 20,
                                      "shots": 64}})");
        auto a = run_mitigation_pipeline(parse(j));
        const auto& entry = a.derived["panels"]["c"][0];
        REQUIRE(entry.contains("standard_errors"));
        CHECK(entry["standard_errors"][0]["IX"].get<double>() > 0.0);
        auto files = emit_plot_data(a, PlotFormat::kCsv);
        CHECK(files.at("panel_c.csv").find("0+,1,IX,") != std::string::npos);
    }

    TEST_CASE("runs are byte-identical across repeats and thread counts") {
        auto j = base_config();
        j["mode"] = "sampled";
        j["shots"] = 64;
        j["noise"] = Json::parse(R"({"source": "random", "seed": 2, "theta_max": 0.02, "p_max": 0.01})");
        j["layer"] = Json::parse(R"([{"gate": "cx", "qubits": [0, 1]}])");
        j["mitigation"] = Json::parse(R"({"max_repetitions": 3, "rounds": 1, "twirl_samples": 3})");
        j["echo"] = Json::parse(R"({"max_repetitions": 4, "twirl_samples": 3})");
        for (const auto& kind : {"echo", "characterize", "mitigate"}) {
            CAPTURE(kind);
            auto one = parse(j);
            auto four = parse(j);
            four.threads = 4;
            auto run = [&](const ExperimentConfig& c) {
                if (std::string(kind) == "echo") return run_echo(c);
                if (std::string(kind) == "characterize") return run_characterization(c);
                return run_mitigation_pipeline(c);
            };
            auto d1 = scratch_dir(std::string(kind) + "_1");
            auto d2 = scratch_dir(std::string(kind) + "_2");
            auto d4 = scratch_dir(std::string(kind) + "_4");
            write_artifact(run(one), d1);
            write_artifact(run(one), d2);
            write_artifact(run(four), d4);
            check_same_files(d1, d2);
            check_same_files(d1, d4);
        }
    }

    TEST_CASE("derived tables are recomputed exactly from raw data") {
        auto j = base_config();
        j["mode"] = "sampled";
        j["shots"] = 64;
        j["noise"] = Json::parse(R"({"source": "random", "seed": 6, "theta_max": 0.02, "p_max": 0.01})");
        j["layer"] = Json::parse(R"([{"gate": "cx", "qubits": [1, 0]}])");
        j["readout"] = Json::parse(R"({"p01": 0.01, "p10": 0.02})");
        j["mitigation"] = Json::parse(R"({"max_repetitions": 3, "rounds": 1, "twirl_samples": 2})");
        auto config = parse(j);
        for (const auto& artifact :
             {run_echo(config), run_characterization(config), run_mitigation_pipeline(config)}) {
            CAPTURE(artifact.kind);
            auto dir = scratch_dir("rederive_" + artifact.kind);
            write_artifact(artifact, dir);
            auto before = slurp(dir / "derived.json");
            CHECK(before.find("\"schema\": \"rotpauli.derived/1\"") != std::string::npos);
            std::filesystem::remove(dir / "derived.json");
            auto loaded = read_artifact(dir);
            CHECK(loaded.derived.is_null());
            auto fresh = rederive(loaded, dir);
            auto out = scratch_dir("rederive_out_" + artifact.kind);
            write_artifact(fresh, out);
            CHECK(slurp(out / "derived.json") == before);
            check_same_files(dir, out);
        }
    }

    TEST_CASE("runs saved without raw data cannot be re-derived") {
        auto j = base_config();
        j["characterization"] = Json::parse(R"({"save_raw": false})");
        auto a = run_characterization(parse(j));
        CHECK(a.raw.is_null());
        CHECK_THROWS_AS(rederive(a, {}), ConfigError);
    }

    TEST_CASE("plot data") {
        auto j = base_config();
        j["noise"] = Json::parse(R"({"theta": [{"generator": "XY", "theta": 0.01}]})");
        j["echo"] = Json::parse(R"({"max_repetitions": 3})");
        auto a = run_echo(parse(j));
        auto csv = emit_plot_data(a, PlotFormat::kCsv);
        CHECK(csv.count("echo_bare.csv") == 1);
        CHECK(csv.count("echo_twirled.csv") == 1);
        CHECK(csv.at("echo_series.csv").rfind("variant,operator,m,value\n", 0) == 0);
        // three operators x four repetition counts x two variants
        auto rows = std::count(csv.at("echo_series.csv").begin(), csv.at("echo_series.csv").end(), '\n');
        CHECK(rows == 1 + 3 * 4 * 2);
        CHECK(emit_plot_data(a, PlotFormat::kCsv) == csv);
        auto json = emit_plot_data(a, PlotFormat::kJson);
        CHECK(Json::parse(json.at("plot_data.json"))["kind"] == "echo");

        auto c = base_config();
        c["layer"] = Json::parse(R"([{"gate": "cx", "qubits": [0, 1]}])");
        auto ch = run_characterization(parse(c));
        auto files = emit_plot_data(ch, PlotFormat::kCsv);
        CHECK(files.at("theta.csv")
                  .rfind("generator,qubits,theta,abs_theta,standard_error,injected,error\n", 0) == 0);
        CHECK(files.count("theta_per_qubit.csv") == 1);
        CHECK(files.count("theta_per_edge.csv") == 1);
    }
}
