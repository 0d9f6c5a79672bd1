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

// rotpauli command line: run experiments from a config, diff models,
// re-derive stored runs.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rotpauli/errors.hpp"
#include "rotpauli/runner.hpp"
#include "rotpauli/serialization.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kNumericalFailure = 2;

struct RunFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::optional<std::size_t> threads;
    std::string format = "csv";
};

rotpauli::PlotFormat plot_format(const std::string& s) {
    return s == "json" ? rotpauli::PlotFormat::kJson : rotpauli::PlotFormat::kCsv;
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("-c,--config", flags.config, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", flags.out, "output directory (overrides output_dir)");
    cmd->add_option("-s,--seed", flags.seed, "seed override");
    cmd->add_option("-m,--mode", flags.mode, "execution mode")->check(CLI::IsMember({"exact", "sampled"}));
    cmd->add_option("-j,--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("-f,--format", flags.format, "plot data format")->check(CLI::IsMember({"csv", "json"}));
}

rotpauli::ExperimentConfig resolve(const RunFlags& flags) {
    auto config = rotpauli::load_config(flags.config);
    if (flags.seed) {
        config.seed = *flags.seed;
        config.characterization.plan.seed = *flags.seed;
    }
    if (!flags.mode.empty()) {
        config.mode = rotpauli::parse_execution_mode(flags.mode);
    }
    if (flags.threads) {
        config.threads = *flags.threads;
    }
    if (!flags.out.empty()) {
        config.output_dir = flags.out;
    } else {
        std::filesystem::path dir = config.output_dir;
        if (dir.is_relative()) {
            config.output_dir = std::filesystem::path(flags.config).parent_path() / dir;
        }
    }
    return config;
}

void summarize(const rotpauli::RunArtifact& a, const std::filesystem::path& dir) {
    std::cout << a.kind << ": wrote " << dir.string() << "\n";
    const auto& d = a.derived;
    if (a.kind == "characterize") {
        const auto& diag = d["diagnostics"];
        std::cout << "  circuits " << diag["circuits"] << ", max |error| vs injected "
                  << rotpauli::format_double(diag["max_abs_error"].get<double>()) << ", dominant two-qubit "
                  << d["dominant_two_qubit"] << "\n";
    } else if (a.kind == "mitigate") {
        const auto& s = d["summary"];
        for (const char* p : {"a", "b", "c"}) {
            std::cout << "  panel " << p << ": max |<P>| ideally zero "
                      << rotpauli::format_double(s[p]["max_abs_ideally_zero"].get<double>())
                      << ", mean infidelity "
                      << rotpauli::format_double(s[p]["mean_infidelity"].get<double>()) << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent and Pauli noise characterization and mitigation"};
    app.require_subcommand(1);

    RunFlags echo_flags, char_flags, mit_flags;
    add_run_flags(app.add_subcommand("echo", "two-qubit echo experiment"), echo_flags);
    add_run_flags(app.add_subcommand("characterize", "coherent characterization of a gate layer"),
                  char_flags);
    add_run_flags(app.add_subcommand("mitigate", "coherent correction plus PEC on one edge"), mit_flags);

    std::string diff_a, diff_b, diff_out;
    auto* diff = app.add_subcommand("diff", "difference of two noise models (b - a)");
    diff->add_option("a", diff_a, "first model JSON")->required()->check(CLI::ExistingFile);
    diff->add_option("b", diff_b, "second model JSON")->required()->check(CLI::ExistingFile);
    diff->add_option("-o,--out", diff_out, "output directory (default: print JSON)");

    std::string export_dir, export_out, export_format = "csv";
    auto* exp = app.add_subcommand("export", "re-derive a stored run from its raw data and emit plot data");
    exp->add_option("run", export_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("-o,--out", export_out, "output directory (default: the run directory)");
    exp->add_option("-f,--format", export_format, "plot data format")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigFailure;
    }

    try {
        auto run = [](const RunFlags& flags, auto&& body) {
            auto config = resolve(flags);
            auto artifact = body(config);
            rotpauli::write_artifact(artifact, config.output_dir, plot_format(flags.format));
            summarize(artifact, config.output_dir);
        };
        if (app.got_subcommand("echo")) {
            run(echo_flags, rotpauli::run_echo);
        } else if (app.got_subcommand("characterize")) {
            run(char_flags, rotpauli::run_characterization);
        } else if (app.got_subcommand("mitigate")) {
            run(mit_flags, rotpauli::run_mitigation_pipeline);
        } else if (app.got_subcommand("diff")) {
            auto load = [](const std::string& path) {
                try {
                    return rotpauli::model_from_json(rotpauli::Json::parse(rotpauli::read_text_file(path)));
                } catch (const nlohmann::json::parse_error&) {
                    throw rotpauli::ConfigError(path + " is not valid JSON");
                }
            };
            auto a = load(diff_a);
            auto b = load(diff_b);
            if (!(a.graph() == b.graph())) {
                throw rotpauli::ConfigError("the two models describe different devices");
            }
            auto d = rotpauli::model_diff(a, b);
            auto json = rotpauli::diff_to_json(d);
            if (diff_out.empty()) {
                std::cout << rotpauli::dump_json(json);
            } else {
                std::filesystem::path dir = diff_out;
                rotpauli::write_text_file(dir / "diff.json", rotpauli::dump_json(json));
                rotpauli::CsvTable theta({"generator", "theta_delta"});
                for (std::size_t k = 0; k < d.generators.size(); ++k) {
                    theta.row().add(d.generators[k].str()).add(d.theta_delta[k]);
                }
                rotpauli::write_text_file(dir / "diff_theta.csv", theta.str());
                rotpauli::CsvTable rates({"support", "pauli", "rate_delta"});
                for (std::size_t s = 0; s < d.supports.size(); ++s) {
                    std::string support;
                    for (auto q : d.supports[s].qubits) {
                        support += (support.empty() ? "" : " ") + std::to_string(q);
                    }
                    for (std::size_t a = 0; a < d.rate_delta[s].size(); ++a) {
                        auto label = rotpauli::PauliString::from_lex_index(d.supports[s].size(), a + 1).str();
                        rates.row().add(support).add(label).add(d.rate_delta[s][a]);
                    }
                }
                rotpauli::write_text_file(dir / "diff_rates.csv", rates.str());
                std::cout << "diff: wrote " << dir.string() << "\n";
            }
        } else if (app.got_subcommand("export")) {
            std::filesystem::path dir = export_dir;
            auto artifact = rotpauli::read_artifact(dir);
            auto fresh = rotpauli::rederive(artifact, dir);
            std::filesystem::path out = export_out.empty() ? dir : std::filesystem::path(export_out);
            rotpauli::write_artifact(fresh, out, plot_format(export_format));
            std::cout << "export: wrote " << out.string() << "\n";
        }
    } catch (const rotpauli::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const rotpauli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigFailure;
    }
    return kOk;
}
