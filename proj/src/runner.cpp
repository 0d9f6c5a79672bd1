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

#include "rotpauli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "rotpauli/errors.hpp"
#include "rotpauli/parallel.hpp"
#include "rotpauli/ptm.hpp"
#include "rotpauli/random.hpp"

namespace rotpauli {

namespace {

// ---------------------------------------------------------------- config

std::size_t line_of(std::string_view text, const std::string& pointer) {
    std::size_t pos = 0;
    bool found_any = false;
    std::size_t start = 1;
    while (start <= pointer.size()) {
        std::size_t end = pointer.find('/', start);
        if (end == std::string::npos) {
            end = pointer.size();
        }
        std::string token = pointer.substr(start, end - start);
        start = end + 1;
        if (token.empty() || std::all_of(token.begin(), token.end(), ::isdigit)) {
            continue;
        }
        std::string quoted = "\"" + token + "\"";
        std::size_t at = text.find(quoted, pos);
        while (at != std::string_view::npos) {
            std::size_t after = at + quoted.size();
            while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) {
                ++after;
            }
            if (after < text.size() && text[after] == ':') {
                break;
            }
            at = text.find(quoted, at + 1);
        }
        if (at == std::string_view::npos) {
            break;
        }
        pos = at;
        found_any = true;
    }
    if (!found_any) {
        return 0;
    }
    return static_cast<std::size_t>(
               std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) +
           1;
}

class ConfigReader {
  public:
    explicit ConfigReader(std::string_view text) : text_(text) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        std::string where = pointer.empty() ? "/" : pointer;
        std::size_t line = line_of(text_, pointer);
        if (line > 0) {
            where += " (line " + std::to_string(line) + ")";
        }
        throw ConfigError("config " + where + ": " + message);
    }

    void only_keys(const Json& j, const std::string& pointer,
                   std::initializer_list<std::string_view> keys) const {
        if (!j.is_object()) {
            fail(pointer, "expected an object");
        }
        for (const auto& [key, value] : j.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                fail(pointer + "/" + key, "unknown key");
            }
        }
    }

    double number(const Json& j, const std::string& pointer, double lo, double hi) const {
        if (!j.is_number()) {
            fail(pointer, "expected a number");
        }
        double v = j.get<double>();
        if (!std::isfinite(v) || v < lo || v > hi) {
            fail(pointer, "value " + format_double(v) + " outside [" + format_double(lo) + ", " +
                              format_double(hi) + "]");
        }
        return v;
    }

    std::uint64_t integer(const Json& j, const std::string& pointer, std::uint64_t lo,
                          std::uint64_t hi) const {
        if (!j.is_number_unsigned()) {
            fail(pointer, "expected a non-negative integer");
        }
        auto v = j.get<std::uint64_t>();
        if (v < lo || v > hi) {
            fail(pointer, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        }
        return v;
    }

    bool boolean(const Json& j, const std::string& pointer) const {
        if (!j.is_boolean()) {
            fail(pointer, "expected true or false");
        }
        return j.get<bool>();
    }

    std::string string(const Json& j, const std::string& pointer) const {
        if (!j.is_string()) {
            fail(pointer, "expected a string");
        }
        return j.get<std::string>();
    }

    Edge edge(const Json& j, const std::string& pointer, const ConnectivityGraph& graph) const {
        if (!j.is_array() || j.size() != 2) {
            fail(pointer, "expected [control, target]");
        }
        auto a = integer(j[0], pointer + "/0", 0, graph.num_qubits() - 1);
        auto b = integer(j[1], pointer + "/1", 0, graph.num_qubits() - 1);
        if (!graph.has_edge(a, b)) {
            fail(pointer, "qubits " + std::to_string(a) + " and " + std::to_string(b) + " are not connected");
        }
        return {a, b};
    }

    // Runs `body`, rethrowing library validation errors with the pointer.
    template <typename F>
    auto guarded(const std::string& pointer, F&& body) const {
        try {
            return body();
        } catch (const ConfigError& e) {
            fail(pointer, e.what());
        } catch (const std::invalid_argument& e) {
            fail(pointer, e.what());
        }
    }

  private:
    std::string_view text_;
};

EchoLayer parse_echo_layer(const ConfigReader& r, const Json& j, const std::string& pointer) {
    auto s = r.string(j, pointer);
    if (s == "identity") {
        return EchoLayer::kIdentity;
    }
    if (s == "cx_pair") {
        return EchoLayer::kCxPair;
    }
    r.fail(pointer, "expected \"identity\" or \"cx_pair\"");
}

std::string to_string(EchoLayer layer) {
    return layer == EchoLayer::kIdentity ? "identity" : "cx_pair";
}

std::vector<std::string> default_preparations() {
    std::vector<std::string> out;
    for (char a : std::string("0+r")) {
        for (char b : std::string("0+r")) {
            out.push_back(std::string{a, b});
        }
    }
    return out;
}

// ---------------------------------------------------------------- shared helpers

const std::vector<std::vector<Pauli1>>& two_qubit_bases() {
    static const std::vector<std::vector<Pauli1>> bases = [] {
        std::vector<std::vector<Pauli1>> out;
        for (Pauli1 a : {Pauli1::X, Pauli1::Y, Pauli1::Z}) {
            for (Pauli1 b : {Pauli1::X, Pauli1::Y, Pauli1::Z}) {
                out.push_back({a, b});
            }
        }
        return out;
    }();
    return bases;
}

// Measurement basis in which each qubit of `state` is an eigenstate, and the
// eigenvalue signs.
std::vector<Pauli1> eigenbasis(const ProductState& state, std::vector<int>* signs = nullptr) {
    std::vector<Pauli1> basis;
    if (signs) {
        signs->clear();
    }
    for (StateLabel l : state) {
        switch (l) {
            case StateLabel::Zero:
            case StateLabel::One:
                basis.push_back(Pauli1::Z);
                break;
            case StateLabel::Plus:
            case StateLabel::Minus:
                basis.push_back(Pauli1::X);
                break;
            default:
                basis.push_back(Pauli1::Y);
        }
        if (signs) {
            bool negative = l == StateLabel::One || l == StateLabel::Minus || l == StateLabel::MinusI;
            signs->push_back(negative ? -1 : 1);
        }
    }
    return basis;
}

// The non-identity stabilizers of a two-qubit product eigenstate with their
// ideal expectation values.
std::vector<std::pair<PauliString, int>> eigenoperators(const ProductState& state) {
    std::vector<int> signs;
    auto basis = eigenbasis(state, &signs);
    std::vector<std::pair<PauliString, int>> ops;
    for (std::size_t mask = 1; mask < (std::size_t{1} << state.size()); ++mask) {
        PauliString p(state.size());
        int sign = 1;
        for (std::size_t q = 0; q < state.size(); ++q) {
            if (mask & (std::size_t{1} << (state.size() - 1 - q))) {
                p.set(q, basis[q]);
                sign *= signs[q];
            }
        }
        ops.emplace_back(p, sign);
    }
    std::sort(ops.begin(), ops.end(),
              [](const auto& a, const auto& b) { return a.first.lex_index() < b.first.lex_index(); });
    return ops;
}

Json measure(const DensityMatrix& rho, const std::vector<Pauli1>& basis, ExecutionMode mode,
             std::uint64_t shots, std::uint64_t seed) {
    if (mode == ExecutionMode::kExact) {
        return basis_probabilities(rho, basis);
    }
    return histogram_to_json(sample_counts(rho, basis, shots, seed));
}

double record_parity(const Json& record, const PauliString& observable) {
    if (record.is_array()) {
        auto probs = record.get<std::vector<double>>();
        return parity_expectation(probs, observable);
    }
    return parity_expectation(histogram_from_json(record), observable);
}

bool basis_matches(const std::vector<Pauli1>& basis, const PauliString& p) {
    for (std::size_t q = 0; q < basis.size(); ++q) {
        if (p[q] != Pauli1::I && p[q] != basis[q]) {
            return false;
        }
    }
    return true;
}

// Noisy pieces of one repetition on the two-qubit edge model.
struct EdgeExperiment {
    LayerNoiseModel model;
    EchoLayer kind = EchoLayer::kIdentity;

    std::vector<NoisyLayer> parts() const {
        if (kind == EchoLayer::kIdentity) {
            return {NoisyLayer{GateLayer{}, model}};
        }
        NoisyLayer cx{GateLayer{{Gate::cx(0, 1)}}, model};
        return {cx, cx};
    }

    Channel bare() const {
        std::vector<Channel> channels;
        for (const auto& p : parts()) {
            channels.push_back(instantiate(p));
        }
        return [channels](DensityMatrix& rho) {
            for (const auto& c : channels) {
                c(rho);
            }
        };
    }

    Channel twirled() const {
        std::vector<Channel> channels;
        const std::vector<std::size_t> both{0, 1};
        for (const auto& p : parts()) {
            channels.push_back(twirl_average(instantiate(p), build_twirl_set(p.ideal, 2, both)));
        }
        return [channels](DensityMatrix& rho) {
            for (const auto& c : channels) {
                c(rho);
            }
        };
    }

    // One random twirl of every part, drawn from `rng`.
    void apply_random_twirl(DensityMatrix& rho, std::mt19937_64& rng) const {
        const std::vector<std::size_t> both{0, 1};
        for (const auto& p : parts()) {
            auto set = build_twirl_set(p.ideal, 2, both);
            std::uniform_int_distribution<std::size_t> pick(0, set.pairs.size() - 1);
            const auto& pair = set.pairs[pick(rng)];
            apply_pauli(rho, pair.before);
            instantiate(p)(rho);
            apply_pauli(rho, pair.after);
        }
    }

    Channel corrected(std::span<const double> accumulated) const {
        Channel noisy = bare();
        auto gens = CorrectionElement::local_generators();
        auto element = CorrectionElement::from_estimate(0, 1, gens, accumulated);
        Channel fix = fragment_channel(build_correction_element(element));
        return [noisy, fix](DensityMatrix& rho) {
            noisy(rho);
            fix(rho);
        };
    }
};

EdgeExperiment edge_experiment(const LayerNoiseModel& model, Edge edge, EchoLayer kind) {
    return {restrict_model(model, edge), kind};
}

CharacterizationOptions edge_characterization_options(const ExperimentConfig& config, std::uint64_t seed) {
    CharacterizationOptions o;
    o.max_repetitions = config.characterization.max_repetitions;
    o.shots = config.shots;
    o.seed = seed;
    o.execution.mode = config.mode;
    o.execution.readout = ReadoutConfusion::identity(2);
    o.execution.threads = config.threads;
    o.mitigate_readout = false;
    o.problem = config.characterization.problem;
    return o;
}

// Calibrates the coherent angles of an edge experiment with correction
// elements, keeping every round's raw data.
Json calibrate_edge(const ExperimentConfig& config, const EdgeExperiment& exp, std::size_t rounds,
                    std::uint64_t seed, std::vector<double>* accumulated) {
    auto graph = ConnectivityGraph::line(2);
    accumulated->assign(CorrectionElement::local_generators().size(), 0.0);
    Json raw = Json::array();
    for (std::size_t r = 0; r < rounds; ++r) {
        auto options = edge_characterization_options(config, derive_seed(seed, r));
        auto plan = build_preparation_plan(graph, GateLayer{}, options.plan);
        auto bases = build_measurement_bases(graph, plan.subsystems);
        auto schedule = generate_schedule(plan, options.max_repetitions, bases, options.shots, options.seed);
        auto results = run_schedule(schedule, exp.corrected(*accumulated), options.execution);
        auto estimate = characterize_results(graph, GateLayer{}, plan, schedule, results, options).theta;
        for (std::size_t k = 0; k < accumulated->size(); ++k) {
            accumulated->at(k) += estimate.theta[k];
        }
        raw.push_back({{"schedule", schedule_to_json(schedule)}, {"results", results_to_json(results)}});
    }
    return raw;
}

// Re-derives the calibration estimates from raw rounds.
Json derive_calibration(const ExperimentConfig& config, const Json& rounds,
                        std::vector<double>* accumulated) {
    auto graph = ConnectivityGraph::line(2);
    accumulated->assign(CorrectionElement::local_generators().size(), 0.0);
    Json out = Json::array();
    for (const auto& round : rounds) {
        auto schedule = schedule_from_json(round.at("schedule"));
        auto results = results_from_json(round.at("results"));
        auto options = edge_characterization_options(config, schedule.seed);
        options.max_repetitions = schedule.max_repetitions;
        auto plan = build_preparation_plan(graph, GateLayer{}, options.plan);
        auto estimate = characterize_results(graph, GateLayer{}, plan, schedule, results, options).theta;
        for (std::size_t k = 0; k < accumulated->size(); ++k) {
            accumulated->at(k) += estimate.theta[k];
        }
        out.push_back(estimate_to_json(estimate));
    }
    Json acc = Json::array();
    auto gens = CorrectionElement::local_generators();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        acc.push_back({{"generator", gens[k].str()}, {"theta", accumulated->at(k)}});
    }
    return {{"rounds", out}, {"accumulated", acc}};
}

Json theta_table(const std::vector<PauliString>& gens, std::span<const double> theta) {
    Json out = Json::array();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        out.push_back({{"generator", gens[k].str()}, {"theta", theta[k]}});
    }
    return out;
}

// ---------------------------------------------------------------- echo

constexpr std::uint64_t kCalibrationStage = 1;
constexpr std::uint64_t kBareStage = 2;
constexpr std::uint64_t kTwirlStage = 3;
constexpr std::uint64_t kCorrectedStage = 4;
constexpr std::uint64_t kFitStage = 5;
constexpr std::uint64_t kPecStage = 6;

Json echo_series(const ExperimentConfig& config, const Channel& repetition, std::uint64_t seed) {
    const auto& s = config.echo;
    auto prep = parse_product_state(s.preparation);
    auto basis = eigenbasis(prep);
    DensityMatrix rho = prepare_product_state(prep);
    Json records = Json::array();
    for (std::size_t m = 0; m <= s.max_repetitions; ++m) {
        if (m > 0) {
            repetition(rho);
        }
        records.push_back(
            Json::array({measure(rho, basis, config.mode, config.shots, derive_seed(seed, m))}));
    }
    return records;
}

Json echo_twirled_sampled(const ExperimentConfig& config, const EdgeExperiment& exp, std::uint64_t seed) {
    const auto& s = config.echo;
    auto prep = parse_product_state(s.preparation);
    auto basis = eigenbasis(prep);
    std::vector<Json> records(s.max_repetitions + 1);
    parallel_for(s.max_repetitions + 1, config.threads, [&](std::size_t m) {
        Json list = Json::array();
        for (std::size_t t = 0; t < s.twirl_samples; ++t) {
            std::uint64_t circuit = derive_seed(derive_seed(seed, m), t);
            std::mt19937_64 rng(circuit);
            DensityMatrix rho = prepare_product_state(prep);
            for (std::size_t r = 0; r < m; ++r) {
                exp.apply_random_twirl(rho, rng);
            }
            list.push_back(measure(rho, basis, config.mode, config.shots, derive_seed(circuit, 1)));
        }
        records[m] = std::move(list);
    });
    return records;
}

RunArtifact make_artifact(std::string kind, const ExperimentConfig& config, const LayerNoiseModel& model) {
    RunArtifact a;
    a.kind = std::move(kind);
    a.config = config_to_json(config);
    a.model = model_to_json(model);
    return a;
}

Json derive_echo(const ExperimentConfig& config, const LayerNoiseModel& model, const Json& raw) {
    const auto& s = config.echo;
    auto prep = parse_product_state(s.preparation);
    auto ops = eigenoperators(prep);
    auto exp = edge_experiment(model, s.edge, s.layer);

    // Reference eigenvalues of the twirled repetition.
    auto twirled_ptm = channel_to_ptm(exp.twirled(), 2);
    EdgeExperiment incoherent = exp;
    incoherent.model.set_theta(std::vector<double>(incoherent.model.theta().size(), 0.0));
    auto pauli_only_ptm = channel_to_ptm(incoherent.twirled(), 2);

    Json derived{{"preparation", to_string(prep)}, {"max_repetitions", s.max_repetitions}};
    Json variants = Json::object();
    for (const auto& [name, records] : raw.at("variants").items()) {
        Json series = Json::array();
        for (const auto& [op, sign] : ops) {
            std::vector<double> values;
            for (const auto& per_m : records) {
                double acc = 0.0;
                for (const auto& rec : per_m) {
                    acc += record_parity(rec, op);
                }
                values.push_back(sign * acc / static_cast<double>(per_m.size()));
            }
            bool monotone = true;
            for (std::size_t m = 1; m < values.size(); ++m) {
                if (values[m] > values[m - 1] + 1e-12) {
                    monotone = false;
                }
            }
            Json entry{{"operator", op.str()}, {"ideal", sign}, {"values", values}, {"monotone", monotone}};
            std::vector<double> reps, fit_values;
            bool positive = true;
            for (std::size_t m = 1; m < values.size(); ++m) {
                reps.push_back(static_cast<double>(m));
                fit_values.push_back(values[m]);
                positive = positive && values[m] > 0.0;
            }
            if (positive && reps.size() >= 2) {
                auto fit = fit_exponential(reps, fit_values);
                entry["fit"] = {
                    {"amplitude", fit.amplitude}, {"eigenvalue", fit.rate}, {"r_squared", fit.r_squared}};
            } else {
                entry["fit"] = nullptr;
            }
            if (name == "twirled") {
                std::size_t i = op.lex_index();
                entry["model_eigenvalue"] = twirled_ptm(i, i);
                entry["pauli_only_eigenvalue"] = pauli_only_ptm(i, i);
            }
            series.push_back(entry);
        }
        variants[name] = series;
    }
    derived["variants"] = variants;
    if (raw.contains("calibration")) {
        std::vector<double> acc;
        derived["calibration"] = derive_calibration(config, raw["calibration"], &acc);
    }
    return derived;
}

// ---------------------------------------------------------------- characterization

CharacterizationOptions device_options(const ExperimentConfig& config) {
    CharacterizationOptions o;
    o.max_repetitions = config.characterization.max_repetitions;
    o.shots = config.shots;
    o.seed = config.seed;
    o.execution.mode = config.mode;
    o.execution.readout =
        ReadoutConfusion::uniform(config.graph.num_qubits(), config.readout_p01, config.readout_p10);
    o.execution.threads = config.threads;
    o.mitigate_readout = config.mitigate_readout;
    o.problem = config.characterization.problem;
    o.plan = config.characterization.plan;
    return o;
}

Json derive_characterization(const ExperimentConfig& config, const LayerNoiseModel& model, const Json& raw) {
    auto options = device_options(config);
    auto plan = build_preparation_plan(config.graph, config.layer, options.plan);
    std::vector<double> accumulated(model.generators().size(), 0.0);
    Json rounds = Json::array();
    LayerCharacterization last;
    std::size_t circuits = 0;
    for (const auto& round : raw.at("rounds")) {
        auto schedule = schedule_from_json(round.at("schedule"));
        auto results = results_from_json(round.at("results"));
        if (schedule.preparations != plan.preparations) {
            throw ConfigError("raw schedule does not match the preparation plan of this config");
        }
        options.seed = schedule.seed;
        last = characterize_results(config.graph, config.layer, plan, schedule, results, options);
        circuits += last.circuits;
        for (std::size_t k = 0; k < accumulated.size(); ++k) {
            if (!std::isnan(last.theta.standard_error[k])) {
                accumulated[k] += last.theta.theta[k];
            }
        }
        rounds.push_back(estimate_to_json(last.theta));
    }
    if (rounds.empty()) {
        throw ConfigError("raw data holds no characterization rounds");
    }

    const auto& gens = model.generators();
    Json table = Json::array();
    double worst = 0.0;
    std::size_t dominant = gens.size();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        double est = accumulated[k];
        double err = est - model.theta()[k];
        bool estimated = !std::isnan(last.theta.standard_error[k]);
        if (estimated) {
            worst = std::max(worst, std::abs(err));
        }
        if (gens[k].weight() == 2 && estimated &&
            (dominant == gens.size() || std::abs(est) > std::abs(accumulated[dominant]))) {
            dominant = k;
        }
        Json qubits = gens[k].support();
        table.push_back({{"generator", gens[k].str()},
                         {"qubits", qubits},
                         {"theta", estimated ? Json(est) : Json(nullptr)},
                         {"standard_error", estimated ? Json(last.theta.standard_error[k]) : Json(nullptr)},
                         {"injected", model.theta()[k]},
                         {"error", estimated ? Json(err) : Json(nullptr)}});
    }

    // |theta| per qubit (X, Y, Z) and per edge (XX..ZZ).
    Json per_qubit = Json::array();
    for (std::size_t q = 0; q < config.graph.num_qubits(); ++q) {
        Json row{{"qubit", q}};
        for (Pauli1 p : {Pauli1::X, Pauli1::Y, Pauli1::Z}) {
            std::size_t k = model.generator_index(PauliString::single(config.graph.num_qubits(), q, p));
            row[std::string(1, pauli1_char(p))] = std::abs(accumulated[k]);
        }
        per_qubit.push_back(row);
    }
    Json per_edge = Json::array();
    for (const auto& [a, b] : config.graph.edges()) {
        Json row{{"edge", {a, b}}};
        for (Pauli1 pa : {Pauli1::X, Pauli1::Y, Pauli1::Z}) {
            for (Pauli1 pb : {Pauli1::X, Pauli1::Y, Pauli1::Z}) {
                PauliString g(config.graph.num_qubits());
                g.set(a, pa);
                g.set(b, pb);
                row[std::string{pauli1_char(pa), pauli1_char(pb)}] =
                    std::abs(accumulated[model.generator_index(g)]);
            }
        }
        per_edge.push_back(row);
    }

    Json subsystems = Json::array();
    for (const auto& s : last.subsystems) {
        subsystems.push_back({{"home", s.subsystem.home},
                              {"closure", s.subsystem.closure},
                              {"generators", s.subsystem.generators.size()},
                              {"rank", s.estimate.rank},
                              {"observations", s.estimate.observations},
                              {"residual_norm", s.estimate.residual_norm}});
    }

    Json d;
    d["estimate"] = estimate_to_json(last.theta);
    d["accumulated"] = theta_table(gens, accumulated);
    d["generators"] = table;
    d["per_qubit"] = per_qubit;
    d["per_edge"] = per_edge;
    d["dominant_two_qubit"] = dominant < gens.size() ? Json(gens[dominant].str()) : Json(nullptr);
    d["diagnostics"] = {{"rounds", rounds.size()},
                        {"circuits", circuits},
                        {"preparations", plan.preparations.size()},
                        {"design_dimension", plan.design_dimension},
                        {"environment_balanced", plan.environment_balanced},
                        {"max_abs_error", worst},
                        {"injected_small_noise_regime", model.in_small_noise_regime()},
                        {"commutation_bound", commutation_bound(model)},
                        {"subsystems", subsystems}};
    d["round_estimates"] = rounds;
    return d;
}

// ---------------------------------------------------------------- mitigation

struct PanelData {
    // values[prep][m - 1][pauli lex index]
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<std::vector<double>>> errors;
};

Json measure_all_bases(const DensityMatrix& rho, ExecutionMode mode, std::uint64_t shots,
                       std::uint64_t seed) {
    Json out = Json::array();
    const auto& bases = two_qubit_bases();
    for (std::size_t b = 0; b < bases.size(); ++b) {
        out.push_back(measure(rho, bases[b], mode, shots, derive_seed(seed, b)));
    }
    return out;
}

// raw[prep][m-1][basis] -> expectations of all 16 Paulis.
PanelData panel_from_records(const Json& raw) {
    PanelData d;
    const auto& bases = two_qubit_bases();
    auto paulis = all_paulis(2);
    for (const auto& per_prep : raw) {
        std::vector<std::vector<double>> rows;
        std::vector<std::vector<double>> errs;
        for (const auto& per_m : per_prep) {
            std::vector<double> v(16, 0.0);
            v[0] = 1.0;
            for (std::size_t i = 1; i < 16; ++i) {
                double acc = 0.0;
                std::size_t count = 0;
                for (std::size_t b = 0; b < bases.size(); ++b) {
                    if (basis_matches(bases[b], paulis[i])) {
                        acc += record_parity(per_m.at(b), paulis[i]);
                        ++count;
                    }
                }
                v[i] = acc / static_cast<double>(count);
            }
            rows.push_back(v);
            errs.push_back(std::vector<double>(16, 0.0));
        }
        d.values.push_back(std::move(rows));
        d.errors.push_back(std::move(errs));
    }
    return d;
}

// raw[prep][m-1][basis] = list of {weight, counts|probabilities}.
PanelData panel_from_pec_samples(const Json& raw) {
    PanelData d;
    const auto& bases = two_qubit_bases();
    auto paulis = all_paulis(2);
    for (const auto& per_prep : raw) {
        std::vector<std::vector<double>> rows;
        std::vector<std::vector<double>> errs;
        for (const auto& per_m : per_prep) {
            std::vector<std::vector<PecSample>> samples;
            for (const auto& per_basis : per_m) {
                std::vector<PecSample> list;
                for (const auto& s : per_basis) {
                    PecSample sample;
                    sample.weight = s.at("weight").get<double>();
                    const auto& rec = s.at("outcome");
                    if (rec.is_array()) {
                        sample.probabilities = rec.get<std::vector<double>>();
                    } else {
                        sample.counts = histogram_from_json(rec);
                    }
                    list.push_back(std::move(sample));
                }
                samples.push_back(std::move(list));
            }
            std::vector<double> v(16, 0.0), e(16, 0.0);
            v[0] = 1.0;
            for (std::size_t i = 1; i < 16; ++i) {
                double acc = 0.0, var = 0.0;
                std::size_t count = 0;
                for (std::size_t b = 0; b < bases.size(); ++b) {
                    if (basis_matches(bases[b], paulis[i])) {
                        auto est = pec_combine(samples[b], paulis[i], 1.0);
                        acc += est.value;
                        var += est.standard_error * est.standard_error;
                        ++count;
                    }
                }
                v[i] = acc / static_cast<double>(count);
                e[i] = std::sqrt(var) / static_cast<double>(count);
            }
            rows.push_back(v);
            errs.push_back(e);
        }
        d.values.push_back(std::move(rows));
        d.errors.push_back(std::move(errs));
    }
    return d;
}

std::vector<DecaySeries> decay_series_from_records(const std::vector<std::string>& preps, const Json& raw) {
    std::vector<DecaySeries> out;
    for (std::size_t p = 0; p < preps.size(); ++p) {
        auto state = parse_product_state(preps[p]);
        for (const auto& [op, sign] : eigenoperators(state)) {
            DecaySeries s;
            s.op = op;
            const auto& per_m = raw.at(p);
            for (std::size_t m = 0; m < per_m.size(); ++m) {
                double acc = 0.0;
                for (const auto& rec : per_m[m]) {
                    acc += record_parity(rec, op);
                }
                s.repetitions.push_back(static_cast<double>(m + 1));
                s.values.push_back(sign * acc / static_cast<double>(per_m[m].size()));
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

RateFit fit_corrected_rates(const MitigationSettings& s, const Json& raw) {
    return estimate_pauli_rates(LocalSupport{{0, 1}}, decay_series_from_records(s.preparations, raw));
}

Json panel_to_json(const PanelData& panel, const std::vector<std::string>& preps) {
    auto paulis = all_paulis(2);
    Json out = Json::array();
    for (std::size_t p = 0; p < preps.size(); ++p) {
        Json series = Json::array();
        for (std::size_t m = 0; m < panel.values[p].size(); ++m) {
            Json row = Json::object();
            for (std::size_t i = 0; i < 16; ++i) {
                row[paulis[i].str()] = panel.values[p][m][i];
            }
            series.push_back(row);
        }
        out.push_back({{"preparation", preps[p]}, {"expectations", series}});
    }
    return out;
}

Json derive_mitigation(const ExperimentConfig& config, const LayerNoiseModel& model, const Json& raw) {
    (void)model;
    const auto& s = config.mitigation;
    auto paulis = all_paulis(2);
    std::vector<double> accumulated;
    Json d;
    d["calibration"] = derive_calibration(config, raw.at("calibration"), &accumulated);

    RateFit fit = fit_corrected_rates(s, raw.at("rate_fit"));
    Json fit_json = Json::array();
    for (std::size_t i = 1; i < 16; ++i) {
        fit_json.push_back({{"pauli", paulis[i].str()},
                            {"rate", fit.rates.rates()[i]},
                            {"eigenvalue", fit.eigenvalues[i]},
                            {"amplitude", fit.amplitudes[i]},
                            {"r_squared", fit.r_squared[i]}});
    }
    auto inverse = pec_inverse(std::vector<PauliRates>{fit.rates});
    d["rate_fit"] = {{"paulis", fit_json}, {"clamped", fit.clamped}, {"gamma", inverse.gamma}};

    std::map<std::string, PanelData> panels;
    panels["a"] = panel_from_records(raw.at("panels").at("a"));
    panels["b"] = panel_from_records(raw.at("panels").at("b"));
    const auto& pc = raw.at("panels").at("c");
    panels["c"] = raw.at("pec_method") == "sampled" ? panel_from_pec_samples(pc) : panel_from_records(pc);

    Json panels_json = Json::object();
    Json summary = Json::object();
    Json fidelity = Json::object();
    for (const auto& [name, panel] : panels) {
        double spread = 0.0, eigen_dev = 0.0, infidelity = 0.0, projection = 0.0;
        std::size_t count = 0;
        std::vector<double> per_m(s.max_repetitions, 0.0);
        Json per_prep = Json::array();
        for (std::size_t p = 0; p < s.preparations.size(); ++p) {
            auto state = parse_product_state(s.preparations[p]);
            DensityMatrix ideal = prepare_product_state(state);
            auto ideal_vec = vectorize(ideal);
            Json fids = Json::array();
            for (std::size_t m = 0; m < panel.values[p].size(); ++m) {
                const auto& v = panel.values[p][m];
                for (std::size_t i = 1; i < 16; ++i) {
                    double want = ideal_vec.expectation(i);
                    if (std::abs(want) < 1e-12) {
                        spread = std::max(spread, std::abs(v[i]));
                    } else {
                        eigen_dev = std::max(eigen_dev, std::abs(v[i] / want - 1.0));
                    }
                }
                Eigen::VectorXd comps(16);
                for (std::size_t i = 0; i < 16; ++i) {
                    comps[static_cast<Eigen::Index>(i)] = v[i] / 4.0;
                }
                auto rec = reconstruct_state(PauliVector(2, comps));
                projection = std::max(projection, rec.projection_distance);
                double f = state_fidelity(rec.state, ideal);
                fids.push_back(f);
                infidelity += 1.0 - f;
                per_m[m] += (1.0 - f) / static_cast<double>(s.preparations.size());
                ++count;
            }
            per_prep.push_back({{"preparation", s.preparations[p]}, {"fidelity", fids}});
        }
        Json entry = panel_to_json(panel, s.preparations);
        if (name == "c" && raw.at("pec_method") == "sampled") {
            for (std::size_t p = 0; p < s.preparations.size(); ++p) {
                Json errs = Json::array();
                for (const auto& row : panel.errors[p]) {
                    Json e = Json::object();
                    for (std::size_t i = 0; i < 16; ++i) {
                        e[paulis[i].str()] = row[i];
                    }
                    errs.push_back(e);
                }
                entry[p]["standard_errors"] = errs;
            }
        }
        panels_json[name] = entry;
        fidelity[name] = {{"mean_infidelity_per_m", per_m}, {"per_preparation", per_prep}};
        summary[name] = {{"max_abs_ideally_zero", spread},
                         {"max_eigenoperator_deviation", eigen_dev},
                         {"mean_infidelity", infidelity / static_cast<double>(count)},
                         {"max_projection_distance", projection}};
    }
    auto ratio = [](double a, double b) { return b > 0 ? Json(a / b) : Json(nullptr); };
    summary["spread_reduction_ab"] = ratio(summary["a"]["max_abs_ideally_zero"].get<double>(),
                                           summary["b"]["max_abs_ideally_zero"].get<double>());
    summary["infidelity_reduction_ab"] =
        ratio(summary["a"]["mean_infidelity"].get<double>(), summary["b"]["mean_infidelity"].get<double>());
    d["summary"] = summary;
    d["fidelity"] = fidelity;
    d["panels"] = panels_json;
    d["pec"] = {{"method", raw.at("pec_method")},
                {"gamma_per_repetition", inverse.gamma},
                {"ensemble", s.ensemble},
                {"shots", s.pec_shots}};
    return d;
}

// ---------------------------------------------------------------- plot data

void add_csv(std::map<std::string, std::string>& files, const std::string& name, const CsvTable& table) {
    files[name] = table.str();
}

std::string cell(const Json& j) {
    if (j.is_null()) {
        return "";
    }
    if (j.is_number_float()) {
        return format_double(j.get<double>());
    }
    if (j.is_number()) {
        return j.dump();
    }
    if (j.is_string()) {
        return j.get<std::string>();
    }
    if (j.is_boolean()) {
        return j.get<bool>() ? "true" : "false";
    }
    std::string s;
    for (const auto& e : j) {
        s += (s.empty() ? "" : " ") + cell(e);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------- public

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": malformed JSON");
    }
    ConfigReader r(text);
    r.only_keys(root, "",
                {"schema", "device", "layer", "noise", "seed", "mode", "shots", "threads", "output_dir",
                 "readout", "characterization", "echo", "mitigation"});
    if (!root.contains("schema")) {
        r.fail("", "missing \"schema\" (expected \"" + std::string(kConfigSchema) + "\")");
    }
    if (r.string(root["schema"], "/schema") != kConfigSchema) {
        r.fail("/schema", "unsupported schema (expected \"" + std::string(kConfigSchema) + "\")");
    }

    ExperimentConfig c;
    if (!root.contains("device")) {
        r.fail("", "missing \"device\"");
    }
    const Json& dev = root["device"];
    r.only_keys(dev, "/device", {"preset", "num_qubits", "edges"});
    if (dev.contains("preset")) {
        auto preset = r.string(dev["preset"], "/device/preset");
        if (preset == "seven_qubit_tree") {
            c.graph = ConnectivityGraph::seven_qubit_tree();
        } else if (preset == "line") {
            if (!dev.contains("num_qubits")) {
                r.fail("/device", "preset \"line\" needs num_qubits");
            }
            c.graph = ConnectivityGraph::line(r.integer(dev["num_qubits"], "/device/num_qubits", 1, 10));
        } else {
            r.fail("/device/preset", "unknown preset \"" + preset + "\" (expected seven_qubit_tree or line)");
        }
    } else {
        if (dev.contains("num_qubits")) {
            r.integer(dev["num_qubits"], "/device/num_qubits", 1, kMaxSimulatedQubits);
        }
        c.graph = r.guarded("/device", [&] { return graph_from_json(dev); });
    }
    if (c.graph.num_qubits() > kMaxSimulatedQubits) {
        r.fail("/device", "at most " + std::to_string(kMaxSimulatedQubits) + " qubits can be simulated");
    }

    if (root.contains("layer")) {
        c.layer = r.guarded("/layer", [&] { return layer_from_json(root["layer"]); });
        NoisyLayer probe{c.layer, LayerNoiseModel(c.graph)};
        r.guarded("/layer", [&] {
            probe.validate();
            return 0;
        });
    }

    if (root.contains("seed")) {
        c.seed = r.integer(root["seed"], "/seed", 0, std::numeric_limits<std::uint64_t>::max());
    }
    if (root.contains("mode")) {
        c.mode = r.guarded("/mode", [&] { return parse_execution_mode(r.string(root["mode"], "/mode")); });
    }
    if (root.contains("shots")) {
        c.shots = r.integer(root["shots"], "/shots", 1, std::uint64_t{1} << 40);
    }
    if (root.contains("threads")) {
        c.threads = r.integer(root["threads"], "/threads", 1, 1024);
    }
    if (root.contains("output_dir")) {
        c.output_dir = r.string(root["output_dir"], "/output_dir");
    }

    if (root.contains("noise")) {
        const Json& n = root["noise"];
        r.only_keys(n, "/noise", {"source", "seed", "theta_max", "p_max", "path", "theta", "rates"});
        auto source = n.contains("source") ? r.string(n["source"], "/noise/source") : std::string("none");
        if (source == "none") {
            c.noise.source = NoiseSpec::Source::kNone;
        } else if (source == "random") {
            c.noise.source = NoiseSpec::Source::kRandom;
            c.noise.seed = n.contains("seed") ? r.integer(n["seed"], "/noise/seed", 0,
                                                          std::numeric_limits<std::uint64_t>::max())
                                              : 0;
            if (!n.contains("theta_max") || !n.contains("p_max")) {
                r.fail("/noise", "random noise needs theta_max and p_max");
            }
            c.noise.theta_max = r.number(n["theta_max"], "/noise/theta_max", 0.0, 0.5);
            c.noise.p_max = r.number(n["p_max"], "/noise/p_max", 0.0, 1.0);
        } else if (source == "file") {
            c.noise.source = NoiseSpec::Source::kFile;
            if (!n.contains("path")) {
                r.fail("/noise", "file noise needs a path");
            }
            std::filesystem::path p = r.string(n["path"], "/noise/path");
            c.noise.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        } else {
            r.fail("/noise/source", "unknown source \"" + source + "\" (expected none, random or file)");
        }
        std::size_t nq = c.graph.num_qubits();
        if (n.contains("theta")) {
            if (!n["theta"].is_array()) {
                r.fail("/noise/theta", "expected a list of {generator, theta}");
            }
            for (std::size_t i = 0; i < n["theta"].size(); ++i) {
                std::string ptr = "/noise/theta/" + std::to_string(i);
                const Json& t = n["theta"][i];
                r.only_keys(t, ptr, {"generator", "qubits", "theta"});
                if (!t.contains("generator") || !t.contains("theta")) {
                    r.fail(ptr, "needs generator and theta");
                }
                auto g = r.guarded(ptr + "/generator", [&] {
                    auto local = PauliString::from_string(r.string(t["generator"], ptr + "/generator"));
                    if (!t.contains("qubits")) {
                        return local;
                    }
                    std::vector<std::size_t> qs;
                    for (std::size_t k = 0; k < t["qubits"].size(); ++k) {
                        qs.push_back(
                            r.integer(t["qubits"][k], ptr + "/qubits/" + std::to_string(k), 0, nq - 1));
                    }
                    return PauliString::embed(local, qs, nq);
                });
                if (g.num_qubits() != nq) {
                    r.fail(ptr + "/generator", "expected " + std::to_string(nq) + " labels or a qubits list");
                }
                c.noise.theta.emplace_back(g, r.number(t["theta"], ptr + "/theta", -0.5, 0.5));
            }
        }
        if (n.contains("rates")) {
            if (!n["rates"].is_array()) {
                r.fail("/noise/rates", "expected a list of {support, rates}");
            }
            for (std::size_t i = 0; i < n["rates"].size(); ++i) {
                std::string ptr = "/noise/rates/" + std::to_string(i);
                const Json& e = n["rates"][i];
                r.only_keys(e, ptr, {"support", "rates"});
                if (!e.contains("support") || !e.contains("rates") || !e["support"].is_array() ||
                    !e["rates"].is_object()) {
                    r.fail(ptr, "needs a support list and a rates object");
                }
                LocalSupport support;
                for (std::size_t k = 0; k < e["support"].size(); ++k) {
                    support.qubits.push_back(
                        r.integer(e["support"][k], ptr + "/support/" + std::to_string(k), 0, nq - 1));
                }
                if (support.size() < 1 || support.size() > 2) {
                    r.fail(ptr + "/support", "a support has one or two qubits");
                }
                std::vector<double> values(support.num_paulis() - 1, 0.0);
                for (const auto& [label, value] : e["rates"].items()) {
                    auto p =
                        r.guarded(ptr + "/rates/" + label, [&] { return PauliString::from_string(label); });
                    if (p.num_qubits() != support.size() || p.is_identity()) {
                        r.fail(ptr + "/rates/" + label, "label does not fit the support");
                    }
                    values[p.lex_index() - 1] = r.number(value, ptr + "/rates/" + label, 0.0, 1.0);
                }
                c.noise.rates.push_back(r.guarded(ptr, [&] { return PauliRates(support, values); }));
            }
        }
    }

    if (root.contains("readout")) {
        const Json& ro = root["readout"];
        r.only_keys(ro, "/readout", {"p01", "p10", "mitigate"});
        if (ro.contains("p01")) c.readout_p01 = r.number(ro["p01"], "/readout/p01", 0.0, 0.5);
        if (ro.contains("p10")) c.readout_p10 = r.number(ro["p10"], "/readout/p10", 0.0, 0.5);
        if (ro.contains("mitigate")) c.mitigate_readout = r.boolean(ro["mitigate"], "/readout/mitigate");
    }

    if (root.contains("characterization")) {
        const Json& ch = root["characterization"];
        const std::string base = "/characterization";
        r.only_keys(ch, base,
                    {"max_repetitions", "rounds", "design", "pairing", "frozen_qubits", "random_offsets",
                     "save_raw"});
        auto& cs = c.characterization;
        if (ch.contains("max_repetitions"))
            cs.max_repetitions = r.integer(ch["max_repetitions"], base + "/max_repetitions", 1, 64);
        if (ch.contains("rounds")) cs.rounds = r.integer(ch["rounds"], base + "/rounds", 1, 16);
        if (ch.contains("design")) {
            auto v = r.string(ch["design"], base + "/design");
            if (v == "midpoint") {
                cs.problem.design = DesignPoint::kMidpoint;
            } else if (v == "input") {
                cs.problem.design = DesignPoint::kInput;
            } else {
                r.fail(base + "/design", "expected \"midpoint\" or \"input\"");
            }
        }
        if (ch.contains("pairing")) {
            auto v = r.string(ch["pairing"], base + "/pairing");
            if (v == "consecutive") {
                cs.problem.pairing = Pairing::kConsecutive;
            } else if (v == "cumulative") {
                cs.problem.pairing = Pairing::kCumulative;
            } else {
                r.fail(base + "/pairing", "expected \"consecutive\" or \"cumulative\"");
            }
        }
        if (ch.contains("frozen_qubits")) {
            if (!ch["frozen_qubits"].is_array()) {
                r.fail(base + "/frozen_qubits", "expected a list of qubits");
            }
            for (std::size_t k = 0; k < ch["frozen_qubits"].size(); ++k) {
                cs.plan.frozen_qubits.push_back(r.integer(ch["frozen_qubits"][k],
                                                          base + "/frozen_qubits/" + std::to_string(k), 0,
                                                          c.graph.num_qubits() - 1));
            }
        }
        if (ch.contains("random_offsets"))
            cs.plan.random_offsets = r.boolean(ch["random_offsets"], base + "/random_offsets");
        if (ch.contains("save_raw")) cs.save_raw = r.boolean(ch["save_raw"], base + "/save_raw");
    }
    c.characterization.plan.seed = c.seed;

    bool has_edge = !c.graph.edges().empty();
    if (has_edge) {
        c.echo.edge = c.graph.edges().front();
        c.mitigation.edge = c.graph.edges().front();
    }
    if (root.contains("echo")) {
        const Json& e = root["echo"];
        const std::string base = "/echo";
        r.only_keys(
            e, base,
            {"edge", "preparation", "max_repetitions", "layer", "twirl_samples", "mitigate", "rounds"});
        if (e.contains("edge")) c.echo.edge = r.edge(e["edge"], base + "/edge", c.graph);
        if (e.contains("preparation")) {
            c.echo.preparation = r.string(e["preparation"], base + "/preparation");
            auto state =
                r.guarded(base + "/preparation", [&] { return parse_product_state(c.echo.preparation); });
            if (state.size() != 2) {
                r.fail(base + "/preparation", "expected two qubit labels");
            }
        }
        if (e.contains("max_repetitions"))
            c.echo.max_repetitions = r.integer(e["max_repetitions"], base + "/max_repetitions", 1, 1000);
        if (e.contains("layer")) c.echo.layer = parse_echo_layer(r, e["layer"], base + "/layer");
        if (e.contains("twirl_samples"))
            c.echo.twirl_samples = r.integer(e["twirl_samples"], base + "/twirl_samples", 1, 100000);
        if (e.contains("mitigate")) c.echo.mitigate = r.boolean(e["mitigate"], base + "/mitigate");
        if (e.contains("rounds")) c.echo.rounds = r.integer(e["rounds"], base + "/rounds", 1, 16);
    }
    c.mitigation.preparations = default_preparations();
    if (root.contains("mitigation")) {
        const Json& m = root["mitigation"];
        const std::string base = "/mitigation";
        r.only_keys(m, base,
                    {"edge", "layer", "max_repetitions", "rounds", "preparations", "twirl_samples", "pec"});
        auto& ms = c.mitigation;
        if (m.contains("edge")) ms.edge = r.edge(m["edge"], base + "/edge", c.graph);
        if (m.contains("layer")) ms.layer = parse_echo_layer(r, m["layer"], base + "/layer");
        if (m.contains("max_repetitions"))
            ms.max_repetitions = r.integer(m["max_repetitions"], base + "/max_repetitions", 3, 1000);
        if (m.contains("rounds")) ms.rounds = r.integer(m["rounds"], base + "/rounds", 1, 16);
        if (m.contains("twirl_samples"))
            ms.twirl_samples = r.integer(m["twirl_samples"], base + "/twirl_samples", 1, 100000);
        if (m.contains("preparations")) {
            if (!m["preparations"].is_array() || m["preparations"].empty()) {
                r.fail(base + "/preparations", "expected a non-empty list of two-qubit states");
            }
            ms.preparations.clear();
            for (std::size_t k = 0; k < m["preparations"].size(); ++k) {
                std::string ptr = base + "/preparations/" + std::to_string(k);
                auto text_state = r.string(m["preparations"][k], ptr);
                auto state = r.guarded(ptr, [&] { return parse_product_state(text_state); });
                if (state.size() != 2) {
                    r.fail(ptr, "expected two qubit labels");
                }
                ms.preparations.push_back(to_string(state));
            }
            std::set<std::size_t> covered;
            for (const auto& label : ms.preparations) {
                for (const auto& [op, sign] : eigenoperators(parse_product_state(label))) {
                    covered.insert(op.lex_index());
                }
            }
            std::string missing;
            for (std::size_t b = 1; b < 16; ++b) {
                if (!covered.count(b)) {
                    missing += (missing.empty() ? "" : " ") + PauliString::from_lex_index(2, b).str();
                }
            }
            if (!missing.empty()) {
                r.fail(base + "/preparations",
                       "every non-identity two-qubit Pauli must be an eigenoperator of some preparation; "
                       "missing " +
                           missing);
            }
        }
        if (m.contains("pec")) {
            const Json& p = m["pec"];
            r.only_keys(p, base + "/pec", {"method", "ensemble", "shots"});
            if (p.contains("method")) {
                auto v = r.string(p["method"], base + "/pec/method");
                if (v == "exhaustive") {
                    ms.pec = PecMethod::kExhaustive;
                } else if (v == "sampled") {
                    ms.pec = PecMethod::kSampled;
                } else {
                    r.fail(base + "/pec/method", "expected \"exhaustive\" or \"sampled\"");
                }
            }
            if (p.contains("ensemble"))
                ms.ensemble = r.integer(p["ensemble"], base + "/pec/ensemble", 1, 1000000);
            if (p.contains("shots")) ms.pec_shots = r.integer(p["shots"], base + "/pec/shots", 1, 1u << 30);
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path.parent_path());
}

Json config_to_json(const ExperimentConfig& c) {
    Json j{{"schema", kConfigSchema}};
    j["device"] = graph_to_json(c.graph);
    j["layer"] = layer_to_json(c.layer);
    Json noise = Json::object();
    switch (c.noise.source) {
        case NoiseSpec::Source::kNone:
            noise["source"] = "none";
            break;
        case NoiseSpec::Source::kRandom:
            noise["source"] = "random";
            noise["seed"] = c.noise.seed;
            noise["theta_max"] = c.noise.theta_max;
            noise["p_max"] = c.noise.p_max;
            break;
        case NoiseSpec::Source::kFile:
            noise["source"] = "file";
            noise["path"] = c.noise.path.generic_string();
            break;
    }
    Json theta = Json::array();
    for (const auto& [g, t] : c.noise.theta) {
        theta.push_back({{"generator", g.str()}, {"theta", t}});
    }
    noise["theta"] = theta;
    Json rates = Json::array();
    for (const auto& pr : c.noise.rates) {
        Json values = Json::object();
        for (std::size_t a = 1; a < pr.rates().size(); ++a) {
            values[PauliString::from_lex_index(pr.support().size(), a).str()] = pr.rates()[a];
        }
        rates.push_back({{"support", pr.support().qubits}, {"rates", values}});
    }
    noise["rates"] = rates;
    j["noise"] = noise;
    j["seed"] = c.seed;
    j["mode"] = to_string(c.mode);
    j["shots"] = c.shots;
    j["readout"] = {{"p01", c.readout_p01}, {"p10", c.readout_p10}, {"mitigate", c.mitigate_readout}};
    const auto& cs = c.characterization;
    j["characterization"] = {
        {"max_repetitions", cs.max_repetitions},
        {"rounds", cs.rounds},
        {"design", cs.problem.design == DesignPoint::kMidpoint ? "midpoint" : "input"},
        {"pairing", cs.problem.pairing == Pairing::kConsecutive ? "consecutive" : "cumulative"},
        {"frozen_qubits", cs.plan.frozen_qubits},
        {"random_offsets", cs.plan.random_offsets},
        {"save_raw", cs.save_raw}};
    j["echo"] = {{"edge", {c.echo.edge.first, c.echo.edge.second}},
                 {"preparation", c.echo.preparation},
                 {"max_repetitions", c.echo.max_repetitions},
                 {"layer", to_string(c.echo.layer)},
                 {"twirl_samples", c.echo.twirl_samples},
                 {"mitigate", c.echo.mitigate},
                 {"rounds", c.echo.rounds}};
    const auto& ms = c.mitigation;
    j["mitigation"] = {{"edge", {ms.edge.first, ms.edge.second}},
                       {"layer", to_string(ms.layer)},
                       {"max_repetitions", ms.max_repetitions},
                       {"rounds", ms.rounds},
                       {"preparations", ms.preparations},
                       {"twirl_samples", ms.twirl_samples},
                       {"pec",
                        {{"method", ms.pec == PecMethod::kExhaustive ? "exhaustive" : "sampled"},
                         {"ensemble", ms.ensemble},
                         {"shots", ms.pec_shots}}}};
    return j;
}

LayerNoiseModel build_noise_model(const ExperimentConfig& config) {
    LayerNoiseModel model(config.graph);
    switch (config.noise.source) {
        case NoiseSpec::Source::kNone:
            break;
        case NoiseSpec::Source::kRandom:
            model = random_model(config.graph, config.noise.seed, config.noise.theta_max, config.noise.p_max);
            break;
        case NoiseSpec::Source::kFile: {
            Json doc;
            try {
                doc = Json::parse(read_text_file(config.noise.path));
            } catch (const nlohmann::json::parse_error&) {
                throw ConfigError("model file " + config.noise.path.string() + " is not valid JSON");
            }
            model = model_from_json(doc);
            if (!(model.graph() == config.graph)) {
                throw ConfigError("model file " + config.noise.path.string() +
                                  " describes a different device");
            }
            break;
        }
    }
    try {
        for (const auto& [g, t] : config.noise.theta) {
            model.set_theta(g, t);
        }
        for (const auto& r : config.noise.rates) {
            model.set_rates(r);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("noise override: ") + e.what());
    }
    return model;
}

LayerNoiseModel restrict_model(const LayerNoiseModel& model, Edge edge) {
    auto [c, t] = edge;
    if (!model.graph().has_edge(c, t)) {
        throw ConfigError("qubits " + std::to_string(c) + " and " + std::to_string(t) + " are not an edge");
    }
    LayerNoiseModel out(ConnectivityGraph::line(2));
    out.set_small_noise_limit(model.small_noise_limit());
    const std::vector<std::size_t> pair{c, t};
    for (std::size_t k = 0; k < model.generators().size(); ++k) {
        const auto& g = model.generators()[k];
        auto support = g.support();
        bool inside =
            std::all_of(support.begin(), support.end(), [&](std::size_t q) { return q == c || q == t; });
        if (inside) {
            out.set_theta(g.restrict_to(pair), model.theta()[k]);
        }
    }
    for (const auto& r : model.rates()) {
        const auto& qs = r.support().qubits;
        if (qs.size() == 1 && (qs[0] == c || qs[0] == t)) {
            std::vector<double> values(r.rates().begin() + 1, r.rates().end());
            out.set_rates(PauliRates(LocalSupport{{qs[0] == c ? std::size_t{0} : std::size_t{1}}}, values));
        } else if (qs.size() == 2 && ((qs[0] == c && qs[1] == t) || (qs[0] == t && qs[1] == c))) {
            std::vector<double> values(15, 0.0);
            for (std::size_t a = 1; a < 16; ++a) {
                auto p = PauliString::from_lex_index(2, a);
                auto mapped = qs[0] == c ? p : PauliString::embed(p, std::vector<std::size_t>{1, 0}, 2);
                values[mapped.lex_index() - 1] = r.rates()[a];
            }
            out.set_rates(PauliRates(LocalSupport{{0, 1}}, values));
        }
    }
    return out;
}

RunArtifact run_echo(const ExperimentConfig& config) {
    if (config.graph.edges().empty()) {
        throw ConfigError("the echo experiment needs a device with an edge");
    }
    auto model = build_noise_model(config);
    auto exp = edge_experiment(model, config.echo.edge, config.echo.layer);
    RunArtifact a = make_artifact("echo", config, model);
    Json raw{{"schema", kResultsSchema}, {"mode", to_string(config.mode)}};
    Json variants = Json::object();
    variants["bare"] = echo_series(config, exp.bare(), derive_seed(config.seed, kBareStage));
    if (config.mode == ExecutionMode::kExact) {
        variants["twirled"] = echo_series(config, exp.twirled(), derive_seed(config.seed, kTwirlStage));
    } else {
        variants["twirled"] = echo_twirled_sampled(config, exp, derive_seed(config.seed, kTwirlStage));
    }
    if (config.echo.mitigate) {
        std::vector<double> acc;
        raw["calibration"] = calibrate_edge(config, exp, config.echo.rounds,
                                            derive_seed(config.seed, kCalibrationStage), &acc);
        variants["mitigated"] =
            echo_series(config, exp.corrected(acc), derive_seed(config.seed, kCorrectedStage));
    }
    raw["variants"] = variants;
    a.raw = raw;
    a.derived = derive("echo", config, model, a.raw);
    return a;
}

RunArtifact run_characterization(const ExperimentConfig& config) {
    auto model = build_noise_model(config);
    NoisyLayer layer{config.layer, model};
    layer.validate();
    RunArtifact a = make_artifact("characterize", config, model);
    auto options = device_options(config);
    auto plan = build_preparation_plan(config.graph, config.layer, options.plan);
    auto bases = build_measurement_bases(config.graph, plan.subsystems);
    auto factory = exact_correction_factory(layer);
    std::vector<double> accumulated(model.generators().size(), 0.0);
    Json rounds = Json::array();
    for (std::size_t r = 0; r < config.characterization.rounds; ++r) {
        std::uint64_t seed = r == 0 ? config.seed : derive_seed(config.seed, r);
        auto schedule = generate_schedule(plan, options.max_repetitions, bases, options.shots, seed);
        auto results = run_schedule(schedule, factory(accumulated), options.execution);
        if (r + 1 < config.characterization.rounds) {
            options.seed = seed;
            auto est = characterize_results(config.graph, config.layer, plan, schedule, results, options);
            for (std::size_t k = 0; k < accumulated.size(); ++k) {
                if (!std::isnan(est.theta.standard_error[k])) {
                    accumulated[k] += est.theta.theta[k];
                }
            }
        }
        rounds.push_back({{"schedule", schedule_to_json(schedule)}, {"results", results_to_json(results)}});
    }
    a.raw = {{"schema", kResultsSchema}, {"rounds", rounds}};
    a.derived = derive("characterize", config, model, a.raw);
    if (!config.characterization.save_raw) {
        a.raw = nullptr;
    }
    return a;
}

RunArtifact run_mitigation_pipeline(const ExperimentConfig& config) {
    if (config.graph.edges().empty()) {
        throw ConfigError("the mitigation pipeline needs a device with an edge");
    }
    const auto& s = config.mitigation;
    auto model = build_noise_model(config);
    auto exp = edge_experiment(model, s.edge, s.layer);
    RunArtifact a = make_artifact("mitigate", config, model);
    Json raw{{"schema", kResultsSchema}, {"mode", to_string(config.mode)}};

    std::vector<double> acc;
    raw["calibration"] =
        calibrate_edge(config, exp, s.rounds, derive_seed(config.seed, kCalibrationStage), &acc);
    Channel bare = exp.bare();
    Channel corrected = exp.corrected(acc);
    const std::vector<std::size_t> both{0, 1};
    TwirlSet idle_twirl = build_twirl_set(GateLayer{}, 2, both);
    Channel corrected_twirled = twirl_average(corrected, idle_twirl);
    std::size_t np = s.preparations.size();

    auto run_panel = [&](const Channel& repetition, std::uint64_t stage) {
        std::vector<Json> out(np);
        std::uint64_t seed = derive_seed(config.seed, stage);
        parallel_for(np, config.threads, [&](std::size_t p) {
            DensityMatrix rho = prepare_product_state(s.preparations[p]);
            Json per_m = Json::array();
            for (std::size_t m = 1; m <= s.max_repetitions; ++m) {
                repetition(rho);
                per_m.push_back(
                    measure_all_bases(rho, config.mode, config.shots, derive_seed(derive_seed(seed, p), m)));
            }
            out[p] = std::move(per_m);
        });
        return Json(out);
    };
    Json panels = Json::object();
    panels["a"] = run_panel(bare, kBareStage);
    panels["b"] = run_panel(corrected, kCorrectedStage);

    // Decay of the twirled corrected layer, measured in each preparation's eigenbasis.
    std::vector<Json> fit_raw(np);
    std::uint64_t fit_seed = derive_seed(config.seed, kFitStage);
    parallel_for(np, config.threads, [&](std::size_t p) {
        auto state = parse_product_state(s.preparations[p]);
        auto basis = eigenbasis(state);
        Json per_m = Json::array();
        if (config.mode == ExecutionMode::kExact) {
            DensityMatrix rho = prepare_product_state(state);
            for (std::size_t m = 1; m <= s.max_repetitions; ++m) {
                corrected_twirled(rho);
                per_m.push_back(Json::array({measure(rho, basis, config.mode, config.shots, 0)}));
            }
        } else {
            for (std::size_t m = 1; m <= s.max_repetitions; ++m) {
                Json list = Json::array();
                for (std::size_t t = 0; t < s.twirl_samples; ++t) {
                    std::uint64_t circuit = derive_seed(derive_seed(derive_seed(fit_seed, p), m), t);
                    std::mt19937_64 rng(circuit);
                    std::uniform_int_distribution<std::size_t> pick(0, idle_twirl.pairs.size() - 1);
                    DensityMatrix rho = prepare_product_state(state);
                    for (std::size_t r = 0; r < m; ++r) {
                        const auto& pair = idle_twirl.pairs[pick(rng)];
                        apply_pauli(rho, pair.before);
                        corrected(rho);
                        apply_pauli(rho, pair.after);
                    }
                    list.push_back(measure(rho, basis, config.mode, config.shots, derive_seed(circuit, 1)));
                }
                per_m.push_back(std::move(list));
            }
        }
        fit_raw[p] = std::move(per_m);
    });
    raw["rate_fit"] = Json(fit_raw);

    RateFit fit = fit_corrected_rates(s, raw["rate_fit"]);
    PecInverse inverse = pec_inverse(std::vector<PauliRates>{fit.rates});

    if (s.pec == PecMethod::kExhaustive) {
        raw["pec_method"] = "exhaustive";
        std::vector<Json> out(np);
        parallel_for(np, config.threads, [&](std::size_t p) {
            DensityMatrix rho = prepare_product_state(s.preparations[p]);
            Json per_m = Json::array();
            for (std::size_t m = 1; m <= s.max_repetitions; ++m) {
                corrected_twirled(rho);
                apply_quasi_inverse(rho, inverse);
                per_m.push_back(measure_all_bases(rho, ExecutionMode::kExact, 0, 0));
            }
            out[p] = std::move(per_m);
        });
        panels["c"] = Json(out);
    } else {
        raw["pec_method"] = "sampled";
        std::uint64_t pec_seed = derive_seed(config.seed, kPecStage);
        std::uint64_t shots = config.mode == ExecutionMode::kExact ? 0 : s.pec_shots;
        Json out = Json::array();
        for (std::size_t p = 0; p < np; ++p) {
            Json per_m = Json::array();
            for (std::size_t m = 1; m <= s.max_repetitions; ++m) {
                PecExperiment pe{parse_product_state(s.preparations[p]), m, corrected, idle_twirl, inverse};
                Json per_basis = Json::array();
                const auto& bases = two_qubit_bases();
                for (std::size_t b = 0; b < bases.size(); ++b) {
                    std::uint64_t seed = derive_seed(derive_seed(derive_seed(pec_seed, p), m), b);
                    auto samples = pec_sample(pe, bases[b], s.ensemble, shots, seed, config.threads);
                    Json list = Json::array();
                    for (const auto& smp : samples) {
                        Json outcome = shots == 0 ? Json(smp.probabilities) : histogram_to_json(smp.counts);
                        list.push_back({{"weight", smp.weight}, {"outcome", outcome}});
                    }
                    per_basis.push_back(std::move(list));
                }
                per_m.push_back(std::move(per_basis));
            }
            out.push_back(std::move(per_m));
        }
        panels["c"] = out;
    }
    raw["panels"] = panels;
    a.raw = raw;
    a.derived = derive("mitigate", config, model, a.raw);
    return a;
}

Json derive(const std::string& kind, const ExperimentConfig& config, const LayerNoiseModel& model,
            const Json& raw) {
    if (raw.is_null()) {
        throw ConfigError("this run was saved without raw data and cannot be re-derived");
    }
    require_schema(raw, kResultsSchema);
    if (kind == "echo") {
        return derive_echo(config, model, raw);
    }
    if (kind == "characterize") {
        return derive_characterization(config, model, raw);
    }
    if (kind == "mitigate") {
        return derive_mitigation(config, model, raw);
    }
    throw ConfigError("unknown run kind \"" + kind + "\"");
}

std::map<std::string, std::string> emit_plot_data(const RunArtifact& artifact, PlotFormat format) {
    std::map<std::string, std::string> files;
    const Json& d = artifact.derived;
    if (format == PlotFormat::kJson) {
        Json series{{"schema", kRunSchema}, {"kind", artifact.kind}};
        if (artifact.kind == "echo") {
            series["variants"] = d.at("variants");
        } else if (artifact.kind == "characterize") {
            series["generators"] = d.at("generators");
            series["per_qubit"] = d.at("per_qubit");
            series["per_edge"] = d.at("per_edge");
        } else {
            series["panels"] = d.at("panels");
            series["fidelity"] = d.at("fidelity");
        }
        files["plot_data.json"] = dump_json(series);
        return files;
    }
    if (artifact.kind == "echo") {
        CsvTable fits({"variant", "operator", "amplitude", "eigenvalue", "r_squared", "model_eigenvalue",
                       "pauli_only_eigenvalue", "monotone"});
        CsvTable all({"variant", "operator", "m", "value"});
        for (const auto& [variant, series] : d.at("variants").items()) {
            CsvTable t({"operator", "m", "value"});
            for (const auto& op : series) {
                const auto& values = op.at("values");
                for (std::size_t m = 0; m < values.size(); ++m) {
                    t.row().add(op.at("operator").get<std::string>()).add(m).add(values[m].get<double>());
                    all.row()
                        .add(variant)
                        .add(op.at("operator").get<std::string>())
                        .add(m)
                        .add(values[m].get<double>());
                }
                const Json& fit = op.at("fit");
                fits.row().add(variant).add(op.at("operator").get<std::string>());
                fits.add(fit.is_null() ? "" : cell(fit["amplitude"]))
                    .add(fit.is_null() ? "" : cell(fit["eigenvalue"]))
                    .add(fit.is_null() ? "" : cell(fit["r_squared"]));
                fits.add(op.contains("model_eigenvalue") ? cell(op["model_eigenvalue"]) : "")
                    .add(op.contains("pauli_only_eigenvalue") ? cell(op["pauli_only_eigenvalue"]) : "")
                    .add(cell(op.at("monotone")));
            }
            add_csv(files, "echo_" + variant + ".csv", t);
        }
        add_csv(files, "echo_fits.csv", fits);
        add_csv(files, "echo_series.csv", all);
    } else if (artifact.kind == "characterize") {
        CsvTable t({"generator", "qubits", "theta", "abs_theta", "standard_error", "injected", "error"});
        for (const auto& row : d.at("generators")) {
            t.row().add(cell(row["generator"])).add(cell(row["qubits"])).add(cell(row["theta"]));
            t.add(row["theta"].is_null() ? "" : format_double(std::abs(row["theta"].get<double>())));
            t.add(cell(row["standard_error"])).add(cell(row["injected"])).add(cell(row["error"]));
        }
        add_csv(files, "theta.csv", t);
        CsvTable q({"qubit", "X", "Y", "Z"});
        for (const auto& row : d.at("per_qubit")) {
            q.row().add(cell(row["qubit"])).add(cell(row["X"])).add(cell(row["Y"])).add(cell(row["Z"]));
        }
        add_csv(files, "theta_per_qubit.csv", q);
        CsvTable e({"edge", "XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"});
        for (const auto& row : d.at("per_edge")) {
            e.row().add(cell(row["edge"]));
            for (const char* k : {"XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"}) {
                e.add(cell(row[k]));
            }
        }
        add_csv(files, "theta_per_edge.csv", e);
    } else {
        auto paulis = all_paulis(2);
        CsvTable full({"panel", "preparation", "m", "operator", "value", "standard_error", "ideal"});
        for (const auto& [panel, entries] : d.at("panels").items()) {
            CsvTable t({"preparation", "m", "operator", "value", "standard_error", "ideal"});
            for (const auto& entry : entries) {
                auto prep = entry.at("preparation").get<std::string>();
                auto ideal = vectorize(prepare_product_state(prep));
                const auto& rows = entry.at("expectations");
                for (std::size_t m = 0; m < rows.size(); ++m) {
                    for (std::size_t i = 0; i < 16; ++i) {
                        auto label = paulis[i].str();
                        double v = rows[m].at(label).get<double>();
                        std::string se = entry.contains("standard_errors")
                                             ? cell(entry["standard_errors"][m].at(label))
                                             : std::string();
                        double want = ideal.expectation(i);
                        t.row().add(prep).add(m + 1).add(label).add(v).add(se).add(want);
                        full.row().add(panel).add(prep).add(m + 1).add(label).add(v).add(se).add(want);
                    }
                }
            }
            add_csv(files, "panel_" + panel + ".csv", t);
        }
        add_csv(files, "full_panel.csv", full);
        CsvTable f({"panel", "m", "mean_infidelity"});
        for (const auto& [panel, entry] : d.at("fidelity").items()) {
            const auto& per_m = entry.at("mean_infidelity_per_m");
            for (std::size_t m = 0; m < per_m.size(); ++m) {
                f.row().add(panel).add(m + 1).add(per_m[m].get<double>());
            }
        }
        add_csv(files, "fidelity.csv", f);
    }
    return files;
}

void write_artifact(const RunArtifact& artifact, const std::filesystem::path& dir, PlotFormat format) {
    Json run{{"schema", kRunSchema},
             {"kind", artifact.kind},
             {"config", artifact.config},
             {"model", artifact.model}};
    write_text_file(dir / "run.json", dump_json(run));
    write_text_file(dir / "model.json", dump_json(artifact.model));
    if (!artifact.raw.is_null()) {
        write_text_file(dir / "raw.json", artifact.raw.dump() + "\n");
    }
    Json derived{{"schema", kDerivedSchema}, {"kind", artifact.kind}};
    derived.update(artifact.derived);
    write_text_file(dir / "derived.json", dump_json(derived));
    if (artifact.kind == "characterize") {
        LayerNoiseModel estimated = model_from_json(artifact.model);
        estimated = LayerNoiseModel(estimated.graph());
        for (const auto& row : artifact.derived.at("accumulated")) {
            estimated.set_theta(PauliString::from_string(row.at("generator").get<std::string>()),
                                row.at("theta").get<double>());
        }
        write_text_file(dir / "estimated_model.json", dump_json(model_to_json(estimated)));
    }
    for (const auto& [name, contents] : emit_plot_data(artifact, format)) {
        write_text_file(dir / name, contents);
    }
}

RunArtifact read_artifact(const std::filesystem::path& dir) {
    RunArtifact a;
    Json run;
    try {
        run = Json::parse(read_text_file(dir / "run.json"));
        require_schema(run, kRunSchema);
        a.kind = run.at("kind").get<std::string>();
        a.config = run.at("config");
        a.model = run.at("model");
        if (std::filesystem::exists(dir / "raw.json")) {
            a.raw = Json::parse(read_text_file(dir / "raw.json"));
        }
        if (std::filesystem::exists(dir / "derived.json")) {
            a.derived = Json::parse(read_text_file(dir / "derived.json"));
            require_schema(a.derived, kDerivedSchema);
            a.derived.erase("schema");
            a.derived.erase("kind");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot read run in " + dir.string() + ": " + e.what());
    }
    return a;
}

RunArtifact rederive(const RunArtifact& artifact, const std::filesystem::path& base_dir) {
    RunArtifact out = artifact;
    auto config = parse_config(artifact.config.dump(), base_dir);
    auto model = model_from_json(artifact.model);
    out.derived = derive(artifact.kind, config, model, artifact.raw);
    return out;
}

}  // namespace rotpauli
