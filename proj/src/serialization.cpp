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

#include "rotpauli/serialization.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rotpauli/errors.hpp"

namespace rotpauli {

namespace {

template <typename T>
T get_field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(std::string("missing field \"") + key + "\"");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
    }
}

std::vector<std::size_t> qubit_list(const Json& j) {
    if (!j.is_array()) {
        throw ConfigError("expected a list of qubit indices");
    }
    std::vector<std::size_t> out;
    for (const auto& q : j) {
        if (!q.is_number_unsigned()) {
            throw ConfigError("qubit indices must be non-negative integers");
        }
        out.push_back(q.get<std::size_t>());
    }
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

Json nullable(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double read_nullable(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string basis_string(const std::vector<Pauli1>& basis) {
    std::string s;
    for (Pauli1 p : basis) {
        s += pauli1_char(p);
    }
    return s;
}

}  // namespace

void require_schema(const Json& doc, std::string_view schema) {
    if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string()) {
        throw ConfigError("document has no schema tag (expected " + std::string(schema) + ")");
    }
    if (doc["schema"].get<std::string>() != schema) {
        throw ConfigError("unsupported schema " + doc["schema"].get<std::string>() + " (expected " +
                          std::string(schema) + ")");
    }
}

Json graph_to_json(const ConnectivityGraph& graph) {
    Json edges = Json::array();
    for (const auto& [a, b] : graph.edges()) {
        edges.push_back({a, b});
    }
    return {{"num_qubits", graph.num_qubits()}, {"edges", edges}};
}

ConnectivityGraph graph_from_json(const Json& j) {
    auto n = get_field<std::size_t>(j, "num_qubits");
    std::vector<Edge> edges;
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            auto q = qubit_list(e);
            if (q.size() != 2) {
                throw ConfigError("every edge needs exactly two qubits");
            }
            edges.emplace_back(q[0], q[1]);
        }
    }
    try {
        return ConnectivityGraph(n, edges);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

Json gate_to_json(const Gate& gate) {
    Json j{{"gate", lower(gate.name())}, {"qubits", gate.qubits}};
    if (gate.kind == GateKind::Rp) {
        j["pauli"] = gate.generator.str();
    }
    if (gate.kind == GateKind::Rz || gate.kind == GateKind::Rp) {
        j["angle"] = gate.angle;
    }
    return j;
}

Gate gate_from_json(const Json& j) {
    auto name = lower(get_field<std::string>(j, "gate"));
    auto qubits = qubit_list(j.contains("qubits") ? j["qubits"] : Json::array());
    auto one = [&]() {
        if (qubits.size() != 1) {
            throw ConfigError("gate " + name + " takes one qubit");
        }
        return qubits[0];
    };
    if (name == "x") return Gate::x(one());
    if (name == "y") return Gate::y(one());
    if (name == "z") return Gate::z(one());
    if (name == "sx") return Gate::sx(one());
    if (name == "h") return Gate::h(one());
    if (name == "s") return Gate::s(one());
    if (name == "sdg") return Gate::sdg(one());
    if (name == "rz") return Gate::rz(one(), get_field<double>(j, "angle"));
    if (name == "cx" || name == "cnot") {
        if (qubits.size() != 2) {
            throw ConfigError("gate cx takes two qubits");
        }
        return Gate::cx(qubits[0], qubits[1]);
    }
    if (name == "rp") {
        try {
            return Gate::rp(PauliString::from_string(get_field<std::string>(j, "pauli")), qubits,
                            get_field<double>(j, "angle"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("gate rp: ") + e.what());
        }
    }
    throw ConfigError("unknown gate \"" + name + "\"");
}

Json layer_to_json(const GateLayer& layer) {
    Json gates = Json::array();
    for (const auto& g : layer.gates) {
        gates.push_back(gate_to_json(g));
    }
    return gates;
}

GateLayer layer_from_json(const Json& j) {
    if (!j.is_array()) {
        throw ConfigError("a layer is a list of gates");
    }
    GateLayer layer;
    for (const auto& g : j) {
        layer.gates.push_back(gate_from_json(g));
    }
    return layer;
}

Json model_to_json(const LayerNoiseModel& model) {
    Json theta = Json::array();
    for (std::size_t k = 0; k < model.generators().size(); ++k) {
        theta.push_back({{"generator", model.generators()[k].str()}, {"theta", model.theta()[k]}});
    }
    Json rates = Json::array();
    for (const auto& r : model.rates()) {
        Json values = Json::object();
        for (std::size_t a = 1; a < r.rates().size(); ++a) {
            values[PauliString::from_lex_index(r.support().size(), a).str()] = r.rates()[a];
        }
        rates.push_back({{"support", r.support().qubits}, {"rates", values}});
    }
    Json j{{"schema", kModelSchema}};
    j["graph"] = graph_to_json(model.graph());
    j["small_noise_limit"] = model.small_noise_limit();
    j["theta"] = theta;
    j["rates"] = rates;
    return j;
}

LayerNoiseModel model_from_json(const Json& j) {
    require_schema(j, kModelSchema);
    if (!j.contains("graph")) {
        throw ConfigError("model has no graph");
    }
    LayerNoiseModel model(graph_from_json(j["graph"]));
    try {
        if (j.contains("small_noise_limit")) {
            model.set_small_noise_limit(j["small_noise_limit"].get<double>());
        }
        if (j.contains("theta")) {
            for (const auto& t : j["theta"]) {
                auto g = PauliString::from_string(get_field<std::string>(t, "generator"));
                model.set_theta(g, get_field<double>(t, "theta"));
            }
        }
        if (j.contains("rates")) {
            for (const auto& r : j["rates"]) {
                LocalSupport support{qubit_list(r.at("support"))};
                std::vector<double> values(support.num_paulis() - 1, 0.0);
                for (const auto& [label, value] : r.at("rates").items()) {
                    auto p = PauliString::from_string(label);
                    if (p.num_qubits() != support.size() || p.is_identity()) {
                        throw ConfigError("rate label " + label + " does not fit its support");
                    }
                    values[p.lex_index() - 1] = value.get<double>();
                }
                model.set_rates(PauliRates(support, values));
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    return model;
}

Json schedule_to_json(const ExperimentSchedule& schedule) {
    Json preps = Json::array();
    for (const auto& p : schedule.preparations) {
        preps.push_back(to_string(p));
    }
    Json bases = Json::array();
    for (const auto& b : schedule.bases) {
        bases.push_back(basis_string(b));
    }
    Json j{{"schema", kScheduleSchema}};
    j["num_qubits"] = schedule.num_qubits;
    j["max_repetitions"] = schedule.max_repetitions;
    j["shots"] = schedule.shots;
    j["seed"] = schedule.seed;
    j["circuit_count"] = schedule.circuits.size();
    j["order"] = "preparation, repetitions, basis";
    j["preparations"] = preps;
    j["bases"] = bases;
    return j;
}

ExperimentSchedule schedule_from_json(const Json& j) {
    require_schema(j, kScheduleSchema);
    std::vector<ProductState> preps;
    std::vector<std::vector<Pauli1>> bases;
    try {
        for (const auto& p : j.at("preparations")) {
            preps.push_back(parse_product_state(p.get<std::string>()));
        }
        for (const auto& b : j.at("bases")) {
            bases.push_back(parse_basis(b.get<std::string>()));
        }
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid schedule: ") + e.what());
    }
    auto s = generate_schedule(preps, get_field<std::size_t>(j, "max_repetitions"), bases,
                               get_field<std::uint64_t>(j, "shots"), get_field<std::uint64_t>(j, "seed"));
    if (j.contains("circuit_count") && j["circuit_count"].get<std::size_t>() != s.circuits.size()) {
        throw ConfigError("schedule circuit count does not match its preparations and bases");
    }
    return s;
}

Json histogram_to_json(const Histogram& hist) {
    Json j = Json::object();
    for (const auto& [bits, count] : hist) {
        j[bits] = count;
    }
    return j;
}

Histogram histogram_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ConfigError("a histogram is an object of bitstring counts");
    }
    Histogram h;
    for (const auto& [bits, count] : j.items()) {
        if (!count.is_number_unsigned()) {
            throw ConfigError("histogram counts must be non-negative integers");
        }
        h[bits] = count.get<std::uint64_t>();
    }
    return h;
}

Json results_to_json(const ScheduleResults& results) {
    Json j{{"schema", kResultsSchema}, {"mode", to_string(results.mode)}};
    if (results.mode == ExecutionMode::kExact) {
        j["probabilities"] = results.probabilities;
    } else {
        Json hists = Json::array();
        for (const auto& h : results.histograms) {
            hists.push_back(histogram_to_json(h));
        }
        j["histograms"] = hists;
    }
    return j;
}

ScheduleResults results_from_json(const Json& j) {
    require_schema(j, kResultsSchema);
    ScheduleResults r;
    try {
        r.mode = parse_execution_mode(get_field<std::string>(j, "mode"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (r.mode == ExecutionMode::kExact) {
        r.probabilities = get_field<std::vector<std::vector<double>>>(j, "probabilities");
    } else {
        for (const auto& h : j.at("histograms")) {
            r.histograms.push_back(histogram_from_json(h));
        }
    }
    return r;
}

Json estimate_to_json(const ThetaEstimate& estimate) {
    Json rows = Json::array();
    for (std::size_t k = 0; k < estimate.generators.size(); ++k) {
        rows.push_back({{"generator", estimate.generators[k].str()},
                        {"theta", nullable(estimate.theta[k])},
                        {"standard_error", nullable(estimate.standard_error[k])}});
    }
    Json j{{"schema", kEstimateSchema}};
    j["rank"] = estimate.rank;
    j["observations"] = estimate.observations;
    j["residual_norm"] = nullable(estimate.residual_norm);
    j["generators"] = rows;
    return j;
}

ThetaEstimate estimate_from_json(const Json& j) {
    require_schema(j, kEstimateSchema);
    ThetaEstimate e;
    e.rank = get_field<std::size_t>(j, "rank");
    e.observations = get_field<std::size_t>(j, "observations");
    e.residual_norm = read_nullable(j.at("residual_norm"));
    for (const auto& row : j.at("generators")) {
        e.generators.push_back(PauliString::from_string(get_field<std::string>(row, "generator")));
        e.theta.push_back(read_nullable(row.at("theta")));
        e.standard_error.push_back(read_nullable(row.at("standard_error")));
    }
    return e;
}

Json diff_to_json(const ModelDiff& diff) {
    Json theta = Json::array();
    for (std::size_t k = 0; k < diff.generators.size(); ++k) {
        theta.push_back({{"generator", diff.generators[k].str()}, {"delta", diff.theta_delta[k]}});
    }
    Json rates = Json::array();
    for (std::size_t s = 0; s < diff.supports.size(); ++s) {
        Json values = Json::object();
        for (std::size_t a = 0; a < diff.rate_delta[s].size(); ++a) {
            values[PauliString::from_lex_index(diff.supports[s].size(), a + 1).str()] = diff.rate_delta[s][a];
        }
        rates.push_back({{"support", diff.supports[s].qubits}, {"delta", values}});
    }
    Json j{{"schema", kDiffSchema}};
    j["summary"] = {{"max_abs_single_qubit_theta", diff.max_single_qubit_theta},
                    {"max_abs_two_qubit_theta", diff.max_two_qubit_theta},
                    {"mean_abs_theta", diff.mean_abs_theta},
                    {"max_abs_rate", diff.max_rate},
                    {"mean_abs_rate", diff.mean_abs_rate}};
    j["theta"] = theta;
    j["rates"] = rates;
    return j;
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw std::runtime_error("could not format a double");
    }
    return std::string(buf, end);
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    rows_.push_back(std::move(header));
}

CsvTable& CsvTable::row() {
    if (rows_.size() > 1 && rows_.back().size() != columns_) {
        throw std::logic_error("incomplete CSV row");
    }
    rows_.emplace_back();
    return *this;
}

CsvTable& CsvTable::add(std::string_view text) {
    if (rows_.size() < 2 || rows_.back().size() >= columns_) {
        throw std::logic_error("CSV cell outside a row");
    }
    std::string cell(text);
    if (cell.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : cell) {
            quoted += c;
            if (c == '"') {
                quoted += '"';
            }
        }
        cell = quoted + "\"";
    }
    rows_.back().push_back(std::move(cell));
    return *this;
}

CsvTable& CsvTable::add(double value) {
    return add(format_double(value));
}

CsvTable& CsvTable::add(std::size_t value) {
    return add(std::to_string(value));
}

std::string CsvTable::str() const {
    std::string out;
    for (const auto& r : rows_) {
        if (r.size() != columns_) {
            throw std::logic_error("incomplete CSV row");
        }
        for (std::size_t c = 0; c < r.size(); ++c) {
            out += c ? "," : "";
            out += r[c];
        }
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

std::string dump_json(const Json& j) {
    return j.dump(2) + "\n";
}

}  // namespace rotpauli
