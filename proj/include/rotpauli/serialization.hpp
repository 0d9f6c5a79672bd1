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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rotpauli/characterization.hpp"
#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/noise_model.hpp"

namespace rotpauli {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kConfigSchema = "rotpauli.config/1";
inline constexpr std::string_view kModelSchema = "rotpauli.model/1";
inline constexpr std::string_view kScheduleSchema = "rotpauli.schedule/1";
inline constexpr std::string_view kResultsSchema = "rotpauli.results/1";
inline constexpr std::string_view kEstimateSchema = "rotpauli.estimate/1";
inline constexpr std::string_view kDiffSchema = "rotpauli.diff/1";
inline constexpr std::string_view kRunSchema = "rotpauli.run/1";
inline constexpr std::string_view kDerivedSchema = "rotpauli.derived/1";

/// Throws ConfigError unless doc["schema"] equals `schema`.
void require_schema(const Json& doc, std::string_view schema);

Json graph_to_json(const ConnectivityGraph& graph);
ConnectivityGraph graph_from_json(const Json& j);

/// {"gate": "cx", "qubits": [0, 1]}; rz and rp carry "angle", rp carries "pauli".
Json gate_to_json(const Gate& gate);
Gate gate_from_json(const Json& j);
Json layer_to_json(const GateLayer& layer);
GateLayer layer_from_json(const Json& j);

Json model_to_json(const LayerNoiseModel& model);
LayerNoiseModel model_from_json(const Json& j);

Json schedule_to_json(const ExperimentSchedule& schedule);
ExperimentSchedule schedule_from_json(const Json& j);

Json results_to_json(const ScheduleResults& results);
ScheduleResults results_from_json(const Json& j);

Json histogram_to_json(const Histogram& hist);
Histogram histogram_from_json(const Json& j);

/// Non-finite values (unestimated generators) are written as null.
Json estimate_to_json(const ThetaEstimate& estimate);
ThetaEstimate estimate_from_json(const Json& j);

Json diff_to_json(const ModelDiff& diff);

/// Shortest text that reads back to the same double.
std::string format_double(double value);

/// Comma separated table with a fixed column order.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header);
    CsvTable& row();
    CsvTable& add(std::string_view text);
    CsvTable& add(double value);
    CsvTable& add(std::size_t value);
    std::string str() const;

  private:
    std::size_t columns_;
    std::vector<std::vector<std::string>> rows_;
};

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed and replaces the file.
void write_text_file(const std::filesystem::path& path, std::string_view text);
/// Two-space indented dump with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace rotpauli
