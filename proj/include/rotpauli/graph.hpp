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

#include <cstddef>
#include <utility>
#include <vector>

namespace rotpauli {

using Edge = std::pair<std::size_t, std::size_t>;

/// Qubit connectivity of a device. Edges are stored with first < second,
/// sorted and unique.
class ConnectivityGraph {
  public:
    ConnectivityGraph() = default;
    ConnectivityGraph(std::size_t num_qubits, std::vector<Edge> edges);

    /// A path 0-1-...-(n-1).
    static ConnectivityGraph line(std::size_t num_qubits);
    /// The 7-qubit heavy-hex fragment used for the layer characterization
    /// example: 0-1, 1-2, 1-3, 3-5, 4-5, 5-6.
    static ConnectivityGraph seven_qubit_tree();

    std::size_t num_qubits() const { return num_qubits_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool has_edge(std::size_t a, std::size_t b) const;
    std::vector<std::size_t> neighbors(std::size_t q) const;

    friend bool operator==(const ConnectivityGraph&, const ConnectivityGraph&) = default;

  private:
    std::size_t num_qubits_ = 0;
    std::vector<Edge> edges_;
};

}  // namespace rotpauli
