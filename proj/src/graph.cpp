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

#include "rotpauli/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rotpauli {

ConnectivityGraph::ConnectivityGraph(std::size_t num_qubits, std::vector<Edge> edges)
    : num_qubits_(num_qubits) {
    if (num_qubits == 0) {
        throw std::invalid_argument("connectivity graph needs at least one qubit");
    }
    for (auto& [a, b] : edges) {
        if (a == b) {
            throw std::invalid_argument("self-loop on qubit " + std::to_string(a));
        }
        if (a >= num_qubits || b >= num_qubits) {
            throw std::invalid_argument("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                        ") out of range");
        }
        if (a > b) {
            std::swap(a, b);
        }
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
        throw std::invalid_argument("duplicate edge in connectivity graph");
    }
    edges_ = std::move(edges);
}

ConnectivityGraph ConnectivityGraph::line(std::size_t num_qubits) {
    std::vector<Edge> edges;
    for (std::size_t q = 0; q + 1 < num_qubits; ++q) {
        edges.emplace_back(q, q + 1);
    }
    return ConnectivityGraph(num_qubits, std::move(edges));
}

ConnectivityGraph ConnectivityGraph::seven_qubit_tree() {
    return ConnectivityGraph(7, {{0, 1}, {1, 2}, {1, 3}, {3, 5}, {4, 5}, {5, 6}});
}

bool ConnectivityGraph::has_edge(std::size_t a, std::size_t b) const {
    if (a > b) {
        std::swap(a, b);
    }
    return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
}

std::vector<std::size_t> ConnectivityGraph::neighbors(std::size_t q) const {
    std::vector<std::size_t> result;
    for (const auto& [a, b] : edges_) {
        if (a == q) {
            result.push_back(b);
        } else if (b == q) {
            result.push_back(a);
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

}  // namespace rotpauli
