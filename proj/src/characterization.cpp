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

#include "rotpauli/characterization.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rotpauli/errors.hpp"
#include "rotpauli/parallel.hpp"
#include "rotpauli/random.hpp"

namespace rotpauli {

namespace {

bool contains(const std::vector<std::size_t>& set, std::size_t q) {
    return std::find(set.begin(), set.end(), q) != set.end();
}

bool subset_of(const std::vector<std::size_t>& inner, const std::vector<std::size_t>& outer) {
    for (std::size_t q : inner) {
        if (!contains(outer, q)) {
            return false;
        }
    }
    return true;
}

void sort_unique(std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Row rank over GF(p) of small integer matrices.
std::size_t rank_mod(std::vector<std::vector<int>> rows, int p) {
    std::size_t rank = 0;
    std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][c] % p == 0) {
            ++pivot;
        }
        if (pivot == rows.size()) {
            continue;
        }
        std::swap(rows[pivot], rows[rank]);
        int inv = 1;
        while ((rows[rank][c] * inv) % p != 1) {
            ++inv;
        }
        for (auto& x : rows[rank]) {
            x = (x * inv) % p;
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank) {
                continue;
            }
            int f = rows[r][c] % p;
            if (f == 0) {
                continue;
            }
            for (std::size_t cc = 0; cc < cols; ++cc) {
                rows[r][cc] = ((rows[r][cc] - f * rows[rank][cc]) % p + p) % p;
            }
        }
        ++rank;
    }
    return rank;
}

bool full_rank(const std::vector<std::vector<int>>& vectors, const std::vector<std::size_t>& qubits,
               std::span<const int> moduli) {
    std::vector<std::vector<int>> rows;
    for (std::size_t q : qubits) {
        rows.push_back(vectors[q]);
    }
    for (int p : moduli) {
        if (rank_mod(rows, p) != rows.size()) {
            return false;
        }
    }
    return true;
}

std::vector<std::vector<int>> enumerate_vectors(std::size_t dim, int base) {
    std::vector<std::vector<int>> out;
    // Unit vectors first so small designs read naturally.
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<int> e(dim, 0);
        e[d] = 1;
        out.push_back(e);
    }
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) {
        total *= static_cast<std::size_t>(base);
    }
    for (std::size_t idx = 1; idx < total; ++idx) {
        std::vector<int> v(dim);
        std::size_t rest = idx;
        for (std::size_t d = dim; d-- > 0;) {
            v[d] = static_cast<int>(rest % static_cast<std::size_t>(base));
            rest /= static_cast<std::size_t>(base);
        }
        if (std::count(v.begin(), v.end(), 0) + 1 == static_cast<long>(dim) &&
            std::count(v.begin(), v.end(), 1) == 1) {
            continue;
        }
        out.push_back(v);
    }
    return out;
}

// Assigns a vector to every active qubit so that each constraint set has full
// rank modulo every entry of `moduli`. Returns false if impossible.
bool assign_vectors(std::size_t num_qubits, const std::vector<bool>& active,
                    const std::vector<std::vector<std::size_t>>& constraints,
                    const std::vector<std::vector<int>>& candidates, std::span<const int> moduli,
                    std::vector<std::vector<int>>& out) {
    std::vector<std::vector<const std::vector<std::size_t>*>> checks(num_qubits);
    for (const auto& c : constraints) {
        checks[*std::max_element(c.begin(), c.end())].push_back(&c);
    }
    out.assign(num_qubits, std::vector<int>(candidates.empty() ? 0 : candidates[0].size(), 0));
    std::size_t steps = 0;
    std::function<bool(std::size_t)> place = [&](std::size_t q) -> bool {
        if (q == num_qubits) {
            return true;
        }
        if (!active[q]) {
            return place(q + 1);
        }
        for (const auto& cand : candidates) {
            if (++steps > 2000000) {
                return false;
            }
            out[q] = cand;
            bool ok = true;
            for (const auto* c : checks[q]) {
                if (!full_rank(out, *c, moduli)) {
                    ok = false;
                    break;
                }
            }
            if (ok && place(q + 1)) {
                return true;
            }
        }
        return false;
    };
    return place(0);
}

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        r *= base;
    }
    return r;
}

std::vector<int> digits(std::size_t index, std::size_t dim, int base) {
    std::vector<int> s(dim);
    for (std::size_t d = dim; d-- > 0;) {
        s[d] = static_cast<int>(index % static_cast<std::size_t>(base));
        index /= static_cast<std::size_t>(base);
    }
    return s;
}

int dot_mod(const std::vector<int>& a, const std::vector<int>& b, int p) {
    int acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc % p;
}

std::size_t max_closure(const std::vector<Subsystem>& subsystems) {
    std::size_t m = 1;
    for (const auto& s : subsystems) {
        m = std::max(m, s.closure.size());
    }
    return m;
}

// Per-qubit inverse of the transposed confusion matrix.
std::vector<Eigen::Matrix2d> inverse_confusions(const ReadoutConfusion& conf) {
    std::vector<Eigen::Matrix2d> out;
    for (std::size_t q = 0; q < conf.num_qubits(); ++q) {
        Eigen::Matrix2d mt = conf.qubit(q).transpose();
        if (std::abs(mt.determinant()) < 1e-12) {
            throw NumericalError("readout confusion of qubit " + std::to_string(q) + " is not invertible");
        }
        out.push_back(mt.inverse());
    }
    return out;
}

// Applies a 2x2 map on bit `bit` (of `num_bits`, bit 0 most significant) of a
// distribution.
void apply_bit_map(std::vector<double>& dist, std::size_t num_bits, std::size_t bit,
                   const Eigen::Matrix2d& m) {
    std::size_t mask = std::size_t{1} << (num_bits - 1 - bit);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (i & mask) {
            continue;
        }
        double a = dist[i];
        double b = dist[i | mask];
        dist[i] = m(0, 0) * a + m(0, 1) * b;
        dist[i | mask] = m(1, 0) * a + m(1, 1) * b;
    }
}

}  // namespace

std::vector<Subsystem> build_subsystems(const ConnectivityGraph& graph, const GateLayer& layer) {
    layer.validate(graph.num_qubits());
    for (const Gate& g : layer.gates) {
        if (g.qubits.size() == 2 && !graph.has_edge(g.qubits[0], g.qubits[1])) {
            throw std::invalid_argument("two-qubit gate " + g.name() + " is not on a graph edge");
        }
    }
    auto generators = local_generators(graph);
    auto closure_of = [&](std::vector<std::size_t> home) {
        std::vector<std::size_t> closure = home;
        for (const Gate& g : layer.gates) {
            bool touches = false;
            for (std::size_t q : g.qubits) {
                touches = touches || contains(home, q);
            }
            if (touches) {
                closure.insert(closure.end(), g.qubits.begin(), g.qubits.end());
            }
        }
        sort_unique(closure);
        if (closure.size() > kMaxPtmQubits) {
            throw std::invalid_argument("subsystem closure exceeds " + std::to_string(kMaxPtmQubits) +
                                        " qubits");
        }
        return closure;
    };
    auto make = [&](std::vector<std::size_t> home) {
        Subsystem s;
        s.closure = closure_of(home);
        s.home = std::move(home);
        for (std::size_t k = 0; k < generators.size(); ++k) {
            if (subset_of(generators[k].support(), s.closure)) {
                s.generators.push_back(k);
            }
        }
        return s;
    };
    std::vector<Subsystem> out;
    for (const auto& [a, b] : graph.edges()) {
        out.push_back(make({a, b}));
    }
    for (std::size_t q = 0; q < graph.num_qubits(); ++q) {
        if (graph.neighbors(q).empty()) {
            out.push_back(make({q}));
        }
    }
    return out;
}

std::vector<ProductState> PreparationPlan::local_states(std::span<const std::size_t> qubits) const {
    std::vector<ProductState> out;
    out.reserve(preparations.size());
    for (const auto& p : preparations) {
        ProductState s;
        for (std::size_t q : qubits) {
            s.push_back(p.at(q));
        }
        out.push_back(std::move(s));
    }
    return out;
}

PreparationPlan build_preparation_plan(const ConnectivityGraph& graph, const GateLayer& layer,
                                       const PlanOptions& options) {
    std::size_t n = graph.num_qubits();
    PreparationPlan plan;
    plan.num_qubits = n;
    plan.subsystems = build_subsystems(graph, layer);

    std::vector<bool> active(n, true);
    for (std::size_t q : options.frozen_qubits) {
        if (q >= n) {
            throw std::invalid_argument("frozen qubit out of range");
        }
        active[q] = false;
    }
    std::size_t num_active = static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
    if (num_active == 0) {
        plan.preparations.push_back(ProductState(n, StateLabel::Zero));
        plan.qubit_vectors.assign(n, {});
        return plan;
    }
    std::size_t k = std::min(num_active, std::max<std::size_t>(3, max_closure(plan.subsystems)));
    plan.design_dimension = k;

    auto all_active = [&](const std::vector<std::size_t>& set) {
        for (std::size_t q : set) {
            if (!active[q]) {
                return false;
            }
        }
        return true;
    };
    std::vector<std::vector<std::size_t>> base;
    for (std::size_t q = 0; q < n; ++q) {
        if (active[q]) {
            base.push_back({q});
        }
    }
    for (const auto& [a, b] : graph.edges()) {
        if (all_active({a, b})) {
            base.push_back({a, b});
        }
    }
    std::vector<std::vector<std::size_t>> with_closures = base;
    for (const auto& s : plan.subsystems) {
        if (all_active(s.closure) && s.closure.size() <= k) {
            with_closures.push_back(s.closure);
        }
    }
    std::vector<std::vector<std::size_t>> with_environment = with_closures;
    if (k >= 3) {
        for (const auto& [a, b] : graph.edges()) {
            std::vector<std::size_t> around = graph.neighbors(a);
            auto nb = graph.neighbors(b);
            around.insert(around.end(), nb.begin(), nb.end());
            sort_unique(around);
            for (std::size_t c : around) {
                std::vector<std::size_t> triple{a, b, c};
                sort_unique(triple);
                if (triple.size() == 3 && all_active(triple)) {
                    with_environment.push_back(triple);
                }
            }
        }
    }
    const int moduli[2] = {2, 3};
    auto candidates = enumerate_vectors(k, 6);
    std::vector<std::vector<int>> vectors;
    if (assign_vectors(n, active, with_environment, candidates, moduli, vectors)) {
        plan.environment_balanced = true;
    } else if (!assign_vectors(n, active, with_closures, candidates, moduli, vectors) &&
               !assign_vectors(n, active, base, candidates, moduli, vectors)) {
        throw std::invalid_argument("no balanced preparation design exists for this graph");
    }
    plan.qubit_vectors = vectors;

    std::vector<int> offsets(n, 0);
    if (options.random_offsets) {
        std::mt19937_64 rng(options.seed);
        std::uniform_int_distribution<int> six(0, 5);
        for (auto& o : offsets) {
            o = six(rng);
        }
    }
    std::size_t count = ipow(6, k);
    plan.preparations.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        auto s = digits(idx, k, 6);
        ProductState state(n, StateLabel::Zero);
        for (std::size_t q = 0; q < n; ++q) {
            if (active[q]) {
                state[q] = kAllStateLabels[(dot_mod(vectors[q], s, 6) + offsets[q]) % 6];
            }
        }
        plan.preparations.push_back(std::move(state));
    }
    return plan;
}

std::vector<std::vector<Pauli1>> build_measurement_bases(const ConnectivityGraph& graph,
                                                         const std::vector<Subsystem>& subsystems) {
    std::size_t n = graph.num_qubits();
    std::size_t k = std::min(n, max_closure(subsystems));
    std::vector<std::vector<std::size_t>> constraints;
    for (std::size_t q = 0; q < n; ++q) {
        constraints.push_back({q});
    }
    for (const auto& [a, b] : graph.edges()) {
        constraints.push_back({a, b});
    }
    for (const auto& s : subsystems) {
        constraints.push_back(s.closure);
    }
    const int moduli[1] = {3};
    std::vector<std::vector<int>> vectors;
    if (!assign_vectors(n, std::vector<bool>(n, true), constraints, enumerate_vectors(k, 3), moduli,
                        vectors)) {
        throw std::invalid_argument("no balanced measurement design exists for this graph");
    }
    static constexpr Pauli1 axes[3] = {Pauli1::X, Pauli1::Y, Pauli1::Z};
    std::vector<std::vector<Pauli1>> bases;
    for (std::size_t idx = 0; idx < ipow(3, k); ++idx) {
        auto t = digits(idx, k, 3);
        std::vector<Pauli1> basis(n);
        for (std::size_t q = 0; q < n; ++q) {
            basis[q] = axes[dot_mod(vectors[q], t, 3)];
        }
        bases.push_back(std::move(basis));
    }
    return bases;
}

std::size_t ExperimentSchedule::index_of(std::size_t preparation, std::size_t repetitions,
                                         std::size_t basis) const {
    if (preparation >= preparations.size() || repetitions > max_repetitions || basis >= bases.size()) {
        throw std::invalid_argument("circuit coordinates out of range");
    }
    return (preparation * (max_repetitions + 1) + repetitions) * bases.size() + basis;
}

std::uint64_t ExperimentSchedule::circuit_seed(std::size_t id) const {
    return derive_seed(seed, id);
}

std::string ExperimentSchedule::describe(const CircuitSpec& c) const {
    std::string basis;
    for (Pauli1 p : bases.at(c.basis)) {
        basis.push_back(pauli1_char(p));
    }
    return to_string(preparations.at(c.preparation)) + "|" + std::to_string(c.repetitions) + "|" + basis;
}

ExperimentSchedule generate_schedule(const std::vector<ProductState>& preparations,
                                     std::size_t max_repetitions,
                                     const std::vector<std::vector<Pauli1>>& bases, std::uint64_t shots,
                                     std::uint64_t seed) {
    if (preparations.empty() || bases.empty()) {
        throw std::invalid_argument("schedule needs at least one preparation and one basis");
    }
    if (shots == 0) {
        throw std::invalid_argument("shots must be at least 1");
    }
    ExperimentSchedule s;
    s.num_qubits = preparations[0].size();
    for (const auto& p : preparations) {
        if (p.size() != s.num_qubits) {
            throw std::invalid_argument("preparations have different lengths");
        }
    }
    for (const auto& b : bases) {
        if (b.size() != s.num_qubits) {
            throw std::invalid_argument("basis length differs from the register size");
        }
    }
    s.preparations = preparations;
    s.bases = bases;
    s.max_repetitions = max_repetitions;
    s.shots = shots;
    s.seed = seed;
    s.circuits.reserve(preparations.size() * (max_repetitions + 1) * bases.size());
    for (std::size_t p = 0; p < preparations.size(); ++p) {
        for (std::size_t m = 0; m <= max_repetitions; ++m) {
            for (std::size_t b = 0; b < bases.size(); ++b) {
                s.circuits.push_back({s.circuits.size(), p, m, b});
            }
        }
    }
    return s;
}

ExperimentSchedule generate_schedule(const PreparationPlan& plan, std::size_t max_repetitions,
                                     const std::vector<std::vector<Pauli1>>& bases, std::uint64_t shots,
                                     std::uint64_t seed) {
    return generate_schedule(plan.preparations, max_repetitions, bases, shots, seed);
}

std::string to_string(ExecutionMode mode) {
    return mode == ExecutionMode::kExact ? "exact" : "sampled";
}

ExecutionMode parse_execution_mode(std::string_view text) {
    if (text == "exact") {
        return ExecutionMode::kExact;
    }
    if (text == "sampled") {
        return ExecutionMode::kSampled;
    }
    throw std::invalid_argument("unknown execution mode '" + std::string(text) +
                                "' (expected exact or sampled)");
}

ScheduleResults run_schedule(const ExperimentSchedule& schedule, const Channel& repetition,
                             const ExecutionOptions& options) {
    std::size_t n = schedule.num_qubits;
    bool use_readout = options.readout.num_qubits() > 0 && !options.readout.is_identity();
    if (options.readout.num_qubits() > 0 && options.readout.num_qubits() != n) {
        throw std::invalid_argument("readout confusion size differs from the register size");
    }
    ScheduleResults results;
    results.mode = options.mode;
    if (options.mode == ExecutionMode::kExact) {
        results.probabilities.resize(schedule.circuits.size());
    } else {
        results.histograms.resize(schedule.circuits.size());
    }
    parallel_for(schedule.preparations.size(), options.threads, [&](std::size_t p) {
        DensityMatrix rho = prepare_product_state(schedule.preparations[p]);
        for (std::size_t m = 0; m <= schedule.max_repetitions; ++m) {
            if (m > 0) {
                repetition(rho);
            }
            for (std::size_t b = 0; b < schedule.bases.size(); ++b) {
                std::size_t id = schedule.index_of(p, m, b);
                auto probs = basis_probabilities(rho, schedule.bases[b]);
                if (options.mode == ExecutionMode::kExact) {
                    if (use_readout) {
                        for (std::size_t q = 0; q < n; ++q) {
                            apply_bit_map(probs, n, q, options.readout.qubit(q).transpose());
                        }
                    }
                    results.probabilities[id] = std::move(probs);
                } else {
                    std::uint64_t seed = schedule.circuit_seed(id);
                    Histogram h = sample_probabilities(probs, n, schedule.shots, seed);
                    if (use_readout) {
                        h = apply_readout_confusion(h, options.readout, derive_seed(seed, 1));
                    }
                    results.histograms[id] = std::move(h);
                }
            }
        }
    });
    return results;
}

std::vector<SubsystemVectors> estimate_pauli_vectors(const ExperimentSchedule& schedule,
                                                     const ScheduleResults& results,
                                                     const std::vector<Subsystem>& subsystems,
                                                     const ReadoutConfusion* mitigation) {
    std::size_t n = schedule.num_qubits;
    std::size_t total = schedule.circuits.size();
    bool exact = results.mode == ExecutionMode::kExact;
    if ((exact ? results.probabilities.size() : results.histograms.size()) != total) {
        throw std::invalid_argument("results do not cover every circuit of the schedule");
    }
    std::vector<Eigen::Matrix2d> inverse;
    if (mitigation != nullptr && mitigation->num_qubits() > 0 && !mitigation->is_identity()) {
        if (mitigation->num_qubits() != n) {
            throw std::invalid_argument("mitigation confusion size differs from the register size");
        }
        inverse = inverse_confusions(*mitigation);
    }

    std::vector<SubsystemVectors> out;
    for (const auto& sub : subsystems) {
        const auto& qubits = sub.closure;
        std::size_t k = qubits.size();
        std::size_t local_dim = std::size_t{1} << k;
        std::size_t num_paulis = std::size_t{1} << (2 * k);
        std::size_t reps = schedule.max_repetitions + 1;

        // Pauli on the closure measured by each basis for each support subset.
        std::vector<std::vector<std::size_t>> basis_pauli(schedule.bases.size(),
                                                          std::vector<std::size_t>(local_dim));
        for (std::size_t b = 0; b < schedule.bases.size(); ++b) {
            for (std::size_t subset = 0; subset < local_dim; ++subset) {
                PauliString p(k);
                for (std::size_t t = 0; t < k; ++t) {
                    if ((subset >> (k - 1 - t)) & 1) {
                        p.set(t, schedule.bases[b][qubits[t]]);
                    }
                }
                basis_pauli[b][subset] = p.lex_index();
            }
        }
        std::vector<std::size_t> full_to_local(std::size_t{1} << n, 0);
        for (std::size_t i = 0; i < full_to_local.size(); ++i) {
            std::size_t local = 0;
            for (std::size_t t = 0; t < k; ++t) {
                local = (local << 1) | ((i >> (n - 1 - qubits[t])) & 1);
            }
            full_to_local[i] = local;
        }

        SubsystemVectors data;
        data.qubits = qubits;
        data.vectors.resize(schedule.preparations.size());
        std::vector<double> sums(num_paulis);
        std::vector<std::size_t> counts(num_paulis);
        std::vector<double> marginal(local_dim);
        for (std::size_t p = 0; p < schedule.preparations.size(); ++p) {
            for (std::size_t m = 0; m < reps; ++m) {
                std::fill(sums.begin(), sums.end(), 0.0);
                std::fill(counts.begin(), counts.end(), 0);
                for (std::size_t b = 0; b < schedule.bases.size(); ++b) {
                    std::size_t id = schedule.index_of(p, m, b);
                    std::fill(marginal.begin(), marginal.end(), 0.0);
                    if (exact) {
                        const auto& probs = results.probabilities[id];
                        if (probs.size() != full_to_local.size()) {
                            throw std::invalid_argument("missing result for circuit " + std::to_string(id));
                        }
                        for (std::size_t i = 0; i < probs.size(); ++i) {
                            marginal[full_to_local[i]] += probs[i];
                        }
                    } else {
                        const auto& hist = results.histograms[id];
                        std::uint64_t shots = total_shots(hist);
                        if (shots == 0) {
                            throw std::invalid_argument("missing result for circuit " + std::to_string(id));
                        }
                        for (const auto& [bits, count] : hist) {
                            if (bits.size() != n) {
                                throw std::invalid_argument("bitstring length mismatch in circuit " +
                                                            std::to_string(id));
                            }
                            std::size_t local = 0;
                            for (std::size_t t = 0; t < k; ++t) {
                                local = (local << 1) | (bits[qubits[t]] == '1' ? 1u : 0u);
                            }
                            marginal[local] += static_cast<double>(count) / static_cast<double>(shots);
                        }
                    }
                    if (!inverse.empty()) {
                        for (std::size_t t = 0; t < k; ++t) {
                            apply_bit_map(marginal, k, t, inverse[qubits[t]]);
                        }
                    }
                    for (std::size_t subset = 0; subset < local_dim; ++subset) {
                        double e = 0.0;
                        for (std::size_t o = 0; o < local_dim; ++o) {
                            e += (std::popcount(o & subset) & 1) ? -marginal[o] : marginal[o];
                        }
                        sums[basis_pauli[b][subset]] += e;
                        counts[basis_pauli[b][subset]] += 1;
                    }
                }
                Eigen::VectorXd v(num_paulis);
                double scale = 1.0 / static_cast<double>(local_dim);
                for (std::size_t i = 0; i < num_paulis; ++i) {
                    if (counts[i] == 0) {
                        throw std::invalid_argument("bases never measure " +
                                                    PauliString::from_lex_index(k, i).str() +
                                                    " on the subsystem");
                    }
                    v[static_cast<Eigen::Index>(i)] = scale * sums[i] / static_cast<double>(counts[i]);
                }
                v[0] = scale;
                data.vectors[p].emplace_back(k, std::move(v));
            }
        }
        out.push_back(std::move(data));
    }
    return out;
}

PauliVector unwind_ideal(const PauliVector& v, const TransferMatrix& ideal, std::size_t m) {
    if (v.num_qubits() != ideal.num_qubits()) {
        throw std::invalid_argument("vector and layer sizes differ");
    }
    // The ideal layer is unitary, so its PTM is orthogonal.
    Eigen::VectorXd out = v.components();
    for (std::size_t j = 0; j < m; ++j) {
        out = ideal.matrix().transpose() * out;
    }
    return PauliVector(v.num_qubits(), std::move(out));
}

SubsystemVectors unwind_ideal(const SubsystemVectors& data, const GateLayer& layer) {
    if (!layer_separable_on(layer, data.qubits)) {
        throw std::invalid_argument("layer is not separable on the subsystem");
    }
    TransferMatrix ideal = layer_ptm(layer, data.qubits);
    SubsystemVectors out;
    out.qubits = data.qubits;
    out.vectors.resize(data.vectors.size());
    for (std::size_t p = 0; p < data.vectors.size(); ++p) {
        for (std::size_t m = 0; m < data.vectors[p].size(); ++m) {
            out.vectors[p].push_back(unwind_ideal(data.vectors[p][m], ideal, m));
        }
    }
    return out;
}

EstimationProblem assemble_problem(const SubsystemVectors& data, std::span<const PauliString> generators,
                                   const TransferMatrix& ideal, const ProblemOptions& options) {
    if (data.vectors.empty() || data.vectors[0].size() < 2) {
        throw std::invalid_argument("assemble_problem needs at least one preparation with m >= 1");
    }
    if (generators.empty()) {
        throw std::invalid_argument("assemble_problem needs at least one generator");
    }
    std::size_t k = data.qubits.size();
    std::size_t dim = std::size_t{1} << (2 * k);
    std::size_t reps = data.vectors[0].size() - 1;
    std::size_t rows_per = dim - 1;
    std::size_t cols = generators.size();
    if (ideal.num_qubits() != k) {
        throw std::invalid_argument("ideal layer PTM size differs from the subsystem");
    }

    std::vector<Eigen::MatrixXd> c(cols);
    for (std::size_t g = 0; g < cols; ++g) {
        PauliString local = generators[g].restrict_to(data.qubits);
        if (local.weight() != generators[g].weight()) {
            throw std::invalid_argument("generator " + generators[g].str() + " leaves the subsystem");
        }
        c[g] = generator_matrix(local);
    }
    // Frame-rotated generator matrices T^-j C T^j, j = 1..R.
    std::vector<std::vector<Eigen::MatrixXd>> frame(reps + 1, std::vector<Eigen::MatrixXd>(cols));
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(dim, dim);
    for (std::size_t j = 1; j <= reps; ++j) {
        power = ideal.matrix() * power;
        for (std::size_t g = 0; g < cols; ++g) {
            frame[j][g] = power.transpose() * c[g] * power;
        }
    }

    EstimationProblem problem;
    problem.generators.assign(generators.begin(), generators.end());
    std::size_t observations = data.vectors.size() * reps;
    problem.design.resize(static_cast<Eigen::Index>(observations * rows_per),
                          static_cast<Eigen::Index>(cols));
    problem.residual.resize(static_cast<Eigen::Index>(observations * rows_per));
    std::size_t row = 0;
    Eigen::VectorXd point(dim), y(dim), col(dim);
    for (const auto& series : data.vectors) {
        if (series.size() != reps + 1) {
            throw std::invalid_argument("every preparation needs the same repetition counts");
        }
        for (std::size_t j = 1; j <= reps; ++j) {
            const Eigen::VectorXd& now = series[j].components();
            if (options.pairing == Pairing::kConsecutive) {
                const Eigen::VectorXd& before = series[j - 1].components();
                y = now - before;
                point =
                    options.design == DesignPoint::kMidpoint ? Eigen::VectorXd(0.5 * (before + now)) : before;
                for (std::size_t g = 0; g < cols; ++g) {
                    col = frame[j][g] * point;
                    problem.design.block(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g),
                                         static_cast<Eigen::Index>(rows_per), 1) = col.tail(rows_per);
                }
            } else {
                const Eigen::VectorXd& start = series[0].components();
                double inv = 1.0 / static_cast<double>(j);
                y = inv * (now - start);
                point =
                    options.design == DesignPoint::kMidpoint ? Eigen::VectorXd(0.5 * (start + now)) : start;
                for (std::size_t g = 0; g < cols; ++g) {
                    col.setZero();
                    for (std::size_t s = 1; s <= j; ++s) {
                        col += frame[s][g] * point;
                    }
                    col *= inv;
                    problem.design.block(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g),
                                         static_cast<Eigen::Index>(rows_per), 1) = col.tail(rows_per);
                }
            }
            problem.residual.segment(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(rows_per)) =
                y.tail(rows_per);
            row += rows_per;
        }
    }
    problem.observations = observations;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.design);
    qr.setThreshold(1e-8);
    problem.rank = static_cast<std::size_t>(qr.rank());
    return problem;
}

double ThetaEstimate::max_abs() const {
    double m = 0.0;
    for (double t : theta) {
        m = std::max(m, std::abs(t));
    }
    return m;
}

ThetaEstimate solve(const EstimationProblem& problem) {
    const Eigen::MatrixXd& b = problem.design;
    std::size_t cols = static_cast<std::size_t>(b.cols());
    if (cols == 0 || b.rows() == 0 || b.rows() != problem.residual.size()) {
        throw std::invalid_argument("malformed estimation problem");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
    qr.setThreshold(1e-8);
    std::size_t rank = static_cast<std::size_t>(qr.rank());
    if (rank < cols) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
        Eigen::VectorXd null = svd.matrixV().col(static_cast<Eigen::Index>(cols - 1));
        double top = null.cwiseAbs().maxCoeff();
        std::ostringstream msg;
        msg << "design matrix has rank " << rank << " < " << cols << "; unidentifiable combination:";
        for (std::size_t g = 0; g < cols; ++g) {
            double w = null[static_cast<Eigen::Index>(g)] / top;
            if (std::abs(w) > 1e-3) {
                msg << ' ' << (w < 0 ? '-' : '+') << ' ' << std::abs(w) << "*theta["
                    << problem.generators[g].str() << ']';
            }
        }
        throw NumericalError(msg.str());
    }
    Eigen::VectorXd theta = qr.solve(problem.residual);
    Eigen::VectorXd r = problem.residual - b * theta;

    ThetaEstimate est;
    est.generators = problem.generators;
    est.theta.assign(theta.data(), theta.data() + theta.size());
    est.residual_norm = r.norm();
    est.rank = rank;
    est.observations = problem.observations;
    double dof = static_cast<double>(b.rows()) - static_cast<double>(cols);
    double sigma2 = dof > 0 ? r.squaredNorm() / dof : 0.0;
    Eigen::MatrixXd upper =
        qr.matrixR()
            .topLeftCorner(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols))
            .triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = upper.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols)));
    est.standard_error.assign(cols, 0.0);
    const auto& perm = qr.colsPermutation().indices();
    for (std::size_t i = 0; i < cols; ++i) {
        double var = rinv.row(static_cast<Eigen::Index>(i)).squaredNorm() * sigma2;
        est.standard_error[static_cast<std::size_t>(perm[static_cast<Eigen::Index>(i)])] = std::sqrt(var);
    }
    return est;
}

LayerExperiment make_experiment(const NoisyLayer& layer) {
    return {layer.noise.graph(), layer.ideal, instantiate(layer)};
}

LayerCharacterization characterize_results(const ConnectivityGraph& graph, const GateLayer& layer,
                                           const PreparationPlan& plan, const ExperimentSchedule& schedule,
                                           const ScheduleResults& results,
                                           const CharacterizationOptions& options) {
    std::vector<Subsystem> usable;
    for (const auto& s : plan.subsystems) {
        bool frozen = false;
        for (std::size_t q : options.plan.frozen_qubits) {
            frozen = frozen || contains(s.closure, q);
        }
        if (!frozen) {
            usable.push_back(s);
        }
    }
    const ReadoutConfusion* mitigation = nullptr;
    const ReadoutConfusion& readout = options.execution.readout;
    if (options.mitigate_readout && readout.num_qubits() > 0 && !readout.is_identity()) {
        mitigation = &readout;
    }
    auto vectors = estimate_pauli_vectors(schedule, results, usable, mitigation);
    auto all = local_generators(graph);

    LayerCharacterization out;
    out.circuits = schedule.circuits.size();
    out.subsystems.resize(usable.size());
    parallel_for(usable.size(), options.execution.threads, [&](std::size_t i) {
        const Subsystem& sub = usable[i];
        SubsystemVectors unwound = unwind_ideal(vectors[i], layer);
        std::vector<PauliString> gens;
        for (std::size_t g : sub.generators) {
            gens.push_back(all[g]);
        }
        TransferMatrix ideal = layer_ptm(layer, sub.closure);
        auto problem = assemble_problem(unwound, gens, ideal, options.problem);
        out.subsystems[i] = {sub, solve(problem)};
    });

    ThetaEstimate& theta = out.theta;
    theta.generators = all;
    theta.theta.assign(all.size(), 0.0);
    theta.standard_error.assign(all.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> var_sum(all.size(), 0.0);
    std::vector<std::size_t> count(all.size(), 0);
    double residual2 = 0.0;
    for (const auto& [sub, est] : out.subsystems) {
        residual2 += est.residual_norm * est.residual_norm;
        theta.rank += est.rank;
        theta.observations += est.observations;
        for (std::size_t j = 0; j < sub.generators.size(); ++j) {
            std::size_t g = sub.generators[j];
            auto support = all[g].support();
            bool reported = support.size() == sub.home.size()
                                ? support == sub.home
                                : (support.size() == 1 && contains(sub.home, support[0]));
            if (!reported) {
                continue;
            }
            if (count[g] == 0) {
                theta.theta[g] = 0.0;
            }
            theta.theta[g] += est.theta[j];
            var_sum[g] += est.standard_error[j] * est.standard_error[j];
            count[g] += 1;
        }
    }
    for (std::size_t g = 0; g < all.size(); ++g) {
        if (count[g] > 0) {
            double c = static_cast<double>(count[g]);
            theta.theta[g] /= c;
            theta.standard_error[g] = std::sqrt(var_sum[g]) / c;
        }
    }
    theta.residual_norm = std::sqrt(residual2);
    return out;
}

LayerCharacterization characterize_layer(const LayerExperiment& experiment,
                                         const CharacterizationOptions& options) {
    auto plan = build_preparation_plan(experiment.graph, experiment.ideal, options.plan);
    auto bases = build_measurement_bases(experiment.graph, plan.subsystems);
    auto schedule = generate_schedule(plan, options.max_repetitions, bases, options.shots, options.seed);
    auto results = run_schedule(schedule, experiment.repetition, options.execution);
    return characterize_results(experiment.graph, experiment.ideal, plan, schedule, results, options);
}

CorrectedLayerFactory exact_correction_factory(const NoisyLayer& layer) {
    layer.validate();
    auto base = std::make_shared<NoisyLayer>(layer);
    return [base](std::span<const double> accumulated) -> Channel {
        Channel noisy = instantiate(*base);
        LayerNoiseModel correction(base->noise.graph());
        std::vector<double> minus(accumulated.size());
        for (std::size_t k = 0; k < accumulated.size(); ++k) {
            minus[k] = -accumulated[k];
        }
        correction.set_theta(minus);
        Channel undo = noise_channel(correction);
        return [noisy, undo](DensityMatrix& rho) {
            noisy(rho);
            undo(rho);
        };
    };
}

std::vector<ThetaEstimate> characterize_iteratively(const ConnectivityGraph& graph, const GateLayer& ideal,
                                                    const CorrectedLayerFactory& factory,
                                                    const CharacterizationOptions& options,
                                                    std::size_t rounds, double tolerance) {
    if (rounds == 0) {
        throw std::invalid_argument("rounds must be at least 1");
    }
    std::vector<double> accumulated(local_generators(graph).size(), 0.0);
    std::vector<ThetaEstimate> out;
    for (std::size_t r = 0; r < rounds; ++r) {
        CharacterizationOptions round = options;
        round.seed = r == 0 ? options.seed : derive_seed(options.seed, r);
        LayerExperiment experiment{graph, ideal, factory(accumulated)};
        auto result = characterize_layer(experiment, round);
        for (std::size_t k = 0; k < accumulated.size(); ++k) {
            if (!std::isnan(result.theta.standard_error[k])) {
                accumulated[k] += result.theta.theta[k];
            }
        }
        double update = result.theta.max_abs();
        out.push_back(std::move(result.theta));
        if (r > 0 && update < tolerance) {
            break;
        }
    }
    return out;
}

ExponentialFit fit_exponential(std::span<const double> repetitions, std::span<const double> values) {
    if (repetitions.size() != values.size() || repetitions.size() < 2) {
        throw std::invalid_argument("exponential fit needs at least two points");
    }
    double sx = 0, sy = 0;
    std::size_t count = values.size();
    for (std::size_t i = 0; i < count; ++i) {
        if (!(values[i] > 0.0)) {
            throw NumericalError("exponential fit needs positive values");
        }
        sx += repetitions[i];
        sy += std::log(values[i]);
    }
    double mx = sx / static_cast<double>(count);
    double my = sy / static_cast<double>(count);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < count; ++i) {
        double dx = repetitions[i] - mx;
        double dy = std::log(values[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) {
        throw std::invalid_argument("exponential fit needs at least two distinct repetition counts");
    }
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    ExponentialFit fit;
    fit.amplitude = std::exp(intercept);
    fit.rate = std::exp(slope);
    double ss_res = syy - slope * sxy;
    fit.r_squared = syy > 1e-300 ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
    return fit;
}

RateFit estimate_pauli_rates(const LocalSupport& support, const std::vector<DecaySeries>& series) {
    std::size_t l = support.size();
    std::size_t count = support.num_paulis();
    std::vector<std::vector<double>> xs(count), ys(count);
    std::vector<std::string> bad;
    for (const auto& s : series) {
        if (s.op.num_qubits() != l) {
            throw std::invalid_argument("decay operator " + s.op.str() + " does not match the support size");
        }
        if (s.repetitions.size() != s.values.size()) {
            throw std::invalid_argument("decay series lengths differ");
        }
        std::size_t idx = s.op.lex_index();
        for (std::size_t t = 0; t < s.values.size(); ++t) {
            if (!(s.values[t] > 0.0) && std::find(bad.begin(), bad.end(), s.op.str()) == bad.end()) {
                bad.push_back(s.op.str());
            }
            xs[idx].push_back(s.repetitions[t]);
            ys[idx].push_back(s.values[t]);
        }
    }
    if (!bad.empty()) {
        std::string list;
        for (const auto& b : bad) {
            list += " " + b;
        }
        throw NumericalError("non-positive expectations prevent the decay fit for:" + list);
    }
    RateFit fit;
    fit.eigenvalues.assign(count, 1.0);
    fit.amplitudes.assign(count, 1.0);
    fit.r_squared.assign(count, 1.0);
    for (std::size_t b = 1; b < count; ++b) {
        std::vector<double> distinct = xs[b];
        sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 3) {
            throw std::invalid_argument("eigenvalue of " + PauliString::from_lex_index(l, b).str() +
                                        " needs at least 3 repetition points");
        }
        auto e = fit_exponential(xs[b], ys[b]);
        fit.eigenvalues[b] = e.rate;
        fit.amplitudes[b] = e.amplitude;
        fit.r_squared[b] = e.r_squared;
    }
    auto full = inverse_walsh_hadamard(l, fit.eigenvalues);
    double total = 0.0;
    for (std::size_t a = 0; a < count; ++a) {
        if (full[a] < 0.0) {
            fit.clamped += -full[a];
            full[a] = 0.0;
        }
        total += full[a];
    }
    for (double& p : full) {
        p /= total;
    }
    fit.rates = PauliRates(support, std::span<const double>(full).subspan(1));
    return fit;
}

}  // namespace rotpauli
