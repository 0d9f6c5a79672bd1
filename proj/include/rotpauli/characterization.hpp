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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotpauli/gates.hpp"
#include "rotpauli/graph.hpp"
#include "rotpauli/noise_model.hpp"
#include "rotpauli/pauli.hpp"
#include "rotpauli/ptm.hpp"
#include "rotpauli/simulator.hpp"

namespace rotpauli {

/// A characterized region of the device. `home` is an edge (or an isolated
/// qubit) whose generators are reported; `closure` adds the partners of
/// every layer gate touching `home`, so the ideal layer restricted to the
/// closure is a well defined unitary. All generators supported inside the
/// closure are fitted jointly.
struct Subsystem {
    std::vector<std::size_t> home;
    std::vector<std::size_t> closure;
    /// Indices into local_generators(graph) supported inside `closure`.
    std::vector<std::size_t> generators;
};

std::vector<Subsystem> build_subsystems(const ConnectivityGraph& graph, const GateLayer& layer);

struct PlanOptions {
    /// Qubits held in |0> for every preparation. Subsystems whose closure
    /// contains a frozen qubit cannot be estimated.
    std::vector<std::size_t> frozen_qubits;
    /// Adds a seeded per-qubit label offset on top of the linear design.
    bool random_offsets = false;
    std::uint64_t seed = 0;
};

/// Product-state preparations for the whole register.
///
/// Labels follow a linear design over Z6: qubit q receives the label
/// kAllStateLabels[a_q . s mod 6] for preparation index s in Z6^k. The
/// vectors a_q are chosen so that every edge and every closure sees each of
/// its local product states exactly 6^k / 6^|S| times, and, where possible,
/// every edge together with any single neighbouring qubit is balanced too.
struct PreparationPlan {
    std::size_t num_qubits = 0;
    std::size_t design_dimension = 0;
    std::vector<std::vector<int>> qubit_vectors;
    /// True if each edge plus any one neighbouring qubit is balanced.
    bool environment_balanced = false;
    std::vector<Subsystem> subsystems;
    std::vector<ProductState> preparations;

    /// Local states seen by `qubits`, one per preparation.
    std::vector<ProductState> local_states(std::span<const std::size_t> qubits) const;
};

PreparationPlan build_preparation_plan(const ConnectivityGraph& graph, const GateLayer& layer,
                                       const PlanOptions& options = {});

/// Measurement settings: 3^k product bases such that every closure and every
/// edge sees each local basis combination equally often.
std::vector<std::vector<Pauli1>> build_measurement_bases(const ConnectivityGraph& graph,
                                                         const std::vector<Subsystem>& subsystems);

struct CircuitSpec {
    std::size_t id = 0;
    std::size_t preparation = 0;
    std::size_t repetitions = 0;
    std::size_t basis = 0;
};

/// Every (preparation, m in 0..R, basis) combination, preparation-major.
struct ExperimentSchedule {
    std::size_t num_qubits = 0;
    std::vector<ProductState> preparations;
    std::vector<std::vector<Pauli1>> bases;
    std::size_t max_repetitions = 0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::vector<CircuitSpec> circuits;

    std::size_t index_of(std::size_t preparation, std::size_t repetitions, std::size_t basis) const;
    /// Seed used to sample circuit `id`.
    std::uint64_t circuit_seed(std::size_t id) const;
    /// Human-readable "prep|m|basis" description.
    std::string describe(const CircuitSpec& circuit) const;
};

ExperimentSchedule generate_schedule(const std::vector<ProductState>& preparations,
                                     std::size_t max_repetitions,
                                     const std::vector<std::vector<Pauli1>>& bases, std::uint64_t shots,
                                     std::uint64_t seed);
ExperimentSchedule generate_schedule(const PreparationPlan& plan, std::size_t max_repetitions,
                                     const std::vector<std::vector<Pauli1>>& bases, std::uint64_t shots,
                                     std::uint64_t seed);

enum class ExecutionMode { kExact, kSampled };

std::string to_string(ExecutionMode mode);
ExecutionMode parse_execution_mode(std::string_view text);

struct ExecutionOptions {
    ExecutionMode mode = ExecutionMode::kExact;
    /// Ground-truth readout error of the simulated device (applied to
    /// histograms in sampled mode and to probabilities in exact mode).
    ReadoutConfusion readout;
    std::size_t threads = 1;
};

/// Raw results, one entry per circuit. Exact mode stores outcome
/// probabilities, sampled mode stores histograms.
struct ScheduleResults {
    ExecutionMode mode = ExecutionMode::kExact;
    std::vector<std::vector<double>> probabilities;
    std::vector<Histogram> histograms;
};

/// Runs every circuit: prepare, apply `repetition` m times, measure.
ScheduleResults run_schedule(const ExperimentSchedule& schedule, const Channel& repetition,
                             const ExecutionOptions& options);

/// Vectors on a subsystem closure for every preparation and m = 0..R.
struct SubsystemVectors {
    std::vector<std::size_t> qubits;
    /// vectors[prep][m].
    std::vector<std::vector<PauliVector>> vectors;
};

/// Estimates closure Pauli vectors from raw results. Every Pauli expectation
/// is averaged over all bases that agree with it on its support. If
/// `mitigation` is given, its per-qubit confusion is inverted on each
/// marginal distribution first.
std::vector<SubsystemVectors> estimate_pauli_vectors(const ExperimentSchedule& schedule,
                                                     const ScheduleResults& results,
                                                     const std::vector<Subsystem>& subsystems,
                                                     const ReadoutConfusion* mitigation = nullptr);

/// Applies the inverse of `ideal` m times.
PauliVector unwind_ideal(const PauliVector& v, const TransferMatrix& ideal, std::size_t m);
/// Unwinds vectors[prep][m] by m applications of the ideal layer on the closure.
SubsystemVectors unwind_ideal(const SubsystemVectors& data, const GateLayer& layer);

enum class DesignPoint {
    /// Generator columns act on the average of the two states of a step.
    kMidpoint,
    /// Generator columns act on the state entering the step.
    kInput,
};

enum class Pairing {
    /// One observation per step m-1 -> m.
    kConsecutive,
    /// One observation per m comparing 0 -> m, divided by m.
    kCumulative,
};

struct ProblemOptions {
    DesignPoint design = DesignPoint::kMidpoint;
    Pairing pairing = Pairing::kConsecutive;
};

/// Stacked linear problem y = B theta for one subsystem.
struct EstimationProblem {
    std::vector<PauliString> generators;
    Eigen::MatrixXd design;
    Eigen::VectorXd residual;
    std::size_t observations = 0;
    std::size_t rank = 0;
};

/// `data` must already be unwound. `generators` are n-qubit strings supported
/// inside data.qubits; `ideal` is the ideal layer PTM on those qubits.
EstimationProblem assemble_problem(const SubsystemVectors& data, std::span<const PauliString> generators,
                                   const TransferMatrix& ideal, const ProblemOptions& options = {});

struct ThetaEstimate {
    std::vector<PauliString> generators;
    std::vector<double> theta;
    /// sqrt of diag((B^T B)^-1) times the residual variance.
    std::vector<double> standard_error;
    double residual_norm = 0.0;
    std::size_t rank = 0;
    std::size_t observations = 0;

    double max_abs() const;
};

/// Least squares by column-pivoted QR with a rank check at relative
/// tolerance 1e-8. Throws NumericalError naming the unidentifiable
/// combination when rank deficient.
ThetaEstimate solve(const EstimationProblem& problem);

struct CharacterizationOptions {
    std::size_t max_repetitions = 3;
    std::uint64_t shots = 128;
    std::uint64_t seed = 1;
    ExecutionOptions execution;
    /// Invert the configured confusion before estimating vectors.
    bool mitigate_readout = true;
    ProblemOptions problem;
    PlanOptions plan;
};

struct SubsystemEstimate {
    Subsystem subsystem;
    ThetaEstimate estimate;
};

struct LayerCharacterization {
    /// All device generators in local_generators order.
    ThetaEstimate theta;
    std::vector<SubsystemEstimate> subsystems;
    std::size_t circuits = 0;
};

/// One noisy repetition of a layer together with its ideal description.
struct LayerExperiment {
    ConnectivityGraph graph;
    GateLayer ideal;
    Channel repetition;
};

LayerExperiment make_experiment(const NoisyLayer& layer);

/// Plan, schedule, simulate, unwind, assemble and solve every subsystem.
/// Edge generators come from their own edge; single-qubit generators are
/// averaged over the edges containing the qubit.
LayerCharacterization characterize_layer(const LayerExperiment& experiment,
                                         const CharacterizationOptions& options);

/// Same pipeline starting from existing raw results.
LayerCharacterization characterize_results(const ConnectivityGraph& graph, const GateLayer& layer,
                                           const PreparationPlan& plan, const ExperimentSchedule& schedule,
                                           const ScheduleResults& results,
                                           const CharacterizationOptions& options);

/// Builds the repetition channel with a correction for the accumulated angles.
using CorrectedLayerFactory = std::function<Channel(std::span<const double> accumulated)>;

/// The noisy layer followed by the exact rotation exp(+i sum_k a_k P_k).
CorrectedLayerFactory exact_correction_factory(const NoisyLayer& layer);

/// Round r characterizes the layer corrected by the sum of all previous
/// estimates. Returns the per-round estimates; stops early once an update's
/// infinity norm falls below `tolerance`.
std::vector<ThetaEstimate> characterize_iteratively(const ConnectivityGraph& graph, const GateLayer& ideal,
                                                    const CorrectedLayerFactory& factory,
                                                    const CharacterizationOptions& options,
                                                    std::size_t rounds, double tolerance = 1e-9);

/// Expectation of a local eigenoperator after m = repetitions[t] layers.
struct DecaySeries {
    PauliString op;
    std::vector<double> repetitions;
    std::vector<double> values;
};

struct RateFit {
    PauliRates rates;
    /// Fitted eigenvalue per local Pauli (index 0 is 1).
    std::vector<double> eigenvalues;
    /// Fitted amplitude per local Pauli (index 0 is 1).
    std::vector<double> amplitudes;
    /// Coefficient of determination of each log-linear fit (index 0 is 1).
    std::vector<double> r_squared;
    /// Total negative mass removed before renormalizing.
    double clamped = 0.0;
};

/// Fits <P>(m) = A f^m per local Pauli by log-linear least squares (series
/// for the same operator are pooled), then inverts the Walsh-Hadamard
/// transform. Every non-identity Pauli on the support needs a series.
RateFit estimate_pauli_rates(const LocalSupport& support, const std::vector<DecaySeries>& series);

/// Log-linear fit of a single series: returns (A, f, R^2).
struct ExponentialFit {
    double amplitude = 1.0;
    double rate = 1.0;
    double r_squared = 1.0;
};
ExponentialFit fit_exponential(std::span<const double> repetitions, std::span<const double> values);

}  // namespace rotpauli
