#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "qfst/machine.hpp"

namespace qfst {

class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& message) : std::runtime_error(message) {}
};

/// (state index, output emitted so far) — the unit of interference. Two
/// computation paths interfere exactly when their configurations coincide.
using Configuration = std::pair<int, std::string>;

/// Finite map configuration -> amplitude. Map ordering gives the
/// deterministic iteration order: state index, then lexicographic output.
/// In stochastic mode the values are real nonnegative probability masses.
using Superposition = std::map<Configuration, Complex>;

/// Probability mass harvested by one transition.
struct StepEvents {
    std::map<std::string, double> accept_events;  // output string -> probability
    double reject_prob = 0.0;

    double accept_total() const;
};

/// Final distribution of a run over '^' + word + '$'.
struct RunResult {
    std::string input;
    std::map<std::string, double> accept_dist;  // output string -> probability
    double reject_prob = 0.0;
    double unresolved_prob = 0.0;  // non-halting mass left after the right marker

    double accept_total() const;
    double total() const;
};

struct RecognitionResult {
    double accept_prob = 0.0;
    double reject_prob = 0.0;
    double unresolved_prob = 0.0;
};

/// Single configuration (initial state, empty output) with amplitude 1.
Superposition initial_superposition(const MachineSpec& spec);

double squared_norm(const Superposition& sup);

/// One quantum transition: applies each element of the symbol's operation,
/// accumulating amplitudes on equal configurations (the interference),
/// harvests accept/reject mass, and prunes entries below prune_threshold.
/// The caller is responsible for having validated the machine.
std::pair<Superposition, StepEvents> step(const MachineSpec& spec, const Superposition& sup,
                                          char symbol);

/// Full run of a quantum machine; validates the machine first.
RunResult run(const MachineSpec& spec, std::string_view word);

/// Full run of a stochastic machine: the same pipeline with additive
/// probability masses, so no cancellation is possible.
RunResult run_stochastic(const MachineSpec& spec, std::string_view word);

/// Dispatches to run or run_stochastic by spec.mode.
RunResult simulate(const MachineSpec& spec, std::string_view word);

/// Same as simulate but skips the per-call validation pass; for callers
/// that validated the machine once up front (e.g. the exhaustive checker).
RunResult run_prevalidated(const MachineSpec& spec, std::string_view word);

/// Marginalizes the accept distribution over output strings.
RecognitionResult recognize(const MachineSpec& spec, std::string_view word);

/// n independent draws from the categorical distribution over the outcome
/// labels "accept:<output>", "reject" and "unresolved". Deterministic given
/// the seed; counts sum to n. Categories with zero probability are omitted.
std::map<std::string, std::uint64_t> sample_outcomes(const RunResult& result, std::uint64_t n,
                                                     std::uint64_t seed);

/// {"input": ..., "accept": {...}, "reject": ..., "unresolved": ...} with
/// probabilities to 12 significant digits and accept keys sorted
/// lexicographically.
std::string to_json(const RunResult& result);
std::string to_json(const RecognitionResult& result, std::string_view input);

}  // namespace qfst
