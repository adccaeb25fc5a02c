#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfst/machine.hpp"
#include "qfst/simulator.hpp"

namespace qfst {

/// The 12-state transducer computing f1(wcw) = w with bounded error 2/3:
/// the left marker splits the computation into three equal paths (one
/// rejecting immediately), the two survivors copy the letters before /
/// after the separator to the output tape, and the right marker applies a
/// two-point Fourier transform whose reject branch cancels exactly when
/// both paths emitted the same string.
MachineSpec build_f1_qfst(const std::vector<char>& letters = {'a', 'b'}, char separator = 'c');

/// Same topology with probabilities in place of amplitudes: the split
/// becomes 1/3 each and the final transform becomes a fair accept/reject
/// coin on both paths, so no cancellation can occur.
MachineSpec build_f1_stochastic_analog(const std::vector<char>& letters = {'a', 'b'},
                                       char separator = 'c');

/// Decides f1: defined(w) iff x = wcw with exactly one separator.
struct F1Oracle {
    std::vector<char> letters = {'a', 'b'};
    char separator = 'c';

    std::vector<char> alphabet() const;  // letters then separator
    std::optional<std::string> operator()(std::string_view x) const;
};

/// f1 over the default alphabet {a, b} with separator c.
std::optional<std::string> f1_oracle(std::string_view x);

struct BoundedErrorViolation {
    std::string input;
    std::optional<std::string> expected_output;  // nullopt: f undefined, rejection expected
    RunResult observed;
};

struct BoundedErrorReport {
    std::string machine;
    int max_len = 0;
    double threshold = 2.0 / 3.0;
    std::size_t checked_inputs = 0;
    std::size_t defined_inputs = 0;
    std::size_t undefined_inputs = 0;
    /// Minima over the respective input classes; empty when the class is.
    std::optional<double> min_accept_on_defined;
    std::optional<double> min_reject_on_undefined;
    std::vector<BoundedErrorViolation> violations;

    bool ok() const { return violations.empty(); }
};

/// Runs every input over the oracle's alphabet up to max_len and checks the
/// bounded-error criterion: accept mass on exactly the oracle's output
/// >= threshold - 1e-9 when defined, reject >= threshold - 1e-9 otherwise.
/// Inputs may be distributed over `workers` threads (0 = hardware
/// concurrency); the report is merged in input order either way.
BoundedErrorReport exhaustive_check(const MachineSpec& spec, const F1Oracle& oracle, int max_len,
                                    double threshold = 2.0 / 3.0, unsigned workers = 0);

/// Counts, minima (12 significant digits) and violations capped at
/// max_violations together with the uncapped total.
std::string to_json(const BoundedErrorReport& report, std::size_t max_violations = 20);

/// All words over the alphabet with length <= max_len, ordered by length
/// and then lexicographically in alphabet order.
std::vector<std::string> enumerate_words(const std::vector<char>& alphabet, int max_len);

/// Built-in machines by name ("f1", "f1-classical"); nullopt when unknown.
std::optional<MachineSpec> builtin_machine(std::string_view name);
std::vector<std::string> builtin_names();

}  // namespace qfst
