#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qfst/amplitude.hpp"

namespace qfst {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Completeness, unitarity and probability-sum checks.
inline constexpr double validation_tolerance = 1e-9;
/// Configurations whose amplitude modulus falls below this after
/// accumulation are dropped from a superposition.
inline constexpr double prune_threshold = 1e-12;

inline constexpr char left_marker = '^';
inline constexpr char right_marker = '$';

enum class Mode { quantum, stochastic };

/// Register outcome observed after a transition.
enum class Outcome { continue_, accept, reject };

/// Membership of a state in the halting partition.
enum class HaltClass { none, accepting, rejecting };

std::string_view to_string(Mode mode);
std::string_view to_string(Outcome outcome);
std::optional<Mode> mode_from_string(std::string_view text);
std::optional<Outcome> outcome_from_string(std::string_view text);

class MachineError : public std::runtime_error {
public:
    explicit MachineError(const std::string& message) : std::runtime_error(message) {}
};

class NonUnitaryError : public MachineError {
public:
    NonUnitaryError(const std::string& message, double residual)
        : MachineError(message), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// One matrix of a per-symbol operation, tagged with the register outcome.
/// matrix(target, source): matrices act on column vectors of state amplitudes.
struct OperationElement {
    Matrix matrix;
    Outcome outcome = Outcome::continue_;
    /// Canonical source expressions for entries given symbolically; entries
    /// without an annotation serialize as decimal literals.
    std::map<std::pair<int, int>, std::string> entry_exprs;
};

/// Nonempty list of elements forming one quantum (or stochastic) operation.
struct OperationSet {
    std::vector<OperationElement> elements;
    /// True when the set is the halting-partition split of a single matrix;
    /// such sets serialize as a [unitary] section, others as a [kraus] group.
    bool from_matrix = false;

    /// Sum of all element matrices. For partition splits this recovers the
    /// original matrix (elements have pairwise disjoint row support).
    Matrix recompose(int dim) const;
    const std::string* expr_for(int target, int source) const;
};

/// Full definition of a one-way quantum or stochastic transducer.
/// Immutable after construction; all operations on it are pure.
struct MachineSpec {
    std::string name;
    Mode mode = Mode::quantum;
    std::vector<std::string> states;  // declaration order fixes all indices
    int initial = 0;
    std::vector<HaltClass> halt;  // one entry per state
    std::vector<char> input_alphabet;  // declaration order; never contains the markers
    std::vector<char> output_alphabet;
    std::map<char, OperationSet> operations;  // keys: input alphabet plus both markers
    std::map<std::pair<int, char>, std::string> emissions;  // (source state, symbol) -> output

    int num_states() const { return static_cast<int>(states.size()); }
    int state_index(std::string_view state_name) const;  // -1 when absent
    bool is_input_symbol(char c) const;
    bool is_output_symbol(char c) const;
    bool is_output_string(std::string_view text) const;
    const std::string& emission_for(int state, char symbol) const;
    /// Canonical symbol order: left marker, input alphabet, right marker.
    std::vector<char> symbols() const;
    std::vector<std::string> accept_states() const;
    std::vector<std::string> reject_states() const;
};

enum class Severity { error, warning };

struct ValidationIssue {
    Severity severity = Severity::error;
    std::string location;
    std::string message;
    std::optional<double> residual;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const;
    std::size_t error_count() const;
    /// "ok", or the first error prefixed with the total error count.
    std::string summary() const;
};

/// Checks every structural invariant plus the mode-specific numeric ones:
/// quantum completeness max-norm(sum Mi'Mi - I) <= 1e-9 per symbol, or
/// stochastic nonnegative real entries with unit column sums.
ValidationReport validate_machine(const MachineSpec& spec);

/// Throws MachineError when validate_machine reports any error.
void require_valid(const MachineSpec& spec);

double unitarity_residual(const Matrix& u);
double completeness_residual(const OperationSet& set, int dim);

/// Splits a matrix into at most three outcome-tagged elements by zeroing the
/// rows outside each halting class; all-zero elements are omitted.
/// Entry annotations are distributed to the element owning their row.
OperationSet split_by_partition(const Matrix& matrix, const std::vector<HaltClass>& halt,
                                std::map<std::pair<int, int>, std::string> entry_exprs = {});

/// split_by_partition gated on unitarity within validation_tolerance;
/// throws NonUnitaryError otherwise.
OperationSet decompose_unitary(const Matrix& u, const std::vector<HaltClass>& halt,
                               std::map<std::pair<int, int>, std::string> entry_exprs = {});

/// Fills the unspecified columns with the remaining standard basis vectors in
/// declaration order, Gram-Schmidt orthogonalized against everything placed
/// before them. Deterministic; byte-reproducible.
Matrix complete_columns_unitary(int dim, const std::map<int, Vector>& specified);

bool valid_state_name(std::string_view text);
bool valid_machine_name(std::string_view text);
/// Symbols are visible ASCII except '#', '[', ']' and '_'; input-side
/// symbols additionally exclude the reserved markers '^' and '$'.
bool valid_symbol_char(char c, bool input_side);

}  // namespace qfst
