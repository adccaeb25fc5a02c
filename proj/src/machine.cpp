#include "qfst/machine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qfst {

namespace {

bool visible_ascii(char c) {
    return c > 0x20 && c < 0x7f;
}

Outcome outcome_for(HaltClass cls) {
    switch (cls) {
        case HaltClass::accepting: return Outcome::accept;
        case HaltClass::rejecting: return Outcome::reject;
        case HaltClass::none: break;
    }
    return Outcome::continue_;
}

std::string quote_symbol(char c) {
    return std::string("'") + c + "'";
}

}  // namespace

std::string_view to_string(Mode mode) {
    return mode == Mode::quantum ? "quantum" : "stochastic";
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::accept: return "accept";
        case Outcome::reject: return "reject";
        case Outcome::continue_: break;
    }
    return "continue";
}

std::optional<Mode> mode_from_string(std::string_view text) {
    if (text == "quantum") return Mode::quantum;
    if (text == "stochastic") return Mode::stochastic;
    return std::nullopt;
}

std::optional<Outcome> outcome_from_string(std::string_view text) {
    if (text == "continue") return Outcome::continue_;
    if (text == "accept") return Outcome::accept;
    if (text == "reject") return Outcome::reject;
    return std::nullopt;
}

Matrix OperationSet::recompose(int dim) const {
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& elem : elements) sum += elem.matrix;
    return sum;
}

const std::string* OperationSet::expr_for(int target, int source) const {
    for (const auto& elem : elements) {
        auto it = elem.entry_exprs.find({target, source});
        if (it != elem.entry_exprs.end()) return &it->second;
    }
    return nullptr;
}

int MachineSpec::state_index(std::string_view state_name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == state_name) return static_cast<int>(i);
    return -1;
}

bool MachineSpec::is_input_symbol(char c) const {
    return std::find(input_alphabet.begin(), input_alphabet.end(), c) != input_alphabet.end();
}

bool MachineSpec::is_output_symbol(char c) const {
    return std::find(output_alphabet.begin(), output_alphabet.end(), c) != output_alphabet.end();
}

bool MachineSpec::is_output_string(std::string_view text) const {
    for (char c : text)
        if (!is_output_symbol(c)) return false;
    return true;
}

const std::string& MachineSpec::emission_for(int state, char symbol) const {
    static const std::string empty;
    auto it = emissions.find({state, symbol});
    return it == emissions.end() ? empty : it->second;
}

std::vector<char> MachineSpec::symbols() const {
    std::vector<char> all;
    all.reserve(input_alphabet.size() + 2);
    all.push_back(left_marker);
    all.insert(all.end(), input_alphabet.begin(), input_alphabet.end());
    all.push_back(right_marker);
    return all;
}

std::vector<std::string> MachineSpec::accept_states() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < states.size(); ++i)
        if (i < halt.size() && halt[i] == HaltClass::accepting) out.push_back(states[i]);
    return out;
}

std::vector<std::string> MachineSpec::reject_states() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < states.size(); ++i)
        if (i < halt.size() && halt[i] == HaltClass::rejecting) out.push_back(states[i]);
    return out;
}

bool ValidationReport::ok() const {
    return error_count() == 0;
}

std::size_t ValidationReport::error_count() const {
    std::size_t n = 0;
    for (const auto& issue : issues)
        if (issue.severity == Severity::error) ++n;
    return n;
}

std::string ValidationReport::summary() const {
    std::size_t errors = error_count();
    if (errors == 0) return "ok";
    for (const auto& issue : issues) {
        if (issue.severity != Severity::error) continue;
        std::ostringstream os;
        os << errors << " error" << (errors > 1 ? "s" : "") << "; first: " << issue.location << ": "
           << issue.message;
        return os.str();
    }
    return "invalid";
}

double unitarity_residual(const Matrix& u) {
    const int n = static_cast<int>(u.rows());
    Matrix gram = u.adjoint() * u - Matrix::Identity(n, n);
    return gram.cwiseAbs().maxCoeff();
}

double completeness_residual(const OperationSet& set, int dim) {
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& elem : set.elements) sum += elem.matrix.adjoint() * elem.matrix;
    return (sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

OperationSet split_by_partition(const Matrix& matrix, const std::vector<HaltClass>& halt,
                                std::map<std::pair<int, int>, std::string> entry_exprs) {
    const int n = static_cast<int>(matrix.rows());
    OperationSet set;
    set.from_matrix = true;
    for (HaltClass cls : {HaltClass::accepting, HaltClass::rejecting, HaltClass::none}) {
        Matrix part = Matrix::Zero(n, n);
        bool nonzero = false;
        for (int t = 0; t < n; ++t) {
            if (halt[t] != cls) continue;
            part.row(t) = matrix.row(t);
            for (int s = 0; s < n; ++s)
                if (part(t, s) != Complex(0.0, 0.0)) nonzero = true;
        }
        if (!nonzero) continue;
        OperationElement elem;
        elem.matrix = std::move(part);
        elem.outcome = outcome_for(cls);
        for (const auto& [key, expr] : entry_exprs)
            if (halt[key.first] == cls) elem.entry_exprs.emplace(key, expr);
        set.elements.push_back(std::move(elem));
    }
    return set;
}

OperationSet decompose_unitary(const Matrix& u, const std::vector<HaltClass>& halt,
                               std::map<std::pair<int, int>, std::string> entry_exprs) {
    if (u.rows() != u.cols() || u.rows() != static_cast<Eigen::Index>(halt.size()))
        throw MachineError("decompose_unitary: matrix dimension does not match the state count");
    double residual = unitarity_residual(u);
    if (residual > validation_tolerance) {
        std::ostringstream os;
        os << "matrix is not unitary (residual " << residual << ")";
        throw NonUnitaryError(os.str(), residual);
    }
    return split_by_partition(u, halt, std::move(entry_exprs));
}

Matrix complete_columns_unitary(int dim, const std::map<int, Vector>& specified) {
    Matrix m = Matrix::Zero(dim, dim);
    std::vector<Vector> used;
    used.reserve(dim);
    for (const auto& [col, vec] : specified) {
        if (col < 0 || col >= dim || vec.size() != dim)
            throw MachineError("complete_columns_unitary: specified column out of range");
        m.col(col) = vec;
        used.push_back(vec);
    }
    int candidate = 0;
    for (int col = 0; col < dim; ++col) {
        if (specified.count(col)) continue;
        bool placed = false;
        while (candidate < dim && !placed) {
            Vector v = Vector::Zero(dim);
            v(candidate) = Complex(1.0, 0.0);
            ++candidate;
            // Two orthogonalization passes keep the completion stable.
            for (int pass = 0; pass < 2; ++pass) {
                for (const Vector& u : used) {
                    double nsq = u.squaredNorm();
                    if (nsq > 1e-30) v -= (u.dot(v) / nsq) * u;
                }
            }
            double norm = v.norm();
            if (norm > 1e-6) {
                v /= norm;
                m.col(col) = v;
                used.push_back(std::move(v));
                placed = true;
            }
        }
        if (!placed)
            throw MachineError("cannot complete the specified columns to a unitary: basis exhausted");
    }
    return m;
}

bool valid_state_name(std::string_view text) {
    if (text.empty()) return false;
    for (char c : text) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

bool valid_machine_name(std::string_view text) {
    if (text.empty()) return false;
    for (char c : text) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

bool valid_symbol_char(char c, bool input_side) {
    if (!visible_ascii(c)) return false;
    if (c == '#' || c == '[' || c == ']' || c == '_') return false;
    if (input_side && (c == left_marker || c == right_marker)) return false;
    return true;
}

namespace {

class Validator {
public:
    explicit Validator(const MachineSpec& spec) : spec_(spec) {}

    ValidationReport run() {
        check_states();
        check_alphabets();
        check_operations();
        check_emissions();
        return std::move(report_);
    }

private:
    void error(std::string location, std::string message, std::optional<double> residual = {}) {
        report_.issues.push_back(
            {Severity::error, std::move(location), std::move(message), residual});
    }

    void warn(std::string location, std::string message) {
        report_.issues.push_back({Severity::warning, std::move(location), std::move(message), {}});
    }

    void check_states() {
        if (spec_.states.empty()) {
            error("states", "machine has no states");
            return;
        }
        std::set<std::string_view> seen;
        for (const auto& s : spec_.states) {
            if (!valid_state_name(s)) error("states", "invalid state name '" + s + "'");
            if (!seen.insert(s).second) error("states", "duplicate state name '" + s + "'");
        }
        if (!valid_machine_name(spec_.name)) error("machine", "invalid machine name '" + spec_.name + "'");
        if (spec_.initial < 0 || spec_.initial >= spec_.num_states())
            error("machine", "initial state index out of range");
        if (spec_.halt.size() != spec_.states.size())
            error("machine", "halting partition does not cover every state exactly once");
    }

    void check_alphabets() {
        std::set<char> seen;
        for (char c : spec_.input_alphabet) {
            if (!valid_symbol_char(c, true))
                error("input_alphabet", "invalid input symbol " + quote_symbol(c));
            if (!seen.insert(c).second)
                error("input_alphabet", "duplicate input symbol " + quote_symbol(c));
        }
        seen.clear();
        for (char c : spec_.output_alphabet) {
            if (!valid_symbol_char(c, false))
                error("output_alphabet", "invalid output symbol " + quote_symbol(c));
            if (!seen.insert(c).second)
                error("output_alphabet", "duplicate output symbol " + quote_symbol(c));
        }
    }

    void check_operations() {
        const int n = spec_.num_states();
        std::vector<char> expected = spec_.symbols();
        for (char sym : expected) {
            auto it = spec_.operations.find(sym);
            if (it == spec_.operations.end()) {
                error("operations", "no operation for symbol " + quote_symbol(sym));
                continue;
            }
            check_operation_set(sym, it->second, n);
        }
        for (const auto& [sym, set] : spec_.operations) {
            (void)set;
            if (std::find(expected.begin(), expected.end(), sym) == expected.end())
                error("operations", "operation for symbol " + quote_symbol(sym) +
                                        " which is not in the input alphabet");
        }
    }

    void check_operation_set(char sym, const OperationSet& set, int n) {
        std::string loc = "operation " + quote_symbol(sym);
        if (set.elements.empty()) {
            error(loc, "operation has no elements");
            return;
        }
        bool dims_ok = true;
        for (std::size_t k = 0; k < set.elements.size(); ++k) {
            const Matrix& m = set.elements[k].matrix;
            if (m.rows() != n || m.cols() != n) {
                error(loc + " element " + std::to_string(k),
                      "matrix is not " + std::to_string(n) + "x" + std::to_string(n));
                dims_ok = false;
            } else if (m.cwiseAbs().maxCoeff() == 0.0) {
                warn(loc + " element " + std::to_string(k), "element matrix is all zero");
            }
        }
        if (!dims_ok) return;

        if (spec_.mode == Mode::quantum) {
            double residual = completeness_residual(set, n);
            if (residual > validation_tolerance)
                error(loc, "completeness violated: max-norm of sum Mi'Mi - I exceeds tolerance",
                      residual);
            check_overlapping_continues(sym, set, n);
        } else {
            check_stochastic(sym, set, n);
        }
    }

    // Overlapping row support across several continue-tagged elements makes
    // the merged continuing superposition non-conservative; flag it.
    void check_overlapping_continues(char sym, const OperationSet& set, int n) {
        std::vector<int> owners(n, -1);
        for (std::size_t k = 0; k < set.elements.size(); ++k) {
            if (set.elements[k].outcome != Outcome::continue_) continue;
            for (int t = 0; t < n; ++t) {
                if (set.elements[k].matrix.row(t).cwiseAbs().maxCoeff() == 0.0) continue;
                if (owners[t] >= 0) {
                    warn("operation " + quote_symbol(sym),
                         "multiple continue elements write state '" + spec_.states[t] +
                             "'; per-step conservation is not guaranteed");
                    return;
                }
                owners[t] = static_cast<int>(k);
            }
        }
    }

    void check_stochastic(char sym, const OperationSet& set, int n) {
        std::string loc = "operation " + quote_symbol(sym);
        double worst_entry = 0.0;
        bool entries_ok = true;
        for (const auto& elem : set.elements) {
            for (int t = 0; t < n; ++t) {
                for (int s = 0; s < n; ++s) {
                    Complex v = elem.matrix(t, s);
                    if (std::abs(v.imag()) > validation_tolerance || v.real() < -validation_tolerance) {
                        worst_entry = std::max(worst_entry,
                                               std::max(std::abs(v.imag()), -v.real()));
                        entries_ok = false;
                    }
                }
            }
        }
        if (!entries_ok)
            error(loc, "stochastic entries must be real and nonnegative", worst_entry);
        double worst_col = 0.0;
        for (int s = 0; s < n; ++s) {
            double sum = 0.0;
            for (const auto& elem : set.elements)
                for (int t = 0; t < n; ++t) sum += elem.matrix(t, s).real();
            worst_col = std::max(worst_col, std::abs(sum - 1.0));
        }
        if (worst_col > validation_tolerance)
            error(loc, "column sums across elements must equal 1", worst_col);
    }

    void check_emissions() {
        std::vector<char> syms = spec_.symbols();
        for (const auto& [key, text] : spec_.emissions) {
            const auto& [state, sym] = key;
            std::string loc = "emission (" +
                              (state >= 0 && state < spec_.num_states() ? spec_.states[state]
                                                                        : std::to_string(state)) +
                              ", " + quote_symbol(sym) + ")";
            if (state < 0 || state >= spec_.num_states()) {
                error(loc, "emission source state out of range");
                continue;
            }
            if (std::find(syms.begin(), syms.end(), sym) == syms.end())
                error(loc, "emission symbol is not an input symbol or marker");
            if (!spec_.is_output_string(text))
                error(loc, "emission string '" + text + "' uses symbols outside the output alphabet");
        }
    }

    const MachineSpec& spec_;
    ValidationReport report_;
};

}  // namespace

ValidationReport validate_machine(const MachineSpec& spec) {
    return Validator(spec).run();
}

void require_valid(const MachineSpec& spec) {
    ValidationReport report = validate_machine(spec);
    if (!report.ok())
        throw MachineError("machine '" + spec.name + "' failed validation: " + report.summary());
}

}  // namespace qfst
