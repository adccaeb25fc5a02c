#include "qfst/builtins.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "json_util.hpp"

namespace qfst {

namespace {

// Collects symbolically specified entries of one per-symbol matrix.
class MatrixEntries {
public:
    explicit MatrixEntries(const MachineSpec& spec) : spec_(spec), dim_(spec.num_states()) {}

    void set(std::string_view target, std::string_view source, const std::string& expr) {
        int t = spec_.state_index(target);
        int s = spec_.state_index(source);
        if (t < 0 || s < 0) throw MachineError("builder references an unknown state");
        AmplitudeExpr parsed = parse_amplitude(expr);
        values_[{t, s}] = eval_amplitude(parsed);
        exprs_[{t, s}] = to_string(parsed);
    }

    // Gram-Schmidt completion of unspecified columns, then partition split.
    OperationSet unitary_operation() const {
        std::map<int, Vector> columns;
        for (const auto& [key, value] : values_) {
            auto [t, s] = key;
            auto it = columns.find(s);
            if (it == columns.end()) it = columns.emplace(s, Vector::Zero(dim_)).first;
            it->second(t) = value;
        }
        Matrix u = complete_columns_unitary(dim_, columns);
        return decompose_unitary(u, spec_.halt, exprs_);
    }

    // Unspecified columns default to identity columns.
    OperationSet stochastic_operation() const {
        Matrix m = Matrix::Zero(dim_, dim_);
        std::set<int> touched;
        for (const auto& [key, value] : values_) {
            m(key.first, key.second) = value;
            touched.insert(key.second);
        }
        for (int s = 0; s < dim_; ++s)
            if (!touched.count(s)) m(s, s) = Complex(1.0, 0.0);
        return split_by_partition(m, spec_.halt, exprs_);
    }

private:
    const MachineSpec& spec_;
    int dim_;
    std::map<std::pair<int, int>, Complex> values_;
    std::map<std::pair<int, int>, std::string> exprs_;
};

void check_builder_alphabet(const std::vector<char>& letters, char separator) {
    if (letters.empty()) throw MachineError("f1 builder requires at least one letter");
    std::set<char> seen;
    for (char l : letters) {
        if (!valid_symbol_char(l, true))
            throw MachineError(std::string("invalid letter '") + l + "' for the f1 builder");
        if (!seen.insert(l).second)
            throw MachineError(std::string("duplicate letter '") + l + "' for the f1 builder");
    }
    if (!valid_symbol_char(separator, true))
        throw MachineError(std::string("invalid separator '") + separator + "'");
    if (seen.count(separator))
        throw MachineError(std::string("separator '") + separator + "' collides with a letter");
}

// States shared by the quantum machine and its stochastic analog. The four
// distinct reject sinks rA..rD keep rejection mass path-additive regardless
// of the output emitted before halting.
MachineSpec f1_skeleton(const std::vector<char>& letters, char separator) {
    MachineSpec spec;
    spec.states = {"s0", "A1", "A2", "B1", "B2", "R", "qacc", "qrej", "rA", "rB", "rC", "rD"};
    spec.initial = 0;
    spec.halt.assign(spec.states.size(), HaltClass::none);
    spec.halt[spec.state_index("qacc")] = HaltClass::accepting;
    for (const char* r : {"R", "qrej", "rA", "rB", "rC", "rD"})
        spec.halt[spec.state_index(r)] = HaltClass::rejecting;
    spec.input_alphabet = letters;
    spec.input_alphabet.push_back(separator);
    spec.output_alphabet = letters;
    for (char l : letters) {
        spec.emissions[{spec.state_index("A1"), l}] = std::string(1, l);
        spec.emissions[{spec.state_index("B2"), l}] = std::string(1, l);
    }
    return spec;
}

}  // namespace

MachineSpec build_f1_qfst(const std::vector<char>& letters, char separator) {
    check_builder_alphabet(letters, separator);
    MachineSpec spec = f1_skeleton(letters, separator);
    spec.name = "f1";
    spec.mode = Mode::quantum;

    // Left marker: split into two surviving paths plus an immediate reject.
    MatrixEntries split(spec);
    split.set("A1", "s0", "1/sqrt(3)");
    split.set("A2", "s0", "1/sqrt(3)");
    split.set("R", "s0", "1/sqrt(3)");
    spec.operations[left_marker] = split.unitary_operation();

    // Letters: path 1 copies before the separator, path 2 after it.
    MatrixEntries letter(spec);
    letter.set("A1", "A1", "1");
    letter.set("A2", "A2", "1");
    letter.set("B1", "B1", "1");
    letter.set("B2", "B2", "1");
    OperationSet letter_op = letter.unitary_operation();
    for (char l : letters) spec.operations[l] = letter_op;

    // Separator: move both paths to the post-separator phase; a second
    // separator sends them to distinct reject sinks.
    MatrixEntries sep(spec);
    sep.set("B1", "A1", "1");
    sep.set("B2", "A2", "1");
    sep.set("rC", "B1", "1");
    sep.set("rD", "B2", "1");
    spec.operations[separator] = sep.unitary_operation();

    // Right marker: the two-point transform. The reject branch cancels
    // exactly when both paths carry the same output; a missing separator
    // sends both paths to distinct reject sinks instead.
    MatrixEntries finish(spec);
    finish.set("qacc", "B1", "1/sqrt(2)");
    finish.set("qrej", "B1", "1/sqrt(2)");
    finish.set("qacc", "B2", "1/sqrt(2)");
    finish.set("qrej", "B2", "-1/sqrt(2)");
    finish.set("rA", "A1", "1");
    finish.set("rB", "A2", "1");
    spec.operations[right_marker] = finish.unitary_operation();

    return spec;
}

MachineSpec build_f1_stochastic_analog(const std::vector<char>& letters, char separator) {
    check_builder_alphabet(letters, separator);
    MachineSpec spec = f1_skeleton(letters, separator);
    spec.name = "f1-classical";
    spec.mode = Mode::stochastic;

    MatrixEntries split(spec);
    split.set("A1", "s0", "1/3");
    split.set("A2", "s0", "1/3");
    split.set("R", "s0", "1/3");
    spec.operations[left_marker] = split.stochastic_operation();

    MatrixEntries letter(spec);
    letter.set("A1", "A1", "1");
    letter.set("A2", "A2", "1");
    letter.set("B1", "B1", "1");
    letter.set("B2", "B2", "1");
    OperationSet letter_op = letter.stochastic_operation();
    for (char l : letters) spec.operations[l] = letter_op;

    MatrixEntries sep(spec);
    sep.set("B1", "A1", "1");
    sep.set("B2", "A2", "1");
    sep.set("rC", "B1", "1");
    sep.set("rD", "B2", "1");
    spec.operations[separator] = sep.stochastic_operation();

    // No interference is available classically: both paths flip a fair coin.
    MatrixEntries finish(spec);
    finish.set("qacc", "B1", "1/2");
    finish.set("qrej", "B1", "1/2");
    finish.set("qacc", "B2", "1/2");
    finish.set("qrej", "B2", "1/2");
    finish.set("rA", "A1", "1");
    finish.set("rB", "A2", "1");
    spec.operations[right_marker] = finish.stochastic_operation();

    return spec;
}

std::vector<char> F1Oracle::alphabet() const {
    std::vector<char> all = letters;
    all.push_back(separator);
    return all;
}

std::optional<std::string> F1Oracle::operator()(std::string_view x) const {
    std::size_t first = x.find(separator);
    if (first == std::string_view::npos) return std::nullopt;
    if (x.find(separator, first + 1) != std::string_view::npos) return std::nullopt;
    std::string_view before = x.substr(0, first);
    std::string_view after = x.substr(first + 1);
    if (before != after) return std::nullopt;
    return std::string(before);
}

std::optional<std::string> f1_oracle(std::string_view x) {
    static const F1Oracle oracle;
    return oracle(x);
}

std::vector<std::string> enumerate_words(const std::vector<char>& alphabet, int max_len) {
    std::vector<std::string> words;
    words.emplace_back();
    std::size_t level_begin = 0;
    for (int len = 1; len <= max_len; ++len) {
        std::size_t level_end = words.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (char c : alphabet) words.push_back(words[i] + c);
        level_begin = level_end;
    }
    return words;
}

BoundedErrorReport exhaustive_check(const MachineSpec& spec, const F1Oracle& oracle, int max_len,
                                    double threshold, unsigned workers) {
    if (max_len < 0) throw std::invalid_argument("exhaustive_check: max_len must be >= 0");
    std::set<char> oracle_alphabet(oracle.letters.begin(), oracle.letters.end());
    oracle_alphabet.insert(oracle.separator);
    std::set<char> machine_alphabet(spec.input_alphabet.begin(), spec.input_alphabet.end());
    if (oracle_alphabet != machine_alphabet)
        throw MachineError("oracle alphabet does not match the machine's input alphabet");
    require_valid(spec);

    std::vector<std::string> words = enumerate_words(oracle.alphabet(), max_len);
    std::vector<RunResult> results(words.size());

    unsigned n_workers = workers != 0 ? workers : std::thread::hardware_concurrency();
    n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(words.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < words.size(); ++i)
            results[i] = run_prevalidated(spec, words[i]);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto work = [&]() {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= words.size()) return;
                try {
                    results[i] = run_prevalidated(spec, words[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    BoundedErrorReport report;
    report.machine = spec.name;
    report.max_len = max_len;
    report.threshold = threshold;
    const double cutoff = threshold - 1e-9;
    for (std::size_t i = 0; i < words.size(); ++i) {
        ++report.checked_inputs;
        const RunResult& observed = results[i];
        std::optional<std::string> expected = oracle(words[i]);
        if (expected) {
            ++report.defined_inputs;
            auto it = observed.accept_dist.find(*expected);
            double p = it == observed.accept_dist.end() ? 0.0 : it->second;
            if (!report.min_accept_on_defined || p < *report.min_accept_on_defined)
                report.min_accept_on_defined = p;
            if (p < cutoff) report.violations.push_back({words[i], expected, observed});
        } else {
            ++report.undefined_inputs;
            double p = observed.reject_prob;
            if (!report.min_reject_on_undefined || p < *report.min_reject_on_undefined)
                report.min_reject_on_undefined = p;
            if (p < cutoff) report.violations.push_back({words[i], std::nullopt, observed});
        }
    }
    return report;
}

std::string to_json(const BoundedErrorReport& report, std::size_t max_violations) {
    nlohmann::ordered_json j;
    j["machine"] = report.machine;
    j["max_len"] = report.max_len;
    j["threshold"] = detail::sig12(report.threshold);
    j["checked_inputs"] = report.checked_inputs;
    j["defined_inputs"] = report.defined_inputs;
    j["undefined_inputs"] = report.undefined_inputs;
    if (report.min_accept_on_defined)
        j["min_accept_on_defined"] = detail::sig12(*report.min_accept_on_defined);
    else
        j["min_accept_on_defined"] = nullptr;
    if (report.min_reject_on_undefined)
        j["min_reject_on_undefined"] = detail::sig12(*report.min_reject_on_undefined);
    else
        j["min_reject_on_undefined"] = nullptr;
    j["violations_total"] = report.violations.size();
    nlohmann::ordered_json violations = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.violations.size() && i < max_violations; ++i) {
        const auto& v = report.violations[i];
        nlohmann::ordered_json entry;
        entry["input"] = v.input;
        entry["expected"] = v.expected_output ? "defined" : "undefined";
        if (v.expected_output) entry["expected_output"] = *v.expected_output;
        entry["observed"] = nlohmann::ordered_json::parse(to_json(v.observed));
        violations.push_back(std::move(entry));
    }
    j["violations"] = std::move(violations);
    return j.dump();
}

std::optional<MachineSpec> builtin_machine(std::string_view name) {
    if (name == "f1") return build_f1_qfst();
    if (name == "f1-classical") return build_f1_stochastic_analog();
    return std::nullopt;
}

std::vector<std::string> builtin_names() {
    return {"f1", "f1-classical"};
}

}  // namespace qfst
