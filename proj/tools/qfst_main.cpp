#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qfst/builtins.hpp"
#include "qfst/format.hpp"
#include "qfst/machine.hpp"
#include "qfst/simulator.hpp"

namespace {

// Thrown for CLI-level problems; `code` becomes the process exit code.
struct CliError {
    int code;
    std::string message;
};

std::string fmt4(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 4);
    if (ec != std::errc()) return "?";
    return std::string(buf, ptr);
}

struct MachineSource {
    std::string file;
    std::string builtin;
};

void add_machine_source(CLI::App* cmd, MachineSource& source, bool allow_file = true) {
    if (allow_file)
        cmd->add_option("machine", source.file, "machine definition file (.qfst)");
    cmd->add_option("--builtin", source.builtin,
                    "built-in machine name (f1, f1-classical)");
}

qfst::MachineSpec load_machine(const MachineSource& source) {
    if (source.file.empty() == source.builtin.empty())
        throw CliError{2, "give exactly one machine source: a file path or --builtin <name>"};
    if (!source.builtin.empty()) {
        auto spec = qfst::builtin_machine(source.builtin);
        if (!spec) {
            std::string names;
            for (const auto& n : qfst::builtin_names()) names += (names.empty() ? "" : ", ") + n;
            throw CliError{2, "unknown builtin '" + source.builtin + "' (available: " + names + ")"};
        }
        return std::move(*spec);
    }
    std::ifstream in(source.file, std::ios::binary);
    if (!in) throw CliError{2, "cannot open '" + source.file + "'"};
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return qfst::parse_machine_text(text.str());
    } catch (const qfst::ParseError& e) {
        throw CliError{2, source.file + ": " + e.what()};
    }
}

unsigned check_workers() {
    const char* env = std::getenv("QFST_THREADS");
    if (!env || !*env) return 0;  // 0 = hardware concurrency
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::string_view(env).size(), value);
    if (ec != std::errc() || *ptr != '\0' || value == 0) {
        std::cerr << "warning: ignoring invalid QFST_THREADS='" << env << "'\n";
        return 0;
    }
    return value;
}

int cmd_validate(const MachineSource& source, bool json) {
    qfst::MachineSpec spec = load_machine(source);
    qfst::ValidationReport report = qfst::validate_machine(spec);
    if (json) {
        nlohmann::ordered_json j;
        j["machine"] = spec.name;
        j["ok"] = report.ok();
        nlohmann::ordered_json issues = nlohmann::ordered_json::array();
        for (const auto& issue : report.issues) {
            nlohmann::ordered_json entry;
            entry["severity"] = issue.severity == qfst::Severity::error ? "error" : "warning";
            entry["location"] = issue.location;
            entry["message"] = issue.message;
            if (issue.residual) entry["residual"] = *issue.residual;
            issues.push_back(std::move(entry));
        }
        j["issues"] = std::move(issues);
        std::cout << j.dump() << "\n";
    } else {
        for (const auto& issue : report.issues) {
            std::cout << (issue.severity == qfst::Severity::error ? "[error] " : "[warning] ")
                      << issue.location << ": " << issue.message;
            if (issue.residual) std::cout << " (residual " << *issue.residual << ")";
            std::cout << "\n";
        }
        std::cout << "machine '" << spec.name << "': " << (report.ok() ? "ok" : "invalid") << "\n";
    }
    return report.ok() ? 0 : 1;
}

void print_run_table(const qfst::RunResult& result) {
    std::cout << "input      : " << result.input << "\n";
    for (const auto& [out, p] : result.accept_dist)
        std::cout << "accept \"" << out << "\" : " << fmt4(p) << "\n";
    std::cout << "reject     : " << fmt4(result.reject_prob) << "\n";
    std::cout << "unresolved : " << fmt4(result.unresolved_prob) << "\n";
}

int cmd_run(const MachineSource& source, const std::string& input, bool json) {
    qfst::MachineSpec spec = load_machine(source);
    qfst::RunResult result = qfst::simulate(spec, input);
    if (json)
        std::cout << qfst::to_json(result) << "\n";
    else
        print_run_table(result);
    return 0;
}

int cmd_recognize(const MachineSource& source, const std::string& input, bool json) {
    qfst::MachineSpec spec = load_machine(source);
    qfst::RecognitionResult rec = qfst::recognize(spec, input);
    if (json) {
        std::cout << qfst::to_json(rec, input) << "\n";
    } else {
        std::cout << "input      : " << input << "\n";
        std::cout << "accept     : " << fmt4(rec.accept_prob) << "\n";
        std::cout << "reject     : " << fmt4(rec.reject_prob) << "\n";
        std::cout << "unresolved : " << fmt4(rec.unresolved_prob) << "\n";
    }
    return 0;
}

int cmd_sample(const MachineSource& source, const std::string& input, std::uint64_t n,
               std::uint64_t seed, bool json) {
    qfst::MachineSpec spec = load_machine(source);
    qfst::RunResult result = qfst::simulate(spec, input);
    auto counts = qfst::sample_outcomes(result, n, seed);
    if (json) {
        nlohmann::ordered_json j;
        j["input"] = input;
        j["n"] = n;
        j["seed"] = seed;
        nlohmann::ordered_json counts_json = nlohmann::ordered_json::object();
        for (const auto& [label, count] : counts) counts_json[label] = count;
        j["counts"] = std::move(counts_json);
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "input      : " << input << "\n";
        std::cout << "n          : " << n << "\n";
        std::cout << "seed       : " << seed << "\n";
        for (const auto& [label, count] : counts)
            std::cout << label << " : " << count << "\n";
    }
    return 0;
}

int cmd_check(const MachineSource& source, int max_len, double threshold, std::string separator,
              std::size_t max_violations, bool json) {
    qfst::MachineSpec spec = load_machine(source);
    if (spec.input_alphabet.empty()) throw CliError{2, "machine has an empty input alphabet"};
    char sep;
    if (separator.empty()) {
        sep = spec.input_alphabet.back();
    } else {
        if (separator.size() != 1) throw CliError{2, "--separator takes a single character"};
        sep = separator[0];
        if (!spec.is_input_symbol(sep))
            throw CliError{2, std::string("separator '") + sep + "' is not an input symbol"};
    }
    qfst::F1Oracle oracle;
    oracle.separator = sep;
    oracle.letters.clear();
    for (char c : spec.input_alphabet)
        if (c != sep) oracle.letters.push_back(c);

    qfst::BoundedErrorReport report =
        qfst::exhaustive_check(spec, oracle, max_len, threshold, check_workers());
    if (json) {
        std::cout << qfst::to_json(report, max_violations) << "\n";
    } else {
        std::cout << "machine    : " << report.machine << "\n";
        std::cout << "threshold  : " << fmt4(report.threshold) << "\n";
        std::cout << report.checked_inputs << " inputs, " << report.violations.size()
                  << " violations\n";
        std::cout << "defined    : " << report.defined_inputs;
        if (report.min_accept_on_defined)
            std::cout << " (min accept on f's output " << fmt4(*report.min_accept_on_defined) << ")";
        std::cout << "\n";
        std::cout << "undefined  : " << report.undefined_inputs;
        if (report.min_reject_on_undefined)
            std::cout << " (min reject " << fmt4(*report.min_reject_on_undefined) << ")";
        std::cout << "\n";
        for (std::size_t i = 0; i < report.violations.size() && i < max_violations; ++i) {
            const auto& v = report.violations[i];
            std::cout << "violation  : \"" << v.input << "\" ";
            if (v.expected_output)
                std::cout << "expected accept on \"" << *v.expected_output << "\", got "
                          << fmt4(v.observed.accept_dist.count(*v.expected_output)
                                      ? v.observed.accept_dist.at(*v.expected_output)
                                      : 0.0);
            else
                std::cout << "expected rejection, got reject " << fmt4(v.observed.reject_prob);
            std::cout << "\n";
        }
        if (report.violations.size() > max_violations)
            std::cout << "... and " << (report.violations.size() - max_violations)
                      << " more violations\n";
    }
    return report.ok() ? 0 : 1;
}

int cmd_export_builtin(const MachineSource& source) {
    if (!source.file.empty())
        throw CliError{2, "export-builtin takes --builtin <name>, not a file"};
    qfst::MachineSpec spec = load_machine(source);
    std::cout << qfst::serialize_machine(spec);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact simulator and verification workbench for one-way quantum "
                 "finite-state transducers"};
    app.require_subcommand(1);

    MachineSource source;
    std::string input;
    bool json = false;
    int max_len = 7;
    double threshold = 2.0 / 3.0;
    std::string separator;
    std::size_t max_violations = 20;
    std::uint64_t sample_n = 10000;
    std::uint64_t sample_seed = 1;

    CLI::App* validate = app.add_subcommand("validate", "structural and numeric machine checks");
    add_machine_source(validate, source);
    validate->add_flag("--json", json, "emit the report as JSON");

    CLI::App* run = app.add_subcommand("run", "run one input word and print the distribution");
    add_machine_source(run, source);
    run->add_option("--input", input, "input word (may be empty)")->required();
    run->add_flag("--json", json, "emit the result as JSON");

    CLI::App* recognize = app.add_subcommand("recognize", "accept/reject/unresolved probabilities");
    add_machine_source(recognize, source);
    recognize->add_option("--input", input, "input word (may be empty)")->required();
    recognize->add_flag("--json", json, "emit the result as JSON");

    CLI::App* sample = app.add_subcommand("sample", "draw outcomes from the exact distribution");
    add_machine_source(sample, source);
    sample->add_option("--input", input, "input word (may be empty)")->required();
    sample->add_option("--n", sample_n, "number of draws")->capture_default_str();
    sample->add_option("--seed", sample_seed, "RNG seed")->capture_default_str();
    sample->add_flag("--json", json, "emit the counts as JSON");

    CLI::App* check = app.add_subcommand(
        "check", "exhaustive bounded-error check over all short inputs");
    add_machine_source(check, source);
    check->add_option("--max-len", max_len, "maximum input length")->capture_default_str();
    check->add_option("--threshold", threshold, "bounded-error threshold")->capture_default_str();
    check->add_option("--separator", separator,
                      "separator symbol (default: the machine's last input symbol)");
    check->add_option("--max-violations", max_violations, "cap on listed violations")
        ->capture_default_str();
    check->add_flag("--json", json, "emit the report as JSON");

    CLI::App* export_builtin =
        app.add_subcommand("export-builtin", "write a built-in machine as canonical .qfst text");
    add_machine_source(export_builtin, source);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(source, json);
        if (app.got_subcommand(run)) return cmd_run(source, input, json);
        if (app.got_subcommand(recognize)) return cmd_recognize(source, input, json);
        if (app.got_subcommand(sample)) return cmd_sample(source, input, sample_n, sample_seed, json);
        if (app.got_subcommand(check))
            return cmd_check(source, max_len, threshold, separator, max_violations, json);
        if (app.got_subcommand(export_builtin)) return cmd_export_builtin(source);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const qfst::SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qfst::MachineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
