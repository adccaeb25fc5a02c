#include "qfst/simulator.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "json_util.hpp"

namespace qfst {

namespace {

double total_mass(const Superposition& sup, bool quantum) {
    double total = 0.0;
    for (const auto& [cfg, amp] : sup) {
        (void)cfg;
        total += quantum ? std::norm(amp) : amp.real();
    }
    return total;
}

void prune(Superposition& sup) {
    for (auto it = sup.begin(); it != sup.end();) {
        if (std::abs(it->second) < prune_threshold)
            it = sup.erase(it);
        else
            ++it;
    }
}

// One transition. Amplitudes accumulate across source configurations within
// each element; distinct elements are distinct measurement branches, so
// their accept/reject masses add incoherently. All continue-tagged elements
// feed the single returned superposition.
void step_core(const MachineSpec& spec, const OperationSet& set, const Superposition& sup,
               char symbol, bool quantum, Superposition& next, StepEvents& events) {
    const int n = spec.num_states();
    for (const auto& elem : set.elements) {
        Superposition halted;  // scratch for accept/reject accumulation
        Superposition& target = elem.outcome == Outcome::continue_ ? next : halted;
        for (const auto& [cfg, amp] : sup) {
            const auto& [source, out] = cfg;
            const std::string& emitted = spec.emission_for(source, symbol);
            const std::string* out_next = &out;
            std::string appended;
            if (!emitted.empty()) {
                appended = out + emitted;
                out_next = &appended;
            }
            for (int t = 0; t < n; ++t) {
                Complex m = elem.matrix(t, source);
                if (m.real() == 0.0 && m.imag() == 0.0) continue;
                target[{t, *out_next}] += m * amp;
            }
        }
        if (elem.outcome == Outcome::continue_) continue;
        prune(halted);
        for (const auto& [cfg, amp] : halted) {
            double mass = quantum ? std::norm(amp) : amp.real();
            if (elem.outcome == Outcome::accept)
                events.accept_events[cfg.second] += mass;
            else
                events.reject_prob += mass;
        }
    }
    prune(next);
}

RunResult run_core(const MachineSpec& spec, std::string_view word, bool quantum) {
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (!spec.is_input_symbol(word[i])) {
            std::ostringstream os;
            os << "illegal character '" << word[i] << "' at position " << (i + 1)
               << " (not in the input alphabet)";
            throw SimulationError(os.str());
        }
    }
    RunResult result;
    result.input = std::string(word);
    Superposition sup = initial_superposition(spec);
    auto feed = [&](char symbol) {
        auto it = spec.operations.find(symbol);
        if (it == spec.operations.end())
            throw SimulationError(std::string("no operation for symbol '") + symbol + "'");
        Superposition next;
        StepEvents events;
        step_core(spec, it->second, sup, symbol, quantum, next, events);
        sup = std::move(next);
        for (const auto& [out, p] : events.accept_events) result.accept_dist[out] += p;
        result.reject_prob += events.reject_prob;
    };
    feed(left_marker);
    for (char c : word) feed(c);
    feed(right_marker);
    result.unresolved_prob = total_mass(sup, quantum);
    return result;
}

}  // namespace

double StepEvents::accept_total() const {
    double total = 0.0;
    for (const auto& [out, p] : accept_events) {
        (void)out;
        total += p;
    }
    return total;
}

double RunResult::accept_total() const {
    double total = 0.0;
    for (const auto& [out, p] : accept_dist) {
        (void)out;
        total += p;
    }
    return total;
}

double RunResult::total() const {
    return accept_total() + reject_prob + unresolved_prob;
}

Superposition initial_superposition(const MachineSpec& spec) {
    Superposition sup;
    sup[{spec.initial, std::string()}] = Complex(1.0, 0.0);
    return sup;
}

double squared_norm(const Superposition& sup) {
    return total_mass(sup, true);
}

std::pair<Superposition, StepEvents> step(const MachineSpec& spec, const Superposition& sup,
                                          char symbol) {
    if (spec.mode != Mode::quantum)
        throw SimulationError("step requires a quantum machine; use run_stochastic instead");
    auto it = spec.operations.find(symbol);
    if (it == spec.operations.end())
        throw SimulationError(std::string("no operation for symbol '") + symbol + "'");
    for (const auto& elem : it->second.elements)
        if (elem.matrix.rows() != spec.num_states() || elem.matrix.cols() != spec.num_states())
            throw SimulationError("machine is structurally invalid: matrix dimension mismatch");
    Superposition next;
    StepEvents events;
    step_core(spec, it->second, sup, symbol, true, next, events);
    return {std::move(next), std::move(events)};
}

RunResult run(const MachineSpec& spec, std::string_view word) {
    if (spec.mode != Mode::quantum)
        throw SimulationError("run requires a quantum machine; use run_stochastic instead");
    require_valid(spec);
    return run_core(spec, word, true);
}

RunResult run_stochastic(const MachineSpec& spec, std::string_view word) {
    if (spec.mode != Mode::stochastic)
        throw SimulationError("run_stochastic requires a stochastic machine; use run instead");
    require_valid(spec);
    return run_core(spec, word, false);
}

RunResult simulate(const MachineSpec& spec, std::string_view word) {
    return spec.mode == Mode::quantum ? run(spec, word) : run_stochastic(spec, word);
}

RunResult run_prevalidated(const MachineSpec& spec, std::string_view word) {
    return run_core(spec, word, spec.mode == Mode::quantum);
}

RecognitionResult recognize(const MachineSpec& spec, std::string_view word) {
    RunResult result = simulate(spec, word);
    RecognitionResult rec;
    rec.accept_prob = result.accept_total();
    rec.reject_prob = result.reject_prob;
    rec.unresolved_prob = result.unresolved_prob;
    return rec;
}

std::map<std::string, std::uint64_t> sample_outcomes(const RunResult& result, std::uint64_t n,
                                                     std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_outcomes: n must be positive");
    std::vector<std::pair<std::string, double>> categories;
    for (const auto& [out, p] : result.accept_dist) categories.emplace_back("accept:" + out, p);
    categories.emplace_back("reject", result.reject_prob);
    categories.emplace_back("unresolved", result.unresolved_prob);

    std::map<std::string, std::uint64_t> counts;
    int last_positive = -1;
    for (std::size_t k = 0; k < categories.size(); ++k) {
        if (categories[k].second > 0.0) {
            counts[categories[k].first] = 0;
            last_positive = static_cast<int>(k);
        }
    }
    if (last_positive < 0)
        throw std::invalid_argument("sample_outcomes: result carries no probability mass");

    std::mt19937_64 rng(seed);
    for (std::uint64_t draw = 0; draw < n; ++draw) {
        // Explicit 53-bit mapping keeps draws identical across platforms.
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double cumulative = 0.0;
        int chosen = last_positive;
        for (std::size_t k = 0; k < categories.size(); ++k) {
            if (categories[k].second <= 0.0) continue;
            cumulative += categories[k].second;
            if (u < cumulative) {
                chosen = static_cast<int>(k);
                break;
            }
        }
        ++counts[categories[chosen].first];
    }
    return counts;
}

std::string to_json(const RunResult& result) {
    nlohmann::ordered_json j;
    j["input"] = result.input;
    nlohmann::ordered_json accept = nlohmann::ordered_json::object();
    for (const auto& [out, p] : result.accept_dist) accept[out] = detail::sig12(p);
    j["accept"] = std::move(accept);
    j["reject"] = detail::sig12(result.reject_prob);
    j["unresolved"] = detail::sig12(result.unresolved_prob);
    return j.dump();
}

std::string to_json(const RecognitionResult& result, std::string_view input) {
    nlohmann::ordered_json j;
    j["input"] = std::string(input);
    j["accept"] = detail::sig12(result.accept_prob);
    j["reject"] = detail::sig12(result.reject_prob);
    j["unresolved"] = detail::sig12(result.unresolved_prob);
    return j.dump();
}

}  // namespace qfst
