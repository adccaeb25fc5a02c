#include "qfst/format.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace qfst {

namespace {

std::string error_prefix(int line, int column) {
    std::ostringstream os;
    os << "line " << line;
    if (column > 0) os << ", column " << column;
    os << ": ";
    return os.str();
}

struct RawLine {
    int number = 0;
    std::string text;  // comment-stripped, trimmed
};

std::string strip(std::string_view text) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    std::size_t end = text.find_last_not_of(" \t\r");
    return std::string(text.substr(begin, end - begin + 1));
}

std::vector<RawLine> significant_lines(std::string_view text) {
    std::vector<RawLine> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        ++number;
        std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string trimmed = strip(raw);
        if (!trimmed.empty()) lines.push_back({number, std::move(trimmed)});
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return lines;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream is(line);
    std::string token;
    while (is >> token) tokens.push_back(token);
    return tokens;
}

struct Section {
    int header_line = 0;
    std::vector<std::string> header_tokens;
    std::vector<RawLine> body;
};

std::vector<Section> group_sections(const std::vector<RawLine>& lines) {
    std::vector<Section> sections;
    for (const auto& line : lines) {
        if (line.text.front() == '[') {
            if (line.text.back() != ']')
                throw ParseError("section header must end with ']'", line.number);
            Section section;
            section.header_line = line.number;
            section.header_tokens = tokenize(line.text.substr(1, line.text.size() - 2));
            if (section.header_tokens.empty())
                throw ParseError("empty section header", line.number);
            sections.push_back(std::move(section));
        } else {
            if (sections.empty())
                throw ParseError("content before the first section header", line.number);
            sections.back().body.push_back(line);
        }
    }
    return sections;
}

struct Entry {
    Complex value;
    std::string expr;
    int line = 0;
};

// entries keyed (target, source)
using EntryMap = std::map<std::pair<int, int>, Entry>;

struct UnitarySection {
    int header_line = 0;
    bool complete_auto = false;
    EntryMap entries;
};

struct KrausElement {
    int header_line = 0;
    Outcome outcome = Outcome::continue_;
    EntryMap entries;
};

class MachineTextParser {
public:
    explicit MachineTextParser(std::string_view text) : text_(text) {}

    MachineSpec parse() {
        auto sections = group_sections(significant_lines(text_));
        if (sections.empty()) throw ParseError("missing [machine] section", 1);
        if (sections.front().header_tokens[0] != "machine")
            throw ParseError("the first section must be [machine]", sections.front().header_line);
        parse_machine_section(sections.front());
        for (std::size_t i = 1; i < sections.size(); ++i) parse_section(sections[i]);
        finish_operations();
        return std::move(spec_);
    }

private:
    // ---- [machine] ----

    void parse_machine_section(const Section& section) {
        machine_line_ = section.header_line;
        if (section.header_tokens.size() != 1)
            throw ParseError("[machine] takes no arguments", section.header_line);
        std::map<std::string, std::pair<std::string, int>> keys;
        for (const auto& line : section.body) {
            std::size_t eq = line.text.find('=');
            if (eq == std::string::npos)
                throw ParseError("expected 'key = value' in [machine]", line.number);
            std::string key = strip(line.text.substr(0, eq));
            std::string value = strip(line.text.substr(eq + 1));
            static const std::set<std::string> known = {"name",   "mode",           "states",
                                                        "initial", "accept",        "reject",
                                                        "input_alphabet", "output_alphabet"};
            if (!known.count(key))
                throw ParseError("unknown [machine] key '" + key + "'", line.number);
            if (!keys.emplace(key, std::make_pair(value, line.number)).second)
                throw ParseError("duplicate [machine] key '" + key + "'", line.number);
        }
        for (const char* required :
             {"name", "mode", "states", "initial", "input_alphabet", "output_alphabet"}) {
            if (!keys.count(required))
                throw ParseError(std::string("missing [machine] key '") + required + "'",
                                 section.header_line);
        }

        auto at = [&](const char* key) -> const std::pair<std::string, int>& { return keys.at(key); };

        spec_.name = at("name").first;
        if (!valid_machine_name(spec_.name))
            throw ParseError("invalid machine name '" + spec_.name + "'", at("name").second);

        auto mode = mode_from_string(at("mode").first);
        if (!mode)
            throw ParseError("mode must be 'quantum' or 'stochastic'", at("mode").second);
        spec_.mode = *mode;

        int states_line = at("states").second;
        for (const auto& name : tokenize(at("states").first)) {
            if (!valid_state_name(name))
                throw ParseError("invalid state name '" + name + "'", states_line);
            if (spec_.state_index(name) >= 0)
                throw ParseError("duplicate state '" + name + "'", states_line);
            spec_.states.push_back(name);
        }
        if (spec_.states.empty()) throw ParseError("machine needs at least one state", states_line);
        spec_.halt.assign(spec_.states.size(), HaltClass::none);

        spec_.initial = spec_.state_index(at("initial").first);
        if (spec_.initial < 0)
            throw ParseError("initial state '" + at("initial").first + "' is not declared",
                             at("initial").second);

        auto assign_halt = [&](const char* key, HaltClass cls) {
            if (!keys.count(key)) return;
            int line = keys.at(key).second;
            for (const auto& name : tokenize(keys.at(key).first)) {
                int idx = spec_.state_index(name);
                if (idx < 0)
                    throw ParseError(std::string(key) + " state '" + name + "' is not declared",
                                     line);
                if (spec_.halt[idx] != HaltClass::none)
                    throw ParseError("state '" + name + "' appears twice in the halting partition",
                                     line);
                spec_.halt[idx] = cls;
            }
        };
        assign_halt("accept", HaltClass::accepting);
        assign_halt("reject", HaltClass::rejecting);

        int in_line = at("input_alphabet").second;
        for (const auto& token : tokenize(at("input_alphabet").first)) {
            if (token.size() != 1 || !valid_symbol_char(token[0], true))
                throw ParseError("invalid input symbol '" + token + "'", in_line);
            if (spec_.is_input_symbol(token[0]))
                throw ParseError("duplicate input symbol '" + token + "'", in_line);
            spec_.input_alphabet.push_back(token[0]);
        }
        int out_line = at("output_alphabet").second;
        for (const auto& token : tokenize(at("output_alphabet").first)) {
            if (token.size() != 1 || !valid_symbol_char(token[0], false))
                throw ParseError("invalid output symbol '" + token + "'", out_line);
            if (spec_.is_output_symbol(token[0]))
                throw ParseError("duplicate output symbol '" + token + "'", out_line);
            spec_.output_alphabet.push_back(token[0]);
        }
    }

    // ---- matrix and output sections ----

    void parse_section(const Section& section) {
        const std::string& kind = section.header_tokens[0];
        if (kind == "machine")
            throw ParseError("duplicate [machine] section", section.header_line);
        if (kind == "unitary")
            parse_unitary_section(section);
        else if (kind == "kraus")
            parse_kraus_section(section);
        else if (kind == "output")
            parse_output_section(section);
        else
            throw ParseError("unknown section '" + kind + "'", section.header_line);
    }

    char section_symbol(const Section& section, const std::string& token) const {
        if (token.size() != 1 || !is_machine_symbol(token[0]))
            throw ParseError("symbol '" + token + "' is not in the input alphabet or a marker",
                             section.header_line);
        return token[0];
    }

    bool is_machine_symbol(char c) const {
        return c == left_marker || c == right_marker || spec_.is_input_symbol(c);
    }

    void parse_unitary_section(const Section& section) {
        if (section.header_tokens.size() != 2)
            throw ParseError("expected [unitary <symbol>]", section.header_line);
        char sym = section_symbol(section, section.header_tokens[1]);
        if (kraus_.count(sym) || unitary_.count(sym))
            throw ParseError(std::string("symbol '") + sym + "' already has a matrix section",
                             section.header_line);
        UnitarySection& unit = unitary_[sym];
        unit.header_line = section.header_line;
        for (const auto& line : section.body) {
            if (line.text.rfind("complete", 0) == 0) {
                auto tokens = tokenize(line.text);
                if (tokens.size() != 3 || tokens[1] != "=" || tokens[2] != "auto")
                    throw ParseError("expected 'complete = auto'", line.number);
                if (spec_.mode != Mode::quantum)
                    throw ParseError("'complete = auto' requires a quantum machine", line.number);
                if (unit.complete_auto)
                    throw ParseError("duplicate 'complete = auto'", line.number);
                unit.complete_auto = true;
                continue;
            }
            parse_entry_line(line, unit.entries);
        }
    }

    void parse_kraus_section(const Section& section) {
        if (section.header_tokens.size() != 4)
            throw ParseError("expected [kraus <symbol> outcome=<o> elem=<k>]", section.header_line);
        char sym = section_symbol(section, section.header_tokens[1]);
        if (unitary_.count(sym))
            throw ParseError(std::string("symbol '") + sym + "' already has a matrix section",
                             section.header_line);
        const std::string& outcome_tok = section.header_tokens[2];
        if (outcome_tok.rfind("outcome=", 0) != 0)
            throw ParseError("expected outcome=<continue|accept|reject>", section.header_line);
        auto outcome = outcome_from_string(outcome_tok.substr(8));
        if (!outcome)
            throw ParseError("outcome must be continue, accept or reject", section.header_line);
        const std::string& elem_tok = section.header_tokens[3];
        if (elem_tok.rfind("elem=", 0) != 0)
            throw ParseError("expected elem=<index>", section.header_line);
        int elem = -1;
        std::string_view digits = std::string_view(elem_tok).substr(5);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), elem);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || elem < 0)
            throw ParseError("elem must be a nonnegative integer", section.header_line);
        auto& group = kraus_[sym];
        if (group.count(elem))
            throw ParseError(std::string("duplicate kraus element ") + std::to_string(elem) +
                                 " for symbol '" + sym + "'",
                             section.header_line);
        KrausElement& element = group[elem];
        element.header_line = section.header_line;
        element.outcome = *outcome;
        for (const auto& line : section.body) parse_entry_line(line, element.entries);
    }

    void parse_entry_line(const RawLine& line, EntryMap& entries) {
        std::size_t arrow = line.text.find("<-");
        if (arrow == std::string::npos)
            throw ParseError("expected '<target> <- <source> : <expr>'", line.number);
        std::size_t colon = line.text.find(':', arrow + 2);
        if (colon == std::string::npos)
            throw ParseError("expected ':' before the amplitude expression", line.number);
        std::string target = strip(line.text.substr(0, arrow));
        std::string source = strip(line.text.substr(arrow + 2, colon - arrow - 2));
        int t = spec_.state_index(target);
        if (t < 0) throw ParseError("unknown target state '" + target + "'", line.number);
        int s = spec_.state_index(source);
        if (s < 0) throw ParseError("unknown source state '" + source + "'", line.number);
        std::string expr_text = line.text.substr(colon + 1);
        AmplitudeExpr expr;
        Complex value;
        try {
            expr = parse_amplitude(expr_text);
            value = eval_amplitude(expr);
        } catch (const ExprError& e) {
            throw ParseError(e.what(), line.number,
                             static_cast<int>(colon + 2 + e.offset()));
        } catch (const EvalError& e) {
            throw ParseError(e.what(), line.number, static_cast<int>(colon + 2));
        }
        auto [it, inserted] = entries.emplace(std::make_pair(t, s), Entry{value, to_string(expr), line.number});
        (void)it;
        if (!inserted)
            throw ParseError("duplicate entry " + target + " <- " + source +
                                 " (first declared on line " + std::to_string(it->second.line) + ")",
                             line.number);
    }

    void parse_output_section(const Section& section) {
        if (section.header_tokens.size() != 1)
            throw ParseError("[output] takes no arguments", section.header_line);
        if (seen_output_)
            throw ParseError("duplicate [output] section", section.header_line);
        seen_output_ = true;
        for (const auto& line : section.body) {
            auto tokens = tokenize(line.text);
            if (tokens.size() != 4 || tokens[2] != "->")
                throw ParseError("expected '<state> <symbol> -> <string|_>'", line.number);
            int state = spec_.state_index(tokens[0]);
            if (state < 0) throw ParseError("unknown state '" + tokens[0] + "'", line.number);
            if (tokens[1].size() != 1 || !is_machine_symbol(tokens[1][0]))
                throw ParseError("symbol '" + tokens[1] + "' is not in the input alphabet or a marker",
                                 line.number);
            char sym = tokens[1][0];
            std::string text = tokens[3] == "_" ? std::string() : tokens[3];
            if (!spec_.is_output_string(text))
                throw ParseError("output string '" + tokens[3] +
                                     "' uses symbols outside the output alphabet",
                                 line.number);
            if (!spec_.emissions.emplace(std::make_pair(state, sym), text).second)
                throw ParseError("duplicate output rule for (" + tokens[0] + ", " + tokens[1] + ")",
                                 line.number);
        }
    }

    // ---- assembly ----

    void finish_operations() {
        for (char sym : spec_.symbols()) {
            auto unit = unitary_.find(sym);
            if (unit != unitary_.end()) {
                spec_.operations[sym] = build_from_matrix(sym, unit->second);
                continue;
            }
            auto group = kraus_.find(sym);
            if (group != kraus_.end()) {
                spec_.operations[sym] = build_from_kraus(sym, group->second);
                continue;
            }
            throw ParseError(std::string("no matrix section for symbol '") + sym + "'",
                             machine_line_);
        }
    }

    OperationSet build_from_matrix(char sym, const UnitarySection& unit) {
        (void)sym;
        const int n = spec_.num_states();
        std::map<std::pair<int, int>, std::string> annotations;
        Matrix m;
        if (unit.complete_auto) {
            std::map<int, Vector> columns;
            for (const auto& [key, entry] : unit.entries) {
                auto [t, s] = key;
                auto it = columns.find(s);
                if (it == columns.end()) it = columns.emplace(s, Vector::Zero(n)).first;
                it->second(t) = entry.value;
            }
            try {
                m = complete_columns_unitary(n, columns);
            } catch (const MachineError& e) {
                throw ParseError(e.what(), unit.header_line);
            }
        } else {
            m = Matrix::Zero(n, n);
            std::set<int> touched;
            for (const auto& [key, entry] : unit.entries) {
                m(key.first, key.second) = entry.value;
                touched.insert(key.second);
            }
            for (int s = 0; s < n; ++s)
                if (!touched.count(s)) m(s, s) = Complex(1.0, 0.0);
        }
        for (const auto& [key, entry] : unit.entries) annotations.emplace(key, entry.expr);
        return split_by_partition(m, spec_.halt, std::move(annotations));
    }

    OperationSet build_from_kraus(char sym, const std::map<int, KrausElement>& group) {
        const int n = spec_.num_states();
        OperationSet set;
        set.from_matrix = false;
        int expected = 0;
        for (const auto& [index, element] : group) {
            if (index != expected)
                throw ParseError(std::string("kraus group for symbol '") + sym +
                                     "' is missing elem=" + std::to_string(expected),
                                 element.header_line);
            ++expected;
            OperationElement out;
            out.outcome = element.outcome;
            out.matrix = Matrix::Zero(n, n);
            for (const auto& [key, entry] : element.entries) {
                out.matrix(key.first, key.second) = entry.value;
                out.entry_exprs.emplace(key, entry.expr);
            }
            set.elements.push_back(std::move(out));
        }
        return set;
    }

    std::string_view text_;
    MachineSpec spec_;
    int machine_line_ = 1;
    bool seen_output_ = false;
    std::map<char, UnitarySection> unitary_;
    std::map<char, std::map<int, KrausElement>> kraus_;
};

void serialize_entries(std::ostringstream& out, const MachineSpec& spec, const Matrix& m,
                       const OperationSet* annotation_source, const OperationElement* element) {
    const int n = spec.num_states();
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            Complex v = m(t, s);
            if (v.real() == 0.0 && v.imag() == 0.0) continue;
            const std::string* expr = nullptr;
            if (element) {
                auto it = element->entry_exprs.find({t, s});
                if (it != element->entry_exprs.end()) expr = &it->second;
            } else if (annotation_source) {
                expr = annotation_source->expr_for(t, s);
            }
            out << spec.states[t] << " <- " << spec.states[s] << " : "
                << (expr ? *expr : render_complex(v)) << "\n";
        }
    }
}

}  // namespace

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(error_prefix(line, column) + message), line_(line), column_(column) {}

MachineSpec parse_machine_text(std::string_view text) {
    return MachineTextParser(text).parse();
}

std::string serialize_machine(const MachineSpec& spec) {
    const int n = spec.num_states();
    std::ostringstream out;
    out << "[machine]\n";
    out << "name = " << spec.name << "\n";
    out << "mode = " << to_string(spec.mode) << "\n";
    auto list_line = [&out](const char* key, const std::vector<std::string>& items) {
        out << key << " =";
        for (const auto& item : items) out << " " << item;
        out << "\n";
    };
    list_line("states", spec.states);
    out << "initial = " << spec.states.at(spec.initial) << "\n";
    list_line("accept", spec.accept_states());
    list_line("reject", spec.reject_states());
    auto symbol_line = [&out](const char* key, const std::vector<char>& items) {
        out << key << " =";
        for (char item : items) out << " " << item;
        out << "\n";
    };
    symbol_line("input_alphabet", spec.input_alphabet);
    symbol_line("output_alphabet", spec.output_alphabet);

    for (char sym : spec.symbols()) {
        auto it = spec.operations.find(sym);
        if (it == spec.operations.end())
            throw MachineError(std::string("cannot serialize: no operation for symbol '") + sym +
                               "'");
        const OperationSet& set = it->second;
        if (set.from_matrix) {
            out << "\n[unitary " << sym << "]\n";
            serialize_entries(out, spec, set.recompose(n), &set, nullptr);
        } else {
            for (std::size_t k = 0; k < set.elements.size(); ++k) {
                const OperationElement& elem = set.elements[k];
                out << "\n[kraus " << sym << " outcome=" << to_string(elem.outcome) << " elem=" << k
                    << "]\n";
                serialize_entries(out, spec, elem.matrix, nullptr, &elem);
            }
        }
    }

    std::vector<char> symbol_order = spec.symbols();
    std::vector<std::pair<std::pair<int, int>, const std::string*>> rules;
    for (const auto& [key, text] : spec.emissions) {
        if (text.empty()) continue;
        auto pos = std::find(symbol_order.begin(), symbol_order.end(), key.second);
        int sym_rank = static_cast<int>(pos - symbol_order.begin());
        rules.push_back({{key.first, sym_rank}, &text});
    }
    std::sort(rules.begin(), rules.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!rules.empty()) {
        out << "\n[output]\n";
        for (const auto& [key, text] : rules)
            out << spec.states.at(key.first) << " " << symbol_order.at(key.second) << " -> " << *text
                << "\n";
    }
    return out.str();
}

}  // namespace qfst
