#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qfst {

using Complex = std::complex<double>;

/// Syntax error in an amplitude expression. `offset` is the 0-based character
/// position in the expression text where the error was detected.
class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& message, std::size_t offset)
        : std::runtime_error(message), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Domain error during evaluation: division by zero, sqrt of a negative or
/// non-real subexpression, or a non-finite result.
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& message) : std::runtime_error(message) {}
};

/// Expression tree for machine amplitudes: integer literals, rational
/// division, addition, subtraction, multiplication, unary negation,
/// sqrt of a nonnegative subexpression, and the imaginary unit `i`.
///
/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := INT | FLOAT | 'i' | 'sqrt' '(' expr ')' | '(' expr ')' | '-' factor
///
/// Hand-written machine files use only integer literals; FLOAT literals
/// (with optional exponent) appear in serializer output for numerically
/// completed matrix columns and parse everywhere.
struct AmplitudeExpr {
    enum class Kind {
        integer,
        decimal,
        imaginary,
        add,
        subtract,
        multiply,
        divide,
        negate,
        square_root,
    };

    Kind kind = Kind::integer;
    double number = 0.0;                  // payload for integer / decimal
    std::vector<AmplitudeExpr> operands;  // 1 for unary, 2 for binary
};

/// Parses an expression; throws ExprError on malformed input.
AmplitudeExpr parse_amplitude(std::string_view text);

/// Evaluates to a double-precision complex value; throws EvalError on
/// domain violations. Deterministic.
Complex eval_amplitude(const AmplitudeExpr& expr);

/// Canonical rendering with minimal parentheses and no whitespace.
/// Idempotent: to_string(parse_amplitude(to_string(e))) == to_string(e).
std::string to_string(const AmplitudeExpr& expr);

Complex parse_and_eval(std::string_view text);

/// Renders a double with up to 17 significant digits; from_chars reads the
/// exact same value back. Locale independent.
std::string render_real(double value);

/// Renders a numeric complex value as a parseable expression,
/// e.g. "0.5", "-0.5*i", "0.25+0.75*i".
std::string render_complex(Complex value);

}  // namespace qfst
