#include "qfst/amplitude.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <system_error>

namespace qfst {

namespace {

enum class TokenType {
    integer,
    decimal,
    plus,
    minus,
    star,
    slash,
    lparen,
    rparen,
    imaginary,
    sqrt_kw,
    end,
};

struct Token {
    TokenType type = TokenType::end;
    double value = 0.0;
    std::size_t offset = 0;
};

std::vector<Token> lex(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char c = text[pos];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
            continue;
        }
        std::size_t start = pos;
        switch (c) {
            case '+': tokens.push_back({TokenType::plus, 0.0, start}); ++pos; continue;
            case '-': tokens.push_back({TokenType::minus, 0.0, start}); ++pos; continue;
            case '*': tokens.push_back({TokenType::star, 0.0, start}); ++pos; continue;
            case '/': tokens.push_back({TokenType::slash, 0.0, start}); ++pos; continue;
            case '(': tokens.push_back({TokenType::lparen, 0.0, start}); ++pos; continue;
            case ')': tokens.push_back({TokenType::rparen, 0.0, start}); ++pos; continue;
            default: break;
        }
        if (c >= '0' && c <= '9') {
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            bool is_decimal = false;
            if (pos < text.size() && text[pos] == '.') {
                is_decimal = true;
                ++pos;
                if (pos >= text.size() || text[pos] < '0' || text[pos] > '9')
                    throw ExprError("expected digits after decimal point", pos);
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            }
            if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
                std::size_t exp_pos = pos + 1;
                if (exp_pos < text.size() && (text[exp_pos] == '+' || text[exp_pos] == '-')) ++exp_pos;
                if (exp_pos < text.size() && text[exp_pos] >= '0' && text[exp_pos] <= '9') {
                    is_decimal = true;
                    pos = exp_pos;
                    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
                }
            }
            double value = 0.0;
            if (is_decimal) {
                auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, value);
                if (ec != std::errc() || ptr != text.data() + pos)
                    throw ExprError("malformed numeric literal", start);
            } else {
                unsigned long long integral = 0;
                auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, integral);
                if (ec != std::errc() || ptr != text.data() + pos ||
                    integral > 9007199254740992ull)  // 2^53
                    throw ExprError("integer literal exceeds exact double range", start);
                value = static_cast<double>(integral);
            }
            tokens.push_back({is_decimal ? TokenType::decimal : TokenType::integer, value, start});
            continue;
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            while (pos < text.size() &&
                   ((text[pos] >= 'a' && text[pos] <= 'z') || (text[pos] >= 'A' && text[pos] <= 'Z')))
                ++pos;
            std::string_view word = text.substr(start, pos - start);
            if (word == "i") {
                tokens.push_back({TokenType::imaginary, 0.0, start});
            } else if (word == "sqrt") {
                tokens.push_back({TokenType::sqrt_kw, 0.0, start});
            } else {
                throw ExprError("unknown identifier '" + std::string(word) + "'", start);
            }
            continue;
        }
        throw ExprError(std::string("unexpected character '") + c + "'", start);
    }
    tokens.push_back({TokenType::end, 0.0, text.size()});
    return tokens;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    AmplitudeExpr parse() {
        AmplitudeExpr e = parse_expr();
        if (peek().type != TokenType::end)
            throw ExprError("unexpected trailing input", peek().offset);
        return e;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    Token advance() { return tokens_[pos_++]; }

    AmplitudeExpr parse_expr() {
        AmplitudeExpr left = parse_term();
        while (peek().type == TokenType::plus || peek().type == TokenType::minus) {
            bool is_add = advance().type == TokenType::plus;
            AmplitudeExpr right = parse_term();
            AmplitudeExpr node;
            node.kind = is_add ? AmplitudeExpr::Kind::add : AmplitudeExpr::Kind::subtract;
            node.operands.push_back(std::move(left));
            node.operands.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    AmplitudeExpr parse_term() {
        AmplitudeExpr left = parse_factor();
        while (peek().type == TokenType::star || peek().type == TokenType::slash) {
            bool is_mul = advance().type == TokenType::star;
            AmplitudeExpr right = parse_factor();
            AmplitudeExpr node;
            node.kind = is_mul ? AmplitudeExpr::Kind::multiply : AmplitudeExpr::Kind::divide;
            node.operands.push_back(std::move(left));
            node.operands.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    AmplitudeExpr parse_factor() {
        const Token& tok = peek();
        switch (tok.type) {
            case TokenType::integer:
            case TokenType::decimal: {
                Token t = advance();
                AmplitudeExpr node;
                node.kind = t.type == TokenType::integer ? AmplitudeExpr::Kind::integer
                                                         : AmplitudeExpr::Kind::decimal;
                node.number = t.value;
                return node;
            }
            case TokenType::imaginary: {
                advance();
                AmplitudeExpr node;
                node.kind = AmplitudeExpr::Kind::imaginary;
                return node;
            }
            case TokenType::minus: {
                advance();
                AmplitudeExpr node;
                node.kind = AmplitudeExpr::Kind::negate;
                node.operands.push_back(parse_factor());
                return node;
            }
            case TokenType::sqrt_kw: {
                advance();
                expect(TokenType::lparen, "expected '(' after sqrt");
                AmplitudeExpr node;
                node.kind = AmplitudeExpr::Kind::square_root;
                node.operands.push_back(parse_expr());
                expect(TokenType::rparen, "expected ')'");
                return node;
            }
            case TokenType::lparen: {
                advance();
                AmplitudeExpr inner = parse_expr();
                expect(TokenType::rparen, "expected ')'");
                return inner;
            }
            case TokenType::end:
                throw ExprError("unexpected end of expression", tok.offset);
            default:
                throw ExprError("expected a value", tok.offset);
        }
    }

    void expect(TokenType type, const char* message) {
        if (peek().type != type) throw ExprError(message, peek().offset);
        advance();
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

int precedence(AmplitudeExpr::Kind kind) {
    switch (kind) {
        case AmplitudeExpr::Kind::add:
        case AmplitudeExpr::Kind::subtract:
            return 1;
        case AmplitudeExpr::Kind::multiply:
        case AmplitudeExpr::Kind::divide:
            return 2;
        default:
            return 3;  // factors
    }
}

void render(const AmplitudeExpr& e, std::string& out) {
    auto child = [&out](const AmplitudeExpr& c, int min_prec) {
        if (precedence(c.kind) < min_prec) {
            out += '(';
            render(c, out);
            out += ')';
        } else {
            render(c, out);
        }
    };
    switch (e.kind) {
        case AmplitudeExpr::Kind::integer:
        case AmplitudeExpr::Kind::decimal:
            out += render_real(e.number);
            break;
        case AmplitudeExpr::Kind::imaginary:
            out += 'i';
            break;
        case AmplitudeExpr::Kind::add:
            child(e.operands[0], 1);
            out += '+';
            child(e.operands[1], 2);  // right side of +/- may not be another sum
            break;
        case AmplitudeExpr::Kind::subtract:
            child(e.operands[0], 1);
            out += '-';
            child(e.operands[1], 2);
            break;
        case AmplitudeExpr::Kind::multiply:
            child(e.operands[0], 2);
            out += '*';
            child(e.operands[1], 3);  // right side of * and / must be a factor
            break;
        case AmplitudeExpr::Kind::divide:
            child(e.operands[0], 2);
            out += '/';
            child(e.operands[1], 3);
            break;
        case AmplitudeExpr::Kind::negate:
            out += '-';
            child(e.operands[0], 3);
            break;
        case AmplitudeExpr::Kind::square_root:
            out += "sqrt(";
            render(e.operands[0], out);
            out += ')';
            break;
    }
}

Complex eval_node(const AmplitudeExpr& e) {
    switch (e.kind) {
        case AmplitudeExpr::Kind::integer:
        case AmplitudeExpr::Kind::decimal:
            return Complex(e.number, 0.0);
        case AmplitudeExpr::Kind::imaginary:
            return Complex(0.0, 1.0);
        case AmplitudeExpr::Kind::add:
            return eval_node(e.operands[0]) + eval_node(e.operands[1]);
        case AmplitudeExpr::Kind::subtract:
            return eval_node(e.operands[0]) - eval_node(e.operands[1]);
        case AmplitudeExpr::Kind::multiply:
            return eval_node(e.operands[0]) * eval_node(e.operands[1]);
        case AmplitudeExpr::Kind::divide: {
            Complex num = eval_node(e.operands[0]);
            Complex den = eval_node(e.operands[1]);
            if (den.real() == 0.0 && den.imag() == 0.0) throw EvalError("division by zero");
            return num / den;
        }
        case AmplitudeExpr::Kind::negate:
            return -eval_node(e.operands[0]);
        case AmplitudeExpr::Kind::square_root: {
            Complex arg = eval_node(e.operands[0]);
            if (arg.imag() != 0.0) throw EvalError("sqrt of a non-real value");
            if (arg.real() < 0.0) throw EvalError("sqrt of a negative value");
            return Complex(std::sqrt(arg.real()), 0.0);
        }
    }
    throw EvalError("malformed expression node");
}

}  // namespace

AmplitudeExpr parse_amplitude(std::string_view text) {
    return Parser(lex(text)).parse();
}

Complex eval_amplitude(const AmplitudeExpr& expr) {
    Complex v = eval_node(expr);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw EvalError("expression does not evaluate to a finite value");
    return v;
}

std::string to_string(const AmplitudeExpr& expr) {
    std::string out;
    render(expr, out);
    return out;
}

Complex parse_and_eval(std::string_view text) {
    return eval_amplitude(parse_amplitude(text));
}

std::string render_real(double value) {
    assert(std::isfinite(value));
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    assert(ec == std::errc());
    return std::string(buf, ptr);
}

std::string render_complex(Complex value) {
    double re = value.real();
    double im = value.imag();
    if (im == 0.0) return render_real(re);
    std::string imag_part = render_real(im) + "*i";
    if (re == 0.0) return imag_part;
    if (im < 0.0) return render_real(re) + "-" + render_real(-im) + "*i";
    return render_real(re) + "+" + imag_part;
}

}  // namespace qfst
