#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qfst/amplitude.hpp"

using qfst::AmplitudeExpr;
using qfst::Complex;
using qfst::parse_and_eval;
using qfst::parse_amplitude;

TEST_CASE("literals and the common machine amplitudes evaluate exactly") {
    CHECK(parse_and_eval("0") == Complex(0.0, 0.0));
    CHECK(parse_and_eval("1/sqrt(2)").real() == doctest::Approx(0.7071067811865476).epsilon(1e-15));
    CHECK(parse_and_eval("1/sqrt(2)").imag() == 0.0);
    Complex v = parse_and_eval("-1/sqrt(2) * i");
    CHECK(v.real() == 0.0);
    CHECK(v.imag() == doctest::Approx(-0.7071067811865476).epsilon(1e-15));
    CHECK(parse_and_eval("1/sqrt(3)").real() == doctest::Approx(0.5773502691896258).epsilon(1e-15));
}

TEST_CASE("grammar precedence and structure") {
    CHECK(parse_and_eval("1+2*3") == Complex(7.0, 0.0));
    CHECK(parse_and_eval("(1+2)*3") == Complex(9.0, 0.0));
    CHECK(parse_and_eval("-2*3") == Complex(-6.0, 0.0));
    CHECK(parse_and_eval("2--3") == Complex(5.0, 0.0));
    CHECK(parse_and_eval("1/2-1/2*i") == Complex(0.5, -0.5));
    CHECK(parse_and_eval("(1+i)*(1-i)") == Complex(2.0, 0.0));
    CHECK(parse_and_eval("sqrt(2)/2").real() ==
          doctest::Approx(parse_and_eval("1/sqrt(2)").real()).epsilon(1e-15));
    CHECK(parse_and_eval("sqrt((1+1)/2)") == Complex(1.0, 0.0));
    CHECK(parse_and_eval("i*i") == Complex(-1.0, 0.0));
}

TEST_CASE("decimal literals parse exactly") {
    CHECK(parse_and_eval("0.5") == Complex(0.5, 0.0));
    CHECK(parse_and_eval("0.70710678118654746") ==
          Complex(0.70710678118654746, 0.0));
    CHECK(parse_and_eval("1e-3") == Complex(1e-3, 0.0));
    CHECK(parse_and_eval("2.5E+2") == Complex(250.0, 0.0));
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(parse_and_eval("sqrt(0-1)"), qfst::EvalError);
    CHECK_THROWS_AS(parse_and_eval("sqrt(i)"), qfst::EvalError);
    CHECK_THROWS_AS(parse_and_eval("1/0"), qfst::EvalError);
    CHECK_THROWS_AS(parse_and_eval("1/(2-2)"), qfst::EvalError);
    CHECK(parse_and_eval("sqrt(0)") == Complex(0.0, 0.0));
}

TEST_CASE("syntax errors carry offsets") {
    CHECK_THROWS_AS(parse_amplitude(""), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("1+"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("sqrt 2"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("(1"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude(")"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("1 2"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("foo"), qfst::ExprError);
    CHECK_THROWS_AS(parse_amplitude("9007199254740993"), qfst::ExprError);  // 2^53 + 1

    try {
        parse_amplitude("1 + %");
        FAIL("expected ExprError");
    } catch (const qfst::ExprError& e) {
        CHECK(e.offset() == 4);
    }
}

TEST_CASE("canonical rendering strips whitespace and is idempotent") {
    CHECK(qfst::to_string(parse_amplitude("1 / sqrt( 2 )")) == "1/sqrt(2)");
    CHECK(qfst::to_string(parse_amplitude("-(1/2)")) == "-(1/2)");
    CHECK(qfst::to_string(parse_amplitude("1+(2+3)")) == "1+(2+3)");
    CHECK(qfst::to_string(parse_amplitude("1+2+3")) == "1+2+3");
    CHECK(qfst::to_string(parse_amplitude("0.50")) == "0.5");
    CHECK(qfst::to_string(parse_amplitude("-1/sqrt(2) * i")) == "-1/sqrt(2)*i");
}

namespace {

// Random expressions restricted so that evaluation never hits a domain error:
// sqrt arguments are nonnegative sums/products, divisors are positive.
AmplitudeExpr random_expr(std::mt19937_64& rng, int depth) {
    auto integer = [](double v) {
        AmplitudeExpr e;
        e.kind = AmplitudeExpr::Kind::integer;
        e.number = v;
        return e;
    };
    auto unary = [](AmplitudeExpr::Kind kind, AmplitudeExpr child) {
        AmplitudeExpr e;
        e.kind = kind;
        e.operands.push_back(std::move(child));
        return e;
    };
    auto binary = [](AmplitudeExpr::Kind kind, AmplitudeExpr l, AmplitudeExpr r) {
        AmplitudeExpr e;
        e.kind = kind;
        e.operands.push_back(std::move(l));
        e.operands.push_back(std::move(r));
        return e;
    };
    if (depth == 0) {
        switch (rng() % 4) {
            case 0: {
                AmplitudeExpr e;
                e.kind = AmplitudeExpr::Kind::imaginary;
                return e;
            }
            case 1:
                return unary(AmplitudeExpr::Kind::square_root, integer(double(rng() % 9)));
            default:
                return integer(double(rng() % 10));
        }
    }
    switch (rng() % 5) {
        case 0:
            return binary(AmplitudeExpr::Kind::add, random_expr(rng, depth - 1),
                          random_expr(rng, depth - 1));
        case 1:
            return binary(AmplitudeExpr::Kind::subtract, random_expr(rng, depth - 1),
                          random_expr(rng, depth - 1));
        case 2:
            return binary(AmplitudeExpr::Kind::multiply, random_expr(rng, depth - 1),
                          random_expr(rng, depth - 1));
        case 3:
            return binary(AmplitudeExpr::Kind::divide, random_expr(rng, depth - 1),
                          integer(double(1 + rng() % 9)));
        default:
            return unary(AmplitudeExpr::Kind::negate, random_expr(rng, depth - 1));
    }
}

}  // namespace

TEST_CASE("property: rendering reaches a fixed point and preserves the value") {
    std::mt19937_64 rng(20240811);
    for (int iter = 0; iter < 300; ++iter) {
        AmplitudeExpr e = random_expr(rng, 3);
        std::string text = qfst::to_string(e);
        AmplitudeExpr reparsed = parse_amplitude(text);
        CHECK(qfst::to_string(reparsed) == text);
        Complex lhs = qfst::eval_amplitude(e);
        Complex rhs = qfst::eval_amplitude(reparsed);
        CHECK(lhs.real() == rhs.real());
        CHECK(lhs.imag() == rhs.imag());
    }
}

TEST_CASE("numeric complex rendering reparses to the exact value") {
    CHECK(qfst::render_complex(Complex(0.5, -0.5)) == "0.5-0.5*i");
    CHECK(qfst::render_complex(Complex(1.0, 0.0)) == "1");
    CHECK(qfst::render_complex(Complex(0.0, 0.0)) == "0");
    CHECK(parse_and_eval(qfst::render_complex(Complex(0.0, 1.0))) == Complex(0.0, 1.0));

    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        double re = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 3.0;
        double im = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 3.0;
        if (iter % 3 == 0) im = 0.0;
        if (iter % 5 == 0) re = 0.0;
        Complex v(re, im);
        Complex back = parse_and_eval(qfst::render_complex(v));
        CHECK(back.real() == v.real());
        CHECK(back.imag() == v.imag());
    }
}
