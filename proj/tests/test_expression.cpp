#include <cmath>
#include <vector>

#include "doctest.h"
#include "sastab/expression.hpp"

using sastab::EvalError;
using sastab::Expression;
using sastab::ParseError;
using sastab::UnknownIdentifier;
using sastab::parse_expression;

namespace {

double eval1(const char* text, double x) {
    const std::vector<double> v{x};
    return parse_expression(text).evaluate(v);
}

std::size_t error_position(const char* text, std::size_t dim = 1) {
    try {
        parse_expression(text, dim);
    } catch (const ParseError& e) {
        return e.position();
    }
    FAIL("expected a parse error for " << text);
    return 0;
}

} // namespace

TEST_CASE("example drift evaluates to -e at x = 1") {
    CHECK(eval1("-(x*exp(abs(x)))", 1.0) == doctest::Approx(-2.718281828459045).epsilon(1e-15));
}

TEST_CASE("powers and precedence") {
    CHECK(eval1("x^2", 3.0) == 9.0);
    CHECK(eval1("-x^2", 3.0) == -9.0);
    CHECK(eval1("2^3^2", 0.0) == 512.0);
    CHECK(eval1("1 - 2 - 3", 0.0) == -4.0);
    CHECK(eval1("8 / 4 / 2", 0.0) == 1.0);
    CHECK(eval1("1 + 2 * 3", 0.0) == 7.0);
    CHECK(eval1("(1 + 2) * 3", 0.0) == 9.0);
    CHECK(eval1("2^-1", 0.0) == 0.5);
    CHECK(eval1("--x", 4.0) == 4.0);
}

TEST_CASE("numbers") {
    CHECK(eval1("1.5e2", 0.0) == 150.0);
    CHECK(eval1(".25", 0.0) == 0.25);
    CHECK(eval1("3.", 0.0) == 3.0);
    CHECK(eval1("2E-1", 0.0) == doctest::Approx(0.2));
}

TEST_CASE("functions") {
    CHECK(eval1("tanh(x)", 2.0) == doctest::Approx(std::tanh(2.0)));
    CHECK(eval1("sin(x) + cos(x)", 0.3) == doctest::Approx(std::sin(0.3) + std::cos(0.3)));
    CHECK(eval1("sqrt(x)", 16.0) == 4.0);
    CHECK(eval1("min(x, 2)", 5.0) == 2.0);
    CHECK(eval1("max(x, 2)", 5.0) == 5.0);
    CHECK(eval1("abs(x)", -3.0) == 3.0);
}

TEST_CASE("coordinates in higher dimension") {
    const auto e = parse_expression("x0^2 + 2*x1 - x2", 3);
    const std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(e.evaluate(v) == 2.0);
    CHECK_THROWS_AS(parse_expression("x", 2), UnknownIdentifier);
    CHECK_THROWS_AS(parse_expression("x3", 3), UnknownIdentifier);
    CHECK_NOTHROW(parse_expression("x0", 1));
}

TEST_CASE("syntax errors carry a position") {
    CHECK(error_position("x +") == 3);
    CHECK(error_position("x**2") == 2);
    CHECK(error_position("(x") == 2);
    CHECK(error_position("x 2") == 2);
    CHECK(error_position("") == 0);
    CHECK(error_position("1 + exp(x, 1)") == 4);
    CHECK_THROWS_WITH_AS(parse_expression("min(x)"), doctest::Contains("syntax error: min takes 2"), ParseError);
    CHECK_THROWS_WITH_AS(parse_expression("x +"), doctest::Contains("syntax error"), ParseError);
}

TEST_CASE("unknown identifiers") {
    CHECK_THROWS_AS(parse_expression("log(x)"), UnknownIdentifier);
    CHECK_THROWS_AS(parse_expression("y + 1"), UnknownIdentifier);
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(eval1("1 / x", 0.0), EvalError);
    CHECK_THROWS_AS(eval1("sqrt(x)", -1.0), EvalError);
    CHECK_THROWS_AS(eval1("x^0.5", -4.0), EvalError);
    CHECK(eval1("x^3", -2.0) == -8.0);
}

TEST_CASE("pretty-print round trip preserves the tree") {
    for (const char* text : {"-(x*exp(abs(x)))", "x^2", "2^3^2", "1 - 2 - 3", "-x^2 + min(x, 3) / 7",
                             "tanh(x) * 0.1", "1e-300 + x", "0.1 + 0.2", "--x", "(1 - x) - (2 - x)"}) {
        const Expression a = parse_expression(text);
        const Expression b = parse_expression(a.to_string());
        CHECK_MESSAGE(a == b, text << " -> " << a.to_string());
        CHECK(b.to_string() == a.to_string());
    }
    CHECK_FALSE(parse_expression("1 - (2 - 3)") == parse_expression("1 - 2 - 3"));
}

TEST_CASE("evaluation is pure") {
    const auto e = parse_expression("x*exp(abs(x))");
    const std::vector<double> v{1.7};
    CHECK(e.evaluate(v) == e.evaluate(v));
}
