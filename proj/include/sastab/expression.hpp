#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sastab/types.hpp"

namespace sastab {

class ParseError : public ConfigError {
public:
    ParseError(const std::string& message, std::size_t position);
    /// 0-based character offset into the source text.
    std::size_t position() const { return position_; }
    /// Message without the position suffix.
    const std::string& detail() const { return detail_; }

private:
    std::string detail_;
    std::size_t position_;
};

class UnknownIdentifier : public ParseError {
public:
    using ParseError::ParseError;
};

/// Division by zero, sqrt of a negative, or a non-real power.
class EvalError : public Error {
public:
    using Error::Error;
};

/// Scalar arithmetic expression over the state coordinates.
///
/// Grammar (precedence high to low): `^` (right-assoc), unary `-`,
/// `* /`, `+ -`. Variables are `x` (only when d = 1) and `x0 .. x{d-1}`.
/// Functions: exp abs tanh sin cos sqrt (one argument), min max (two).
class Expression {
public:
    struct Node;

    Expression() = default;

    /// Parses `text` for a state of dimension `dim`.
    static Expression parse(std::string_view text, std::size_t dim = 1);

    double evaluate(std::span<const double> x) const;
    double operator()(std::span<const double> x) const { return evaluate(x); }

    /// Fully parenthesized source that parses back to the same tree.
    std::string to_string() const;

    std::size_t dim() const { return dim_; }
    bool empty() const { return root_ == nullptr; }

    friend bool operator==(const Expression& a, const Expression& b);

private:
    std::shared_ptr<const Node> root_;
    std::size_t dim_ = 1;
};

Expression parse_expression(std::string_view text, std::size_t dim = 1);

} // namespace sastab
