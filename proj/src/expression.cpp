#include "sastab/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "sastab/trace_io.hpp"

namespace sastab {

ParseError::ParseError(const std::string& message, std::size_t position)
    : ConfigError(message + " at position " + std::to_string(position)), detail_(message), position_(position) {}

namespace {

enum class Func { Exp, Abs, Tanh, Sin, Cos, Sqrt, Min, Max };

struct FuncInfo {
    std::string_view name;
    Func func;
    std::size_t arity;
};

constexpr std::array<FuncInfo, 8> kFunctions{{
    {"exp", Func::Exp, 1},
    {"abs", Func::Abs, 1},
    {"tanh", Func::Tanh, 1},
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"sqrt", Func::Sqrt, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
}};

const FuncInfo* find_function(std::string_view name) {
    for (const auto& info : kFunctions) {
        if (info.name == name) {
            return &info;
        }
    }
    return nullptr;
}

} // namespace

struct Expression::Node {
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

    Kind kind = Kind::Number;
    double number = 0.0;
    std::size_t variable = 0;
    Func func = Func::Exp;
    std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_binary(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->children = {std::move(lhs), std::move(rhs)};
    return node;
}

class Parser {
public:
    Parser(std::string_view text, std::size_t dim) : text_(text), dim_(dim) {}

    NodePtr parse() {
        auto node = expression();
        skip_space();
        if (pos_ != text_.size()) {
            throw ParseError("syntax error: unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        }
        return node;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail_expected(const char* what) {
        if (pos_ >= text_.size()) {
            throw ParseError(std::string("syntax error: expected ") + what + " but reached end of input", pos_);
        }
        throw ParseError(std::string("syntax error: expected ") + what + " but found '" + std::string(1, text_[pos_]) + "'", pos_);
    }

    NodePtr expression() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(Node::Kind::Add, lhs, term());
            } else if (accept('-')) {
                lhs = make_binary(Node::Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(Node::Kind::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = make_binary(Node::Kind::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::Negate;
            node->children = {unary()};
            return node;
        }
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) {
            // right-associative; the exponent may carry a unary minus
            return make_binary(Node::Kind::Pow, base, unary());
        }
        return base;
    }

    NodePtr primary() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail_expected("an operand");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = expression();
            if (!accept(')')) {
                fail_expected("')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        fail_expected("an operand");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        double value = 0.0;
        const auto* first = text_.data() + pos_;
        const auto* last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
        if (ec != std::errc() || ptr == first) {
            throw ParseError("syntax error: malformed number", start);
        }
        pos_ += static_cast<std::size_t>(ptr - first);
        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::Number;
        node->number = value;
        return node;
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = text_.substr(start, pos_ - start);

        if (const FuncInfo* info = find_function(name)) {
            if (!accept('(')) {
                fail_expected("'(' after function name");
            }
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::Call;
            node->func = info->func;
            node->children.push_back(expression());
            while (accept(',')) {
                node->children.push_back(expression());
            }
            if (!accept(')')) {
                fail_expected("')'");
            }
            if (node->children.size() != info->arity) {
                throw ParseError("syntax error: " + std::string(info->name) + " takes " + std::to_string(info->arity) +
                                     " argument(s)",
                                 start);
            }
            return node;
        }

        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::Variable;
        if (name == "x" && dim_ == 1) {
            node->variable = 0;
            return node;
        }
        if (name.size() > 1 && name[0] == 'x') {
            std::size_t index = 0;
            const auto digits = name.substr(1);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
            if (ec == std::errc() && ptr == digits.data() + digits.size() && index < dim_) {
                node->variable = index;
                return node;
            }
        }
        throw UnknownIdentifier("unknown identifier '" + std::string(name) + "'", start);
    }

    std::string_view text_;
    std::size_t dim_;
    std::size_t pos_ = 0;
};

double eval_node(const Node& node, std::span<const double> x) {
    switch (node.kind) {
    case Node::Kind::Number:
        return node.number;
    case Node::Kind::Variable:
        return x[node.variable];
    case Node::Kind::Negate:
        return -eval_node(*node.children[0], x);
    case Node::Kind::Add:
        return eval_node(*node.children[0], x) + eval_node(*node.children[1], x);
    case Node::Kind::Sub:
        return eval_node(*node.children[0], x) - eval_node(*node.children[1], x);
    case Node::Kind::Mul:
        return eval_node(*node.children[0], x) * eval_node(*node.children[1], x);
    case Node::Kind::Div: {
        const double num = eval_node(*node.children[0], x);
        const double den = eval_node(*node.children[1], x);
        if (den == 0.0) {
            throw EvalError("division by zero");
        }
        return num / den;
    }
    case Node::Kind::Pow: {
        const double base = eval_node(*node.children[0], x);
        const double exponent = eval_node(*node.children[1], x);
        if (base < 0.0 && std::trunc(exponent) != exponent) {
            throw EvalError("negative base raised to a non-integer power");
        }
        if (base == 0.0 && exponent < 0.0) {
            throw EvalError("division by zero");
        }
        return std::pow(base, exponent);
    }
    case Node::Kind::Call: {
        const double a = eval_node(*node.children[0], x);
        switch (node.func) {
        case Func::Exp:
            return std::exp(a);
        case Func::Abs:
            return std::abs(a);
        case Func::Tanh:
            return std::tanh(a);
        case Func::Sin:
            return std::sin(a);
        case Func::Cos:
            return std::cos(a);
        case Func::Sqrt:
            if (a < 0.0) {
                throw EvalError("sqrt of a negative number");
            }
            return std::sqrt(a);
        case Func::Min:
            return std::min(a, eval_node(*node.children[1], x));
        case Func::Max:
            return std::max(a, eval_node(*node.children[1], x));
        }
        break;
    }
    }
    return 0.0;
}

const char* binary_symbol(Node::Kind kind) {
    switch (kind) {
    case Node::Kind::Add:
        return " + ";
    case Node::Kind::Sub:
        return " - ";
    case Node::Kind::Mul:
        return " * ";
    case Node::Kind::Div:
        return " / ";
    case Node::Kind::Pow:
        return "^";
    default:
        return "?";
    }
}

void print_node(const Node& node, std::size_t dim, std::string& out) {
    switch (node.kind) {
    case Node::Kind::Number:
        out += format_double(node.number);
        return;
    case Node::Kind::Variable:
        out += dim == 1 ? std::string("x") : "x" + std::to_string(node.variable);
        return;
    case Node::Kind::Negate:
        out += "(-";
        print_node(*node.children[0], dim, out);
        out += ')';
        return;
    case Node::Kind::Call: {
        for (const auto& info : kFunctions) {
            if (info.func == node.func) {
                out += info.name;
            }
        }
        out += '(';
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            print_node(*node.children[i], dim, out);
        }
        out += ')';
        return;
    }
    default:
        out += '(';
        print_node(*node.children[0], dim, out);
        out += binary_symbol(node.kind);
        print_node(*node.children[1], dim, out);
        out += ')';
        return;
    }
}

bool same_tree(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.children.size() != b.children.size()) {
        return false;
    }
    switch (a.kind) {
    case Node::Kind::Number:
        if (a.number != b.number) {
            return false;
        }
        break;
    case Node::Kind::Variable:
        if (a.variable != b.variable) {
            return false;
        }
        break;
    case Node::Kind::Call:
        if (a.func != b.func) {
            return false;
        }
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!same_tree(*a.children[i], *b.children[i])) {
            return false;
        }
    }
    return true;
}

} // namespace

Expression Expression::parse(std::string_view text, std::size_t dim) {
    if (dim == 0) {
        throw ConfigError("expression dimension must be at least 1");
    }
    Expression expr;
    expr.root_ = Parser(text, dim).parse();
    expr.dim_ = dim;
    return expr;
}

double Expression::evaluate(std::span<const double> x) const {
    if (!root_) {
        throw EvalError("empty expression");
    }
    return eval_node(*root_, x);
}

std::string Expression::to_string() const {
    std::string out;
    if (root_) {
        print_node(*root_, dim_, out);
    }
    return out;
}

bool operator==(const Expression& a, const Expression& b) {
    if (!a.root_ || !b.root_) {
        return a.root_ == b.root_;
    }
    return a.dim_ == b.dim_ && same_tree(*a.root_, *b.root_);
}

Expression parse_expression(std::string_view text, std::size_t dim) { return Expression::parse(text, dim); }

} // namespace sastab
