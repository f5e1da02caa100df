#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plap {

/// Names an expression may reference. Spatial coordinates, the solution value,
/// the gradient magnitude, and the problem exponents.
enum class Var : std::uint8_t { x1, x2, u, gnorm, p, q, a, b, r };

inline constexpr std::size_t var_count = 9;

std::string_view var_name(Var v) noexcept;
std::optional<Var> var_from_name(std::string_view name) noexcept;

enum class Func : std::uint8_t { abs, min, max, exp, sin, cos };

std::string_view func_name(Func f) noexcept;
int func_arity(Func f) noexcept;

/// Variable values supplied to evaluate(). Unset names raise EvalError when read.
class Bindings {
public:
    Bindings& set(Var v, double value) noexcept {
        values_[static_cast<std::size_t>(v)] = value;
        bound_ |= 1u << static_cast<unsigned>(v);
        return *this;
    }
    bool has(Var v) const noexcept { return (bound_ >> static_cast<unsigned>(v)) & 1u; }
    double get(Var v) const noexcept { return values_[static_cast<std::size_t>(v)]; }

private:
    std::array<double, var_count> values_{};
    std::uint32_t bound_ = 0;
};

/// Immutable arithmetic expression tree.
///
/// Grammar, loosest to tightest binding:
///   + -        left associative
///   * /        left associative
///   unary -
///   ^          right associative; the exponent may carry a unary minus
/// Primary forms are decimal literals, the identifiers of Var, calls of Func,
/// and parenthesised expressions.
class Expression {
public:
    enum class Kind : std::uint8_t { literal, variable, neg, add, sub, mul, div, pow, call };

    struct Node {
        Kind kind = Kind::literal;
        double value = 0.0;      // literal
        Var var = Var::x1;       // variable
        Func func = Func::abs;   // call
        std::vector<Node> args;  // operands, in order
    };

    explicit Expression(Node root);

    const Node& root() const noexcept { return *root_; }

    /// Variables referenced anywhere in the tree, as a bit mask over Var.
    std::uint32_t variables() const noexcept { return vars_; }
    bool uses(Var v) const noexcept { return (vars_ >> static_cast<unsigned>(v)) & 1u; }

    /// Canonical text: every compound subterm parenthesised, literals in
    /// shortest round-trip form. parse(to_string()) reproduces the tree.
    std::string to_string() const;

    bool operator==(const Expression& other) const;

private:
    std::shared_ptr<const Node> root_;
    std::uint32_t vars_ = 0;
};

bool operator==(const Expression::Node& a, const Expression::Node& b);

/// Throws ParseError with the 1-based line and column of the offending token.
Expression parse(std::string_view source);

/// Throws EvalError on a missing binding, division by zero, 0 raised to a
/// negative power, or any non-finite intermediate result.
double evaluate(const Expression& e, const Bindings& bindings);

}  // namespace plap
