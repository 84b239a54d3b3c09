#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rareevent {

/// Arithmetic expression in x1..xd: + - * / ^, unary minus, parentheses, numbers, pi, and
/// the functions min, max (two or more arguments), abs, sin, cos, sqrt, exp, log.
/// Evaluation is const and safe to call concurrently.
class Expression {
 public:
  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(const std::string& text, std::size_t dim);

  double evaluate(std::span<const double> x) const;
  std::size_t dim() const { return dim_; }
  const std::string& text() const { return text_; }

 private:
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Min, Max, Abs, Sin, Cos, Sqrt, Exp, Log };
  struct Node {
    Op op;
    double value = 0.0;          // Const
    std::size_t index = 0;       // Var
    std::vector<std::size_t> args;
  };
  friend class ExpressionParser;

  double eval(std::size_t node, std::span<const double> x) const;

  std::string text_;
  std::size_t dim_ = 0;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

}  // namespace rareevent
