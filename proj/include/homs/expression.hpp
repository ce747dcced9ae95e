#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace homs {

class ExpressionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Scalar field of the macro coordinate parsed from a small arithmetic
/// language: numbers, `pi`, `x1`, `x2`, `x3` (aliases `x`, `y`, `z`),
/// `+ - * / ^`, parentheses and the functions sin, cos, tan, exp, log,
/// sqrt, abs. Gradients are exact (forward-mode differentiation).
class Expression {
public:
  struct Node;

  Expression();  // constant zero
  explicit Expression(double constant);

  static Expression parse(const std::string& text);

  double value(const Eigen::Vector2d& x) const;
  Eigen::Vector2d gradient(const Eigen::Vector2d& x) const;

  /// True when the expression contains no coordinate symbol.
  bool is_constant() const;
  const std::string& text() const { return text_; }

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

/// Named weight functions used by the bundled experiments. Unknown tags are
/// parsed as expressions.
Expression weight_from_catalog(const std::string& tag);

}  // namespace homs
