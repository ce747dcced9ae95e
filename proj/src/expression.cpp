#include "homs/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

namespace homs {

namespace {

// Value together with its partial derivatives in x1, x2, x3.
struct Dual {
  double v = 0.0;
  std::array<double, 3> d{0.0, 0.0, 0.0};
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r{a.v + b.v, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r{a.v - b.v, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r{a.v * b.v, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r{a.v / b.v, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}
Dual chain(const Dual& a, double f, double df) {
  Dual r{f, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = df * a.d[i];
  return r;
}

Dual power(const Dual& a, const Dual& b) {
  const bool exponent_constant = b.d[0] == 0.0 && b.d[1] == 0.0 && b.d[2] == 0.0;
  if (exponent_constant) {
    const double f = std::pow(a.v, b.v);
    const double df = (b.v == 0.0) ? 0.0 : b.v * std::pow(a.v, b.v - 1.0);
    return chain(a, f, df);
  }
  const double f = std::pow(a.v, b.v);
  Dual r{f, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = f * (b.d[i] * std::log(a.v) + b.v * a.d[i] / a.v);
  return r;
}

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Func };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

}  // namespace

struct Expression::Node {
  Op op = Op::Const;
  double constant = 0.0;
  int var = 0;
  Func func = Func::Sin;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  Dual eval(const std::array<double, 3>& x) const {
    switch (op) {
      case Op::Const: return Dual{constant, {}};
      case Op::Var: {
        Dual r{x[var], {}};
        r.d[var] = 1.0;
        return r;
      }
      case Op::Add: return lhs->eval(x) + rhs->eval(x);
      case Op::Sub: return lhs->eval(x) - rhs->eval(x);
      case Op::Mul: return lhs->eval(x) * rhs->eval(x);
      case Op::Div: return lhs->eval(x) / rhs->eval(x);
      case Op::Pow: return power(lhs->eval(x), rhs->eval(x));
      case Op::Neg: return Dual{} - lhs->eval(x);
      case Op::Func: {
        const Dual a = lhs->eval(x);
        switch (func) {
          case Func::Sin: return chain(a, std::sin(a.v), std::cos(a.v));
          case Func::Cos: return chain(a, std::cos(a.v), -std::sin(a.v));
          case Func::Tan: {
            const double t = std::tan(a.v);
            return chain(a, t, 1.0 + t * t);
          }
          case Func::Exp: {
            const double e = std::exp(a.v);
            return chain(a, e, e);
          }
          case Func::Log: return chain(a, std::log(a.v), 1.0 / a.v);
          case Func::Sqrt: {
            const double s = std::sqrt(a.v);
            return chain(a, s, 0.5 / s);
          }
          case Func::Abs: return chain(a, std::abs(a.v), a.v >= 0.0 ? 1.0 : -1.0);
        }
      }
    }
    return Dual{};
  }

  bool depends_on_x() const {
    if (op == Op::Var) return true;
    return (lhs && lhs->depends_on_x()) || (rhs && rhs->depends_on_x());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double c) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Const;
  n->constant = c;
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

// Recursive-descent parser:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | '+' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + s_ + "': " + what + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make_binary(Op::Add, lhs, term());
      else if (accept('-')) lhs = make_binary(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make_binary(Op::Mul, lhs, unary());
      else if (accept('/')) lhs = make_binary(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Neg;
      n->lhs = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make_binary(Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "pi") return make_const(std::numbers::pi);
      if (name == "x1" || name == "x") return make_var(0);
      if (name == "x2" || name == "y") return make_var(1);
      if (name == "x3" || name == "z") return make_var(2);
      static const std::vector<std::pair<std::string, Func>> funcs = {
          {"sin", Func::Sin}, {"cos", Func::Cos},   {"tan", Func::Tan}, {"exp", Func::Exp},
          {"log", Func::Log}, {"sqrt", Func::Sqrt}, {"abs", Func::Abs}};
      for (const auto& [fname, f] : funcs) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Func;
          n->func = f;
          n->lhs = expr();
          if (!accept(')')) fail("missing ')'");
          return n;
        }
      }
      pos_ = start;
      fail("unknown symbol '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  static NodePtr make_var(int i) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Var;
    n->var = i;
    return n;
  }
};

}  // namespace

Expression::Expression() : root_(make_const(0.0)), text_("0") {}

Expression::Expression(double constant) : root_(make_const(constant)) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", constant);
  text_ = buf;
}

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expression::value(const Eigen::Vector2d& x) const {
  return root_->eval({x[0], x[1], 0.0}).v;
}

Eigen::Vector2d Expression::gradient(const Eigen::Vector2d& x) const {
  const Dual d = root_->eval({x[0], x[1], 0.0});
  return {d.d[0], d.d[1]};
}

bool Expression::is_constant() const { return !root_->depends_on_x(); }

Expression weight_from_catalog(const std::string& tag) {
  if (tag == "constant" || tag == "one") return Expression(1.0);
  if (tag == "example1") return Expression::parse("5+sin(4*pi*x1)+sin(4*pi*x2)");
  if (tag == "example1_coupled") return Expression::parse("(x1-0.5)^2*(x2-0.5)^2");
  if (tag == "x3") return Expression::parse("x3");
  if (tag == "1+x3") return Expression::parse("1+x3");
  return Expression::parse(tag);
}

}  // namespace homs
