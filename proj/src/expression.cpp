#include "rareevent/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>

#include "rareevent/core.hpp"

namespace rareevent {

class ExpressionParser {
 public:
  ExpressionParser(Expression& e, const std::string& text) : e_(e), s_(text) {}

  std::size_t parse_all() {
    const std::size_t root = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return root;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression: " + what + " at position " + std::to_string(pos_ + 1));
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

  std::size_t add(Op op, std::vector<std::size_t> args = {}, double value = 0.0, std::size_t index = 0) {
    e_.nodes_.push_back({op, value, index, std::move(args)});
    return e_.nodes_.size() - 1;
  }

  std::size_t expr() {
    std::size_t lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = add(Op::Add, {lhs, term()});
      } else if (accept('-')) {
        lhs = add(Op::Sub, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  std::size_t term() {
    std::size_t lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = add(Op::Mul, {lhs, unary()});
      } else if (accept('/')) {
        lhs = add(Op::Div, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than '^', so -x^2 is -(x^2).
  std::size_t unary() {
    if (accept('-')) return add(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  std::size_t power() {
    const std::size_t base = primary();
    if (accept('^')) return add(Op::Pow, {base, unary()});
    return base;
  }

  std::size_t primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const std::size_t inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::size_t number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    return add(Op::Const, {}, v);
  }

  std::size_t identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "pi") return add(Op::Const, {}, std::numbers::pi);
    if (name.size() > 1 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const std::size_t k = std::stoul(name.substr(1));
      if (k < 1 || k > e_.dim_) {
        pos_ = start;
        fail("variable " + name + " outside x1..x" + std::to_string(e_.dim_));
      }
      return add(Op::Var, {}, 0.0, k - 1);
    }
    static const std::pair<const char*, Op> unary_fns[] = {{"abs", Op::Abs}, {"sin", Op::Sin}, {"cos", Op::Cos},
                                                           {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"log", Op::Log}};
    std::optional<Op> op;
    bool variadic = false;
    if (name == "min" || name == "max") {
      op = name == "min" ? Op::Min : Op::Max;
      variadic = true;
    }
    for (const auto& [fn, fop] : unary_fns) {
      if (name == fn) op = fop;
    }
    if (!op) {
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after " + name);
    std::vector<std::size_t> args{expr()};
    while (accept(',')) args.push_back(expr());
    if (!accept(')')) fail("expected ')'");
    if (variadic && args.size() < 2) fail(name + " needs at least two arguments");
    if (!variadic && args.size() != 1) fail(name + " takes one argument");
    return add(*op, std::move(args));
  }

  Expression& e_;
  const std::string& s_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text, std::size_t dim) {
  if (dim == 0) throw ConfigError("expression: dimension must be >= 1");
  Expression e;
  e.text_ = text;
  e.dim_ = dim;
  ExpressionParser parser(e, e.text_);
  e.root_ = parser.parse_all();
  return e;
}

double Expression::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("expression: dimension mismatch");
  return eval(root_, x);
}

double Expression::eval(std::size_t id, std::span<const double> x) const {
  const Node& n = nodes_[id];
  auto arg = [&](std::size_t i) { return eval(n.args[i], x); };
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return x[n.index];
    case Op::Neg:
      return -arg(0);
    case Op::Add:
      return arg(0) + arg(1);
    case Op::Sub:
      return arg(0) - arg(1);
    case Op::Mul:
      return arg(0) * arg(1);
    case Op::Div:
      return arg(0) / arg(1);
    case Op::Pow:
      return std::pow(arg(0), arg(1));
    case Op::Min:
    case Op::Max: {
      double acc = arg(0);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        const double v = arg(i);
        acc = n.op == Op::Min ? std::min(acc, v) : std::max(acc, v);
      }
      return acc;
    }
    case Op::Abs:
      return std::abs(arg(0));
    case Op::Sin:
      return std::sin(arg(0));
    case Op::Cos:
      return std::cos(arg(0));
    case Op::Sqrt:
      return std::sqrt(arg(0));
    case Op::Exp:
      return std::exp(arg(0));
    case Op::Log:
      return std::log(arg(0));
  }
  return std::nan("");
}

}  // namespace rareevent
