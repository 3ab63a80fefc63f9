#include "nshift/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>

#include "nshift/error.hpp"

namespace nshift::expr {

struct Node {
  Op op = Op::Constant;
  double value = 0.0;
  std::string name;
  std::size_t index = 0;
  Func func = Func::Sin;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
  std::size_t offset = 0;
};

namespace {

constexpr std::array<std::pair<Func, std::string_view>, 7> kFuncs{{
    {Func::Sin, "sin"},
    {Func::Cos, "cos"},
    {Func::Tan, "tan"},
    {Func::Exp, "exp"},
    {Func::Ln, "ln"},
    {Func::Sqrt, "sqrt"},
    {Func::Abs, "abs"},
}};

const std::shared_ptr<const Node>& zero_node() {
  static const auto node = std::make_shared<const Node>();
  return node;
}

}  // namespace

std::string_view func_name(Func f) {
  for (const auto& [func, name] : kFuncs) {
    if (func == f) return name;
  }
  return "?";
}

std::optional<Func> func_from_name(std::string_view name) {
  for (const auto& [func, n] : kFuncs) {
    if (n == name) return func;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Variables

Variables::Variables(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (names_[i] == names_[j]) {
        throw Error("duplicate variable \"" + names_[i] + "\"");
      }
    }
  }
}

std::optional<std::size_t> Variables::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

Variables tangent_variables(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("v" + std::to_string(i));
  return Variables(std::move(names));
}

Variables coordinate_variables(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return Variables(std::move(names));
}

Variables parameter_variables(int count) {
  std::vector<std::string> names;
  for (int i = 1; i <= count; ++i) names.push_back("u" + std::to_string(i));
  return Variables(std::move(names));
}

// ---------------------------------------------------------------------------
// Expr handle

Expr::Expr() : node_(zero_node()) {}

Expr Expr::constant(double value, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = value;
  n->offset = offset;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name, std::size_t index, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->name = std::move(name);
  n->index = index;
  n->offset = offset;
  return Expr(std::move(n));
}

Expr Expr::negate(Expr a, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Negate;
  n->a = std::move(a.node_);
  n->offset = offset;
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr a, Expr b, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  n->offset = offset;
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, double exponent, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Power;
  n->value = exponent;
  n->a = std::move(base.node_);
  n->offset = offset;
  return Expr(std::move(n));
}

Expr Expr::apply(Func f, Expr a, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Function;
  n->func = f;
  n->a = std::move(a.node_);
  n->offset = offset;
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::index() const { return node_->index; }
Func Expr::func() const { return node_->func; }
Expr Expr::lhs() const { return node_->a ? Expr(node_->a) : Expr(); }
Expr Expr::rhs() const { return node_->b ? Expr(node_->b) : Expr(); }
std::size_t Expr::offset() const { return node_->offset; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Subtract, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Multiply, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Divide, a, b); }
Expr operator-(const Expr& a) { return Expr::negate(a); }
Expr pow(const Expr& base, double exponent) { return Expr::power(base, exponent); }
Expr apply(Func f, const Expr& a) { return Expr::apply(f, a); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, const Variables& vars) : src_(src), vars_(vars) {}

  Expr run() {
    skip_space();
    if (pos_ >= src_.size()) fail("empty expression");
    Expr e = parse_expr();
    skip_space();
    if (pos_ < src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& detail) const {
    throw ParseError("syntax error at byte " + std::to_string(pos_) +
                         (detail.empty() ? "" : ": " + detail),
                     pos_);
  }

  void skip_space() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
            src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      skip_space();
      std::size_t at = pos_;
      if (accept('+')) {
        lhs = Expr::binary(Op::Add, lhs, parse_term(), at);
      } else if (accept('-')) {
        lhs = Expr::binary(Op::Subtract, lhs, parse_term(), at);
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      skip_space();
      std::size_t at = pos_;
      if (accept('*')) {
        lhs = Expr::binary(Op::Multiply, lhs, parse_factor(), at);
      } else if (accept('/')) {
        lhs = Expr::binary(Op::Divide, lhs, parse_factor(), at);
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    skip_space();
    std::size_t at = pos_;
    if (accept('-')) return Expr::negate(parse_factor(), at);
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_space();
    std::size_t at = pos_;
    if (accept('^')) return Expr::power(base, parse_exponent(), at);
    return base;
  }

  double parse_exponent() {
    bool negative = accept('-');
    skip_space();
    if (pos_ >= src_.size() || !starts_number(src_[pos_])) {
      fail("exponent must be a numeric literal");
    }
    double value = parse_number();
    if (accept('^')) value = std::pow(value, parse_exponent());
    return negative ? -value : value;
  }

  static bool starts_number(char c) {
    return (c >= '0' && c <= '9') || c == '.';
  }
  static bool is_alpha(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  double parse_number() {
    std::size_t start = pos_;
    std::size_t end = pos_;
    bool digits = false;
    while (end < src_.size() && is_digit(src_[end])) { ++end; digits = true; }
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && is_digit(src_[end])) { ++end; digits = true; }
    }
    if (!digits) fail("malformed number");
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t k = end + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && is_digit(src_[k])) {
        while (k < src_.size() && is_digit(src_[k])) ++k;
        end = k;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + end, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + end) {
      fail("malformed number");
    }
    pos_ = end;
    return value;
  }

  Expr parse_atom() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    std::size_t at = pos_;
    char c = src_[pos_];
    if (starts_number(c)) return Expr::constant(parse_number(), at);
    if (is_alpha(c)) {
      std::size_t end = pos_ + 1;
      while (end < src_.size() &&
             (is_alpha(src_[end]) || is_digit(src_[end]) || src_[end] == '_')) {
        ++end;
      }
      std::string_view ident = src_.substr(pos_, end - pos_);
      pos_ = end;
      if (auto f = func_from_name(ident)) {
        if (!accept('(')) fail("expected '(' after function name");
        Expr arg = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return Expr::apply(*f, arg, at);
      }
      auto idx = vars_.index_of(ident);
      if (!idx) throw UnknownIdentifierError(std::string(ident), at);
      return Expr::variable(std::string(ident), *idx, at);
    }
    if (accept('(')) {
      Expr inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail("unexpected character");
  }

  std::string_view src_;
  const Variables& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source, const Variables& vars) {
  return Parser(source, vars).run();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double apply_power(double base, double exponent, std::size_t offset) {
  if (exponent == 1.0) return base;
  if (exponent == 2.0) return base * base;
  if (base == 0.0 && exponent < 0.0) {
    throw DomainError("division by zero in power", offset);
  }
  if (base < 0.0 && exponent != std::floor(exponent)) {
    throw DomainError("negative base with non-integer exponent", offset);
  }
  return std::pow(base, exponent);
}

double apply_func(Func f, double a, std::size_t offset) {
  switch (f) {
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Tan: return std::tan(a);
    case Func::Exp: return std::exp(a);
    case Func::Ln:
      if (!(a > 0.0)) throw DomainError("ln of non-positive value", offset);
      return std::log(a);
    case Func::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative value", offset);
      return std::sqrt(a);
    case Func::Abs: return std::fabs(a);
  }
  return 0.0;
}

double apply_binary(Op op, double a, double b, std::size_t offset) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Subtract: return a - b;
    case Op::Multiply: return a * b;
    case Op::Divide:
      if (b == 0.0) throw DomainError("division by zero", offset);
      return a / b;
    default: return 0.0;
  }
}

template <class Lookup>
double eval_node(const Node& n, const Lookup& lookup) {
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Variable: return lookup(n);
    case Op::Negate: return -eval_node(*n.a, lookup);
    case Op::Add:
    case Op::Subtract:
    case Op::Multiply:
    case Op::Divide:
      return apply_binary(n.op, eval_node(*n.a, lookup), eval_node(*n.b, lookup),
                          n.offset);
    case Op::Power: return apply_power(eval_node(*n.a, lookup), n.value, n.offset);
    case Op::Function: return apply_func(n.func, eval_node(*n.a, lookup), n.offset);
  }
  return 0.0;
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> values) {
  auto lookup = [values](const Node& n) {
    if (n.index >= values.size()) {
      throw Error("no value bound for variable \"" + n.name + "\"");
    }
    return values[n.index];
  };
  return eval_node(e.node(), lookup);
}

double evaluate(const Expr& e, const Bindings& bindings) {
  auto lookup = [&bindings](const Node& n) {
    auto it = bindings.find(n.name);
    if (it == bindings.end()) {
      throw Error("no value bound for variable \"" + n.name + "\"");
    }
    return it->second;
  };
  return eval_node(e.node(), lookup);
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

// Folds when every operand is constant and the operation stays in its domain.
std::optional<double> try_fold(const std::function<double()>& f) {
  try {
    double v = f();
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

Expr make_neg(const Expr& a, std::size_t at) {
  if (a.is_constant()) return Expr::constant(-a.value(), at);
  if (a.op() == Op::Negate) return a.lhs();
  return Expr::negate(a, at);
}

Expr make_binary(Op op, const Expr& a, const Expr& b, std::size_t at) {
  if (a.is_constant() && b.is_constant()) {
    double x = a.value(), y = b.value();
    if (auto v = try_fold([&] { return apply_binary(op, x, y, at); })) {
      return Expr::constant(*v, at);
    }
  }
  switch (op) {
    case Op::Add:
      if (a.is_constant(0.0)) return b;
      if (b.is_constant(0.0)) return a;
      break;
    case Op::Subtract:
      if (b.is_constant(0.0)) return a;
      if (a.is_constant(0.0)) return make_neg(b, at);
      break;
    case Op::Multiply:
      if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0, at);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      break;
    case Op::Divide:
      if (b.is_constant(1.0)) return a;
      if (a.is_constant(0.0) && !b.is_constant()) return Expr::constant(0.0, at);
      break;
    default:
      break;
  }
  return Expr::binary(op, a, b, at);
}

Expr make_power(const Expr& base, double exponent, std::size_t at) {
  if (exponent == 1.0) return base;
  if (exponent == 0.0) return Expr::constant(1.0, at);
  if (base.is_constant()) {
    double x = base.value();
    if (auto v = try_fold([&] { return apply_power(x, exponent, at); })) {
      return Expr::constant(*v, at);
    }
  }
  return Expr::power(base, exponent, at);
}

Expr make_func(Func f, const Expr& a, std::size_t at) {
  if (a.is_constant()) {
    double x = a.value();
    if (auto v = try_fold([&] { return apply_func(f, x, at); })) {
      return Expr::constant(*v, at);
    }
  }
  return Expr::apply(f, a, at);
}

Expr simplify_once(const Expr& e) {
  switch (e.op()) {
    case Op::Constant:
    case Op::Variable:
      return e;
    case Op::Negate:
      return make_neg(simplify_once(e.lhs()), e.offset());
    case Op::Add:
    case Op::Subtract:
    case Op::Multiply:
    case Op::Divide:
      return make_binary(e.op(), simplify_once(e.lhs()), simplify_once(e.rhs()),
                         e.offset());
    case Op::Power:
      return make_power(simplify_once(e.lhs()), e.value(), e.offset());
    case Op::Function:
      return make_func(e.func(), simplify_once(e.lhs()), e.offset());
  }
  return e;
}

}  // namespace

Expr simplify(const Expr& e) {
  Expr current = simplify_once(e);
  for (int pass = 0; pass < 64; ++pass) {
    Expr next = simplify_once(current);
    if (structurally_equal(next, current)) break;
    current = next;
  }
  return current;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr derive(const Expr& e, std::string_view var) {
  auto c = [](double v) { return Expr::constant(v); };
  switch (e.op()) {
    case Op::Constant:
      return c(0.0);
    case Op::Variable:
      return c(e.name() == var ? 1.0 : 0.0);
    case Op::Negate:
      return -derive(e.lhs(), var);
    case Op::Add:
      return derive(e.lhs(), var) + derive(e.rhs(), var);
    case Op::Subtract:
      return derive(e.lhs(), var) - derive(e.rhs(), var);
    case Op::Multiply: {
      const Expr a = e.lhs(), b = e.rhs();
      return derive(a, var) * b + a * derive(b, var);
    }
    case Op::Divide: {
      const Expr a = e.lhs(), b = e.rhs();
      return (derive(a, var) * b - a * derive(b, var)) / pow(b, 2.0);
    }
    case Op::Power: {
      const Expr a = e.lhs();
      return c(e.value()) * pow(a, e.value() - 1.0) * derive(a, var);
    }
    case Op::Function: {
      const Expr a = e.lhs();
      const Expr da = derive(a, var);
      switch (e.func()) {
        case Func::Sin: return apply(Func::Cos, a) * da;
        case Func::Cos: return -(apply(Func::Sin, a) * da);
        case Func::Tan: return da / pow(apply(Func::Cos, a), 2.0);
        case Func::Exp: return apply(Func::Exp, a) * da;
        case Func::Ln: return da / a;
        case Func::Sqrt: return da / (c(2.0) * apply(Func::Sqrt, a));
        // d|a| = a/|a| da; undefined at a = 0, which evaluation reports.
        case Func::Abs: return a / apply(Func::Abs, a) * da;
      }
    }
  }
  return c(0.0);
}

}  // namespace

Expr differentiate(const Expr& e, std::string_view var) {
  return simplify(derive(simplify(e), var));
}

// ---------------------------------------------------------------------------
// Printing and comparison

namespace {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Subtract: return 1;
    case Op::Multiply:
    case Op::Divide: return 2;
    case Op::Negate: return 3;
    case Op::Power: return 4;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Constant:
      if (std::signbit(e.value())) {
        out += "(-" + format_number(-e.value()) + ")";
      } else {
        out += format_number(e.value());
      }
      return;
    case Op::Variable:
      out += e.name();
      return;
    case Op::Negate:
      out += '-';
      print_wrapped(e.lhs(), precedence(e.lhs()) < 3, out);
      return;
    case Op::Power:
      print_wrapped(e.lhs(), precedence(e.lhs()) < 5, out);
      out += '^';
      out += format_number(e.value());
      return;
    case Op::Function:
      out += func_name(e.func());
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
    default: {
      const int p = precedence(e);
      print_wrapped(e.lhs(), precedence(e.lhs()) < p, out);
      switch (e.op()) {
        case Op::Add: out += '+'; break;
        case Op::Subtract: out += '-'; break;
        case Op::Multiply: out += '*'; break;
        default: out += '/'; break;
      }
      print_wrapped(e.rhs(), precedence(e.rhs()) <= p, out);
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (&a.node() == &b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Constant:
      return a.value() == b.value() &&
             std::signbit(a.value()) == std::signbit(b.value());
    case Op::Variable:
      return a.name() == b.name() && a.index() == b.index();
    case Op::Negate:
      return structurally_equal(a.lhs(), b.lhs());
    case Op::Power:
      return a.value() == b.value() && structurally_equal(a.lhs(), b.lhs());
    case Op::Function:
      return a.func() == b.func() && structurally_equal(a.lhs(), b.lhs());
    default:
      return structurally_equal(a.lhs(), b.lhs()) &&
             structurally_equal(a.rhs(), b.rhs());
  }
}

bool depends_on_any(const Expr& e) {
  switch (e.op()) {
    case Op::Constant: return false;
    case Op::Variable: return true;
    case Op::Add:
    case Op::Subtract:
    case Op::Multiply:
    case Op::Divide:
      return depends_on_any(e.lhs()) || depends_on_any(e.rhs());
    default:
      return depends_on_any(e.lhs());
  }
}

bool depends_on(const Expr& e, std::string_view var) {
  switch (e.op()) {
    case Op::Constant: return false;
    case Op::Variable: return e.name() == var;
    case Op::Add:
    case Op::Subtract:
    case Op::Multiply:
    case Op::Divide:
      return depends_on(e.lhs(), var) || depends_on(e.rhs(), var);
    default:
      return depends_on(e.lhs(), var);
  }
}

}  // namespace nshift::expr
