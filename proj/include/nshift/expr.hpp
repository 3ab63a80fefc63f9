#pragma once

// Scalar expression language: parse, evaluate, differentiate, simplify.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' exponent)?
//   exponent := '-'? number ('^' exponent)?        (folded to a constant)
//   atom   := number | ident | func '(' expr ')' | '(' expr ')'
//   func   := sin|cos|tan|exp|ln|sqrt|abs
//
// Trees are immutable and shared; every operation here is pure.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nshift::expr {

enum class Op {
  Constant,
  Variable,
  Negate,
  Add,
  Subtract,
  Multiply,
  Divide,
  Power,     // base ^ constant exponent
  Function,
};

enum class Func { Sin, Cos, Tan, Exp, Ln, Sqrt, Abs };

std::string_view func_name(Func f);
std::optional<Func> func_from_name(std::string_view name);

/// Ordered, duplicate-free list of identifiers an expression may use.
/// A variable node stores its position in this list.
class Variables {
 public:
  Variables() = default;
  explicit Variables(std::vector<std::string> names);

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& operator[](std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// x1..xn followed by v1..vn.
Variables tangent_variables(int n);
/// x1..xn.
Variables coordinate_variables(int n);
/// u1..u{count}.
Variables parameter_variables(int count);

struct Node;

/// Handle to an immutable expression tree.
class Expr {
 public:
  Expr();  // the constant 0

  static Expr constant(double value, std::size_t offset = 0);
  static Expr variable(std::string name, std::size_t index,
                       std::size_t offset = 0);
  static Expr negate(Expr a, std::size_t offset = 0);
  static Expr binary(Op op, Expr a, Expr b, std::size_t offset = 0);
  static Expr power(Expr base, double exponent, std::size_t offset = 0);
  static Expr apply(Func f, Expr a, std::size_t offset = 0);

  Op op() const;
  double value() const;  // constant value, or the exponent of a Power
  const std::string& name() const;
  std::size_t index() const;
  Func func() const;
  Expr lhs() const;  // operand of unary nodes, base of Power
  Expr rhs() const;
  std::size_t offset() const;

  /// Opaque node access for tree walkers inside the library.
  const Node& node() const { return *node_; }

  bool is_constant() const { return op() == Op::Constant; }
  bool is_constant(double v) const {
    return is_constant() && value() == v;
  }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Builders without simplification.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, double exponent);
Expr apply(Func f, const Expr& a);

using Bindings = std::map<std::string, double, std::less<>>;

/// Throws ParseError (with byte offset) or UnknownIdentifierError.
Expr parse(std::string_view source, const Variables& vars);

/// `values[i]` is the value of the variable with index i. Throws DomainError.
double evaluate(const Expr& e, std::span<const double> values);
/// Looks variables up by name; a missing binding is an Error.
double evaluate(const Expr& e, const Bindings& bindings);

/// Exact partial derivative with respect to the named variable, simplified.
Expr differentiate(const Expr& e, std::string_view var);

/// Constant folding plus x+0, x*1, x*0, x^1 (and friends) to a fixpoint.
Expr simplify(const Expr& e);

/// Canonical text: minimal parentheses, constants printed round-trip exact.
std::string to_string(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// True if any variable node is present.
bool depends_on_any(const Expr& e);
bool depends_on(const Expr& e, std::string_view var);

}  // namespace nshift::expr
