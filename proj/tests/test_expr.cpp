#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nshift/error.hpp"
#include "nshift/expr.hpp"

using namespace nshift;
using namespace nshift::expr;

namespace {

const Variables kVars = tangent_variables(2);

double eval(std::string_view src, const Bindings& b) { return evaluate(parse(src, kVars), b); }

// Bounded random expressions: every operation stays inside its domain for
// arguments in [-2, 2], and magnitudes stay moderate.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  Expr make(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
    switch (pick(rng_)) {
      case 0: return var();
      case 1: return Expr::constant(constant());
      case 2: return make(depth - 1) + make(depth - 1);
      case 3: return make(depth - 1) - make(depth - 1);
      case 4: return make(depth - 1) * make(depth - 1);
      case 5: return make(depth - 1) / (Expr::constant(2.5) + apply(Func::Cos, make(depth - 1)));
      case 6: return apply(Func::Sin, make(depth - 1));
      case 7: return apply(Func::Cos, make(depth - 1));
      case 8: return apply(Func::Exp, apply(Func::Sin, make(depth - 1)));
      case 9: return apply(Func::Ln, Expr::constant(2.0) + apply(Func::Sin, make(depth - 1)));
      case 10: return apply(Func::Sqrt, Expr::constant(2.0) + apply(Func::Cos, make(depth - 1)));
      default: {
        std::uniform_int_distribution<int> e(2, 3);
        return pow(apply(Func::Sin, make(depth - 1)) + Expr::constant(0.5), e(rng_));
      }
    }
  }

  Expr var() {
    std::uniform_int_distribution<int> i(0, 3);
    const std::size_t k = static_cast<std::size_t>(i(rng_));
    return Expr::variable(kVars[k], k);
  }

  double constant() {
    std::uniform_int_distribution<int> i(0, 9);
    const int c = i(rng_);
    if (c == 0) return 0.0;
    if (c == 1) return 1.0;
    return std::uniform_real_distribution<double>(0.1, 3.0)(rng_);
  }

  std::vector<double> point() {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    return {u(rng_), u(rng_), u(rng_), u(rng_)};
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

TEST(ExprParse, PowerBindsTighterThanAdd) {
  const Expr e = parse("v1^2 + v2^2", kVars);
  ASSERT_EQ(e.op(), Op::Add);
  EXPECT_EQ(e.lhs().op(), Op::Power);
  EXPECT_EQ(e.lhs().lhs().name(), "v1");
  EXPECT_EQ(e.lhs().value(), 2.0);
  EXPECT_EQ(e.rhs().op(), Op::Power);
  EXPECT_EQ(e.rhs().lhs().name(), "v2");
}

TEST(ExprParse, UnaryMinusBindsTighterThanMultiply) {
  const Expr e = parse("-x1*x2", kVars);
  ASSERT_EQ(e.op(), Op::Multiply);
  EXPECT_EQ(e.lhs().op(), Op::Negate);
  EXPECT_EQ(e.lhs().lhs().name(), "x1");
  EXPECT_EQ(e.rhs().name(), "x2");
}

TEST(ExprParse, PowerBindsTighterThanUnaryMinus) {
  const Expr e = parse("-x1^2", kVars);
  ASSERT_EQ(e.op(), Op::Negate);
  EXPECT_EQ(e.lhs().op(), Op::Power);
}

TEST(ExprParse, LeftAssociativity) {
  const Expr sub = parse("x1-x2-v1", kVars);
  ASSERT_EQ(sub.op(), Op::Subtract);
  EXPECT_EQ(sub.lhs().op(), Op::Subtract);
  EXPECT_EQ(sub.rhs().name(), "v1");
  const Expr div = parse("x1/x2/v1", kVars);
  ASSERT_EQ(div.op(), Op::Divide);
  EXPECT_EQ(div.lhs().op(), Op::Divide);
  EXPECT_DOUBLE_EQ(evaluate(div, Bindings{{"x1", 8}, {"x2", 2}, {"v1", 2}, {"v2", 0}}), 2.0);
}

TEST(ExprParse, RightAssociativeExponents) {
  // 2^3^2 = 2^9
  EXPECT_DOUBLE_EQ(eval("x1^3^2", {{"x1", 2}, {"x2", 0}, {"v1", 0}, {"v2", 0}}), 512.0);
  EXPECT_DOUBLE_EQ(eval("x1^-2", {{"x1", 2}, {"x2", 0}, {"v1", 0}, {"v2", 0}}), 0.25);
}

TEST(ExprParse, UnknownIdentifierNamesIt) {
  try {
    parse("x3", coordinate_variables(2));
    FAIL() << "expected UnknownIdentifierError";
  } catch (const UnknownIdentifierError& e) {
    EXPECT_EQ(e.name(), "x3");
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("x3"), std::string::npos);
  }
}

TEST(ExprParse, SyntaxErrorsCarryByteOffset) {
  try {
    parse("x1*", kVars);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 3u);
    EXPECT_EQ(std::string(e.what()).rfind("syntax error at byte 3", 0), 0u);
  }
  EXPECT_THROW(parse("", kVars), ParseError);
  EXPECT_THROW(parse("(x1", kVars), ParseError);
  EXPECT_THROW(parse("x1 x2", kVars), ParseError);
  EXPECT_THROW(parse("x1^x2", kVars), ParseError);  // exponent must be a number
  EXPECT_THROW(parse("foo(x1)", kVars), UnknownIdentifierError);
  EXPECT_THROW(parse("sin x1", kVars), ParseError);
}

TEST(ExprParse, DuplicateVariablesRejected) {
  EXPECT_THROW(Variables({"x1", "x1"}), Error);
}

TEST(ExprParse, NumberLiterals) {
  const Bindings b{{"x1", 0}, {"x2", 0}, {"v1", 0}, {"v2", 0}};
  EXPECT_DOUBLE_EQ(eval("1.5e2", b), 150.0);
  EXPECT_DOUBLE_EQ(eval(".25", b), 0.25);
  EXPECT_DOUBLE_EQ(eval("2.5E-1", b), 0.25);
}

TEST(ExprEvaluate, Examples) {
  EXPECT_EQ(eval("v1^2+v2^2", {{"x1", 0}, {"x2", 0}, {"v1", 3}, {"v2", 4}}), 25.0);
  EXPECT_EQ(evaluate(parse("sin(0)", Variables{}), Bindings{}), 0.0);
}

TEST(ExprEvaluate, DomainErrors) {
  const Bindings zero{{"x1", 0}, {"x2", 0}, {"v1", 0}, {"v2", 0}};
  EXPECT_THROW(eval("1/x1", zero), DomainError);
  EXPECT_THROW(eval("ln(x1)", zero), DomainError);
  EXPECT_THROW(eval("sqrt(x1-1)", zero), DomainError);
  try {
    eval("2 + 1/x1", zero);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.offset(), 5u);  // the division node
  }
}

TEST(ExprEvaluate, MissingBindingIsError) {
  EXPECT_THROW(eval("x1+v2", {{"x1", 1}}), Error);
}

TEST(ExprEvaluate, AllFunctions) {
  const Bindings b{{"x1", 0.7}, {"x2", 0}, {"v1", 0}, {"v2", 0}};
  EXPECT_DOUBLE_EQ(eval("tan(x1)", b), std::tan(0.7));
  EXPECT_DOUBLE_EQ(eval("exp(x1)", b), std::exp(0.7));
  EXPECT_DOUBLE_EQ(eval("ln(x1)", b), std::log(0.7));
  EXPECT_DOUBLE_EQ(eval("abs(-x1)", b), 0.7);
  EXPECT_DOUBLE_EQ(eval("cos(x1)", b), std::cos(0.7));
}

TEST(ExprDifferentiate, Examples) {
  EXPECT_EQ(to_string(differentiate(parse("x1*x2", kVars), "x1")), "x2");
  EXPECT_TRUE(differentiate(parse("sin(x1)", kVars), "x2").is_constant(0.0));

  const Expr e = parse("sqrt(v1^2+v2^2)", kVars);
  const Expr d = differentiate(e, "v1");
  const double h = 1e-6;
  const double fd = (eval("sqrt(v1^2+v2^2)", {{"x1", 0}, {"x2", 0}, {"v1", 3 + h}, {"v2", 4}}) -
                     eval("sqrt(v1^2+v2^2)", {{"x1", 0}, {"x2", 0}, {"v1", 3 - h}, {"v2", 4}})) /
                    (2 * h);
  const double exact = evaluate(d, Bindings{{"x1", 0}, {"x2", 0}, {"v1", 3}, {"v2", 4}});
  EXPECT_NEAR(exact, 0.6, 1e-15);
  EXPECT_NEAR(exact, fd, 1e-9);
}

TEST(ExprDifferentiate, UnknownVariableDerivativeIsZero) {
  EXPECT_TRUE(differentiate(parse("x1", kVars), "v2").is_constant(0.0));
}

TEST(ExprDifferentiate, MatchesCentralDifferences) {
  Generator gen(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Expr e = gen.make(4);
    auto b = gen.point();
    std::uniform_int_distribution<int> pick(0, 3);
    const int u = pick(gen.rng());
    const Expr d = differentiate(e, kVars[u]);
    const double h = 1e-6 * std::max(1.0, std::fabs(b[u]));
    auto bp = b, bm = b;
    bp[u] += h;
    bm[u] -= h;
    const double fd = (evaluate(e, bp) - evaluate(e, bm)) / (2 * h);
    const double exact = evaluate(d, b);
    ASSERT_LE(std::fabs(exact - fd), 1e-6 * std::max(1.0, std::fabs(exact)))
        << to_string(e) << " d/d" << kVars[u];
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(ExprSimplify, Examples) {
  EXPECT_EQ(to_string(simplify(parse("0*x1 + 1*v2", kVars))), "v2");
  EXPECT_EQ(to_string(simplify(parse("x1^1", kVars))), "x1");
  EXPECT_EQ(to_string(simplify(parse("2*3", kVars))), "6");
  EXPECT_EQ(to_string(simplify(parse("x1^0", kVars))), "1");
  EXPECT_EQ(to_string(simplify(parse("--x1", kVars))), "x1");
  EXPECT_EQ(to_string(simplify(parse("x1/1 - 0", kVars))), "x1");
}

TEST(ExprSimplify, DoesNotFoldDomainErrors) {
  const Expr e = simplify(parse("1/0", kVars));
  EXPECT_FALSE(e.is_constant());
  EXPECT_THROW(evaluate(e, std::vector<double>{0, 0, 0, 0}), DomainError);
}

TEST(ExprSimplify, PreservesValues) {
  Generator gen(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Expr e = gen.make(4);
    const Expr s = simplify(e);
    const auto b = gen.point();
    const double a = evaluate(e, b);
    const double c = evaluate(s, b);
    if (structurally_equal(e, s)) {
      ASSERT_EQ(a, c) << to_string(e);
    } else {
      const double ulp = std::fabs(std::nextafter(a, INFINITY) - a);
      ASSERT_LE(std::fabs(a - c), ulp) << to_string(e) << " -> " << to_string(s);
    }
  }
}

TEST(ExprPrint, ParsePrintRoundTrip) {
  Generator gen(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const Expr e = gen.make(4);
    const std::string text = to_string(e);
    const Expr back = parse(text, kVars);
    ASSERT_TRUE(structurally_equal(back, e)) << text << " vs " << to_string(back);
    ASSERT_EQ(to_string(back), text);
  }
}

TEST(ExprPrint, ParsedTextRoundTrip) {
  for (const char* src : {"-x1*x2", "x1-(x2-v1)", "x1/(x2*v1)", "(-x1)^2", "-x1^2", "x1^-2",
                          "x1--x2", "sin(x1)^3", "x1*-x2", "2^3^2", "1e+20*x1"}) {
    const Expr e = parse(src, kVars);
    const Expr back = parse(to_string(e), kVars);
    EXPECT_TRUE(structurally_equal(e, back)) << src << " printed as " << to_string(e);
  }
}

TEST(ExprQueries, DependsOn) {
  const Expr e = parse("x1*sin(v2)", kVars);
  EXPECT_TRUE(depends_on_any(e));
  EXPECT_TRUE(depends_on(e, "v2"));
  EXPECT_FALSE(depends_on(e, "x2"));
  EXPECT_FALSE(depends_on_any(parse("2*3", kVars)));
}

TEST(ExprEvaluate, ConcurrentEvaluationIsPure) {
  const Expr e = parse("sin(x1)*exp(v1)", kVars);
  const std::vector<double> b{0.3, 0, 0.2, 0};
  const double first = evaluate(e, b);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(evaluate(e, b), first);
}
