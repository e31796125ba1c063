#include <cmath>
#include <atomic>
#include <cstring>
#include <thread>

#include <gtest/gtest.h>

#include "lyapcert/expr.hpp"
#include "random_expr.hpp"

namespace lyapcert {
namespace {

using testing::central_difference;
using testing::ExprGenerator;
using testing::smooth_stencil;

double eval(const std::string& src, std::vector<double> p) {
  return evaluate(parse_expression(src, static_cast<int>(p.size())), p);
}

// ---------------------------------------------------------------------------
// parse_expression

TEST(ParseExpression, SumOfSquaresHasAddOfPows) {
  const Expr e = parse_expression("x^2 + y^2", 2);
  ASSERT_EQ(e.node().op, Op::kAdd);
  const Node& lhs = *e.node().lhs;
  const Node& rhs = *e.node().rhs;
  ASSERT_EQ(lhs.op, Op::kPow);
  EXPECT_EQ(lhs.lhs->op, Op::kVariable);
  EXPECT_EQ(lhs.lhs->variable, 0);
  EXPECT_EQ(lhs.rhs->op, Op::kConstant);
  EXPECT_EQ(lhs.rhs->value, 2.0);
  ASSERT_EQ(rhs.op, Op::kPow);
  EXPECT_EQ(rhs.lhs->variable, 1);
}

TEST(ParseExpression, SinTimesZ) {
  const Expr e = parse_expression("sin(x)*z", 3);
  ASSERT_EQ(e.node().op, Op::kMul);
  EXPECT_EQ(e.node().lhs->op, Op::kSin);
  EXPECT_EQ(e.node().lhs->lhs->variable, 0);
  EXPECT_EQ(e.node().rhs->op, Op::kVariable);
  EXPECT_EQ(e.node().rhs->variable, 2);
}

TEST(ParseExpression, UnknownVariableIsNamed) {
  try {
    parse_expression("x + w", 2);
    FAIL() << "expected UnknownVariableError";
  } catch (const UnknownVariableError& e) {
    EXPECT_EQ(e.name(), "w");
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(ParseExpression, SyntaxErrorReportsPositionAndExpectation) {
  try {
    parse_expression("x + * y", 2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos);
  }
  EXPECT_THROW(parse_expression("sin(x", 2), ParseError);
  EXPECT_THROW(parse_expression("x y", 2), ParseError);
  EXPECT_THROW(parse_expression("", 2), ParseError);
}

TEST(ParseExpression, DimensionAliases) {
  EXPECT_EQ(eval("x1 + x_2", {1.0, 2.0}), 3.0);
  EXPECT_THROW(parse_expression("z", 2), UnknownVariableError);
  EXPECT_EQ(eval("x4", {0, 0, 0, 7.0}), 7.0);
  EXPECT_THROW(parse_expression("x", 4), UnknownVariableError);
}

TEST(ParseExpression, UnaryMinusBindsLooserThanPower) {
  EXPECT_EQ(eval("-x^2", {3.0, 0.0}), -9.0);
  EXPECT_EQ(eval("2^-1", {0.0, 0.0}), 0.5);
  EXPECT_EQ(eval("--x", {3.0, 0.0}), 3.0);
}

TEST(ParseExpression, NumbersWithExponents) {
  EXPECT_DOUBLE_EQ(eval("1.5e2 + .5 + 2E-1", {0, 0}), 150.7);
}

// ---------------------------------------------------------------------------
// evaluate

TEST(Evaluate, SumOfSquares) { EXPECT_EQ(eval("x^2+y^2", {3, 4}), 25.0); }

TEST(Evaluate, SinAtZero) { EXPECT_EQ(eval("sin(x)", {0, 0}), 0.0); }

TEST(Evaluate, DivisionByZeroIsReported) {
  try {
    eval("1/x", {0, 1});
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.subexpression(), "1/x");
    EXPECT_EQ(e.point(), (std::vector<double>{0, 1}));
  }
  EXPECT_THROW(eval("ln(x)", {-1, 0}), NonFiniteError);
}

TEST(Evaluate, DimensionMismatch) {
  const Expr e = parse_expression("x+y", 2);
  const std::vector<double> p{1, 2, 3};
  EXPECT_THROW(evaluate(e, p), DimensionError);
}

// ---------------------------------------------------------------------------
// differentiate / gradient

std::string d(const std::string& src, int n, int var) {
  return to_string(differentiate(parse_expression(src, n), var));
}

TEST(Differentiate, ProductRule) { EXPECT_EQ(d("x*y", 2, 0), "y"); }
TEST(Differentiate, Sine) { EXPECT_EQ(d("sin(x)", 2, 0), "cos(x)"); }
TEST(Differentiate, SquareInY) { EXPECT_EQ(d("x^2+y^2", 2, 1), "2*y"); }

TEST(Differentiate, AbsIsLeftSymbolicAndFlagged) {
  const Expr da = differentiate(parse_expression("abs(x)", 2), 0);
  EXPECT_EQ(to_string(da), "sign(x)");
  EXPECT_FALSE(is_smooth_everywhere(parse_expression("abs(x)", 2)));
  const std::vector<double> origin{0.0, 1.0}, off{0.5, 1.0};
  EXPECT_TRUE(non_smooth_at(parse_expression("abs(x)", 2), origin));
  EXPECT_FALSE(non_smooth_at(parse_expression("abs(x)", 2), off));
  EXPECT_EQ(evaluate(da, off), 1.0);
}

TEST(Differentiate, OutOfRangeVariable) {
  EXPECT_THROW(differentiate(parse_expression("x", 2), 2), DimensionError);
}

std::vector<std::string> field_strings(const VectorFieldDef& f) {
  std::vector<std::string> out;
  for (const auto& c : f.components()) out.push_back(to_string(c));
  return out;
}

TEST(Gradient, Examples) {
  using V = std::vector<std::string>;
  EXPECT_EQ(field_strings(gradient(parse_expression("x^2+y^2", 2))), (V{"2*x", "2*y"}));
  EXPECT_EQ(field_strings(gradient(parse_expression("x*y", 2))), (V{"y", "x"}));
  EXPECT_EQ(field_strings(gradient(parse_expression("exp(x)", 2))), (V{"exp(x)", "0"}));
}

TEST(GradientSystem, Examples) {
  using V = std::vector<std::string>;
  const Expr F = parse_expression("x^2+y^2", 2);
  EXPECT_EQ(field_strings(make_gradient_system(F, false)), (V{"-2*x", "-2*y"}));
  EXPECT_EQ(field_strings(make_gradient_system(F, true)), (V{"2*x", "2*y"}));
  EXPECT_THROW(make_gradient_system(parse_expression("x^3", 1), false), DimensionError);
}

TEST(HamiltonianSystem, Examples) {
  using V = std::vector<std::string>;
  auto vars = std::make_shared<const Variables>(Variables::hamiltonian(1));
  EXPECT_EQ(field_strings(make_hamiltonian_system(parse_expression("(y^2+z^2)/2", vars), 1)), (V{"z", "-y"}));
  EXPECT_EQ(field_strings(make_hamiltonian_system(parse_expression("z^2/2 - cos(y)", vars), 1)),
            (V{"z", "-sin(y)"}));
  EXPECT_THROW(make_hamiltonian_system(parse_expression("x+y+z", 3), 1), DimensionError);
}

// ---------------------------------------------------------------------------
// Properties

TEST(ExprProperties, DerivativeMatchesCentralDifference) {
  auto vars = std::make_shared<const Variables>(Variables::standard(2));
  ExprGenerator gen(vars, 7);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const Expr e = gen.smooth(4);
    const int var = k % 2;
    const Expr de = differentiate(e, var);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = gen.point(-2.0, 2.0);
      if (!smooth_stencil(e, p, var, 1e-3)) continue;
      const double exact = evaluate(de, p);
      const double e3 = std::fabs(central_difference(e, p, var, 1e-3) - exact);
      const double e4 = std::fabs(central_difference(e, p, var, 1e-4) - exact);
      const double scale = std::max(1.0, std::fabs(exact));
      // Second-order truncation: C h^2 with C generous for these trees.
      EXPECT_LE(e3, 1e3 * 1e-6 * scale) << to_string(e);
      EXPECT_LE(e4, 1e3 * 1e-8 * scale + 1e-9 * scale) << to_string(e);
      ++checked;
      break;
    }
  }
  EXPECT_GE(checked, 95);
}

TEST(ExprProperties, DifferentiationIsLinear) {
  auto vars = std::make_shared<const Variables>(Variables::standard(2));
  ExprGenerator gen(vars, 11);
  for (int k = 0; k < 50; ++k) {
    const Expr e1 = gen.smooth(3), e2 = gen.smooth(3);
    const double a = -1.75 + 0.25 * k;
    const Expr combined = differentiate(a * e1 + e2, 0);
    const Expr d1 = differentiate(e1, 0), d2 = differentiate(e2, 0);
    const auto p = gen.point(-2.0, 2.0);
    if (non_smooth_at(e1, p) || non_smooth_at(e2, p)) continue;
    const double lhs = evaluate(combined, p);
    const double rhs = a * evaluate(d1, p) + evaluate(d2, p);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::fabs(rhs)));
  }
}

bool same_bits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::memcmp(&a, &b, sizeof a) == 0;
}

TEST(ExprProperties, PrintParseRoundTripIsExact) {
  auto vars = std::make_shared<const Variables>(Variables::standard(3));
  ExprGenerator gen(vars, 3);
  for (int k = 0; k < 200; ++k) {
    const Expr e = gen.any(6);
    const std::string text = to_string(e);
    const Expr back = parse_expression(text, vars);
    for (int t = 0; t < 20; ++t) {
      const auto p = gen.point(-3.0, 3.0);
      ASSERT_TRUE(same_bits(evaluate_unchecked(e, p), evaluate_unchecked(back, p))) << text;
    }
  }
}

TEST(ExprProperties, HamiltonianFieldIsOrthogonalToGradient) {
  auto vars = std::make_shared<const Variables>(Variables::hamiltonian(1));
  ExprGenerator gen(vars, 5);
  for (int k = 0; k < 50; ++k) {
    const Expr F = gen.smooth(4);
    const VectorFieldDef f = make_hamiltonian_system(F, 1);
    const VectorFieldDef g = gradient(F);
    for (int t = 0; t < 10; ++t) {
      const auto p = gen.point(-2.0, 2.0);
      if (non_smooth_at(F, p)) continue;
      const auto fv = f.evaluate(p);
      const auto gv = g.evaluate(p);
      const double scale = std::max(1.0, std::hypot(gv[0], gv[1]) * std::hypot(fv[0], fv[1]));
      EXPECT_LE(std::fabs(fv[0] * gv[0] + fv[1] * gv[1]), 1e-12 * scale);
    }
  }
}

TEST(ExprProperties, ConcurrentEvaluationAgrees) {
  const Expr e = parse_expression("sin(x)*exp(y) + ln(1 + x^2)", 2);
  const std::vector<double> p{0.3, -0.7};
  const double expected = evaluate(e, p);
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 10000; ++i) {
        if (evaluate(e, p) != expected) ++mismatches;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace lyapcert
