#pragma once

// Random expression trees for property tests.

#include <cmath>
#include <random>

#include "lyapcert/expr.hpp"

namespace lyapcert::testing {

class ExprGenerator {
 public:
  ExprGenerator(std::shared_ptr<const Variables> vars, std::uint64_t seed) : vars_(std::move(vars)), rng_(seed) {}

  // Any operator or function, arbitrary constants. Values may be non-finite.
  Expr any(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf();
    switch (pick(12)) {
      case 0: return any(depth - 1) + any(depth - 1);
      case 1: return any(depth - 1) - any(depth - 1);
      case 2: return any(depth - 1) * any(depth - 1);
      case 3: return any(depth - 1) / any(depth - 1);
      case 4: return pow(any(depth - 1), pick(2) ? constant() : any(depth - 1));
      case 5: return -any(depth - 1);
      default: {
        static constexpr Op kFunctions[] = {Op::kSin, Op::kCos, Op::kExp, Op::kLn, Op::kSqrt, Op::kAbs, Op::kTanh};
        return apply(kFunctions[pick(7)], any(depth - 1));
      }
    }
  }

  // Finite, differentiable and of moderate size on [-2, 2]^n: arguments of
  // ln, sqrt and denominators are kept positive, exp sees a bounded argument.
  Expr smooth(int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf();
    const Expr u = smooth(depth - 1);
    const Expr one = Expr::constant(1.0, vars_);
    switch (pick(11)) {
      case 0: return u + smooth(depth - 1);
      case 1: return u - smooth(depth - 1);
      case 2: return u * smooth(depth - 1);
      case 3: return u / (one + u * u);
      case 4: return pow(apply(Op::kTanh, u), Expr::constant(static_cast<double>(2 + pick(2)), vars_));
      case 5: return apply(Op::kSin, u);
      case 6: return apply(Op::kCos, u);
      case 7: return apply(Op::kExp, apply(Op::kTanh, u));
      case 8: return apply(Op::kLn, one + u * u);
      case 9: return apply(Op::kSqrt, one + u * u);
      default: return apply(Op::kAbs, u);
    }
  }

  std::vector<double> point(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> p(vars_->dimension());
    for (double& x : p) x = d(rng_);
    return p;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Expr constant() {
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    const double v = pick(2) ? std::round(d(rng_) * 4.0) / 4.0 : d(rng_);
    return Expr::constant(v, vars_);
  }

  Expr leaf() {
    if (pick(3) == 0) return constant();
    return Expr::variable(pick(vars_->dimension()), vars_);
  }

  std::shared_ptr<const Variables> vars_;
  std::mt19937_64 rng_;
};

// Central difference of e along axis i.
inline double central_difference(const Expr& e, std::vector<double> p, int i, double h) {
  const double x = p[i];
  p[i] = x + h;
  const double plus = evaluate(e, p);
  p[i] = x - h;
  const double minus = evaluate(e, p);
  return (plus - minus) / (2.0 * h);
}

// True when the stencil p +- h e_i stays on one side of every non-smooth set.
inline bool smooth_stencil(const Expr& e, std::vector<double> p, int i, double h) {
  std::vector<double> a = p, b = p;
  a[i] -= h;
  b[i] += h;
  return !crosses_non_smooth(e, a, b) && !non_smooth_at(e, p);
}

}  // namespace lyapcert::testing
