#pragma once

// Scalar expressions over x_1..x_n: parsing, printing, evaluation and exact
// symbolic differentiation, plus the vector fields assembled from them.
//
// Grammar (whitespace insignificant):
//   expr     := term (('+'|'-') term)*
//   term     := factor (('*'|'/') factor)*
//   factor   := '-' factor | base ('^' exponent)?
//   exponent := '-' exponent | base
//   base     := number | variable | func '(' expr ')' | '(' expr ')'
//   func     := sin | cos | exp | ln | sqrt | abs | tanh | sign
//
// Unary minus binds looser than '^', so "-x^2" is -(x^2).

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyapcert/errors.hpp"

namespace lyapcert {

// Names of the coordinates of R^n. Canonical names x1..xn (and x_1..x_n)
// are always accepted as aliases.
class Variables {
 public:
  explicit Variables(std::vector<std::string> names);

  // x,y[,z] for n <= 3, x1..xn otherwise.
  static Variables standard(int dimension);
  // y,z for one degree of freedom; y1..yk,z1..zk otherwise.
  static Variables hamiltonian(int dof);

  int dimension() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int index) const { return names_.at(index); }
  std::optional<int> index_of(std::string_view name) const;

  bool operator==(const Variables& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

enum class Op {
  kConstant,
  kVariable,
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kSin,
  kCos,
  kExp,
  kLn,
  kSqrt,
  kAbs,
  kTanh,
  kSign,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::kConstant;
  double value = 0.0;  // kConstant
  int variable = -1;   // kVariable
  NodePtr lhs;         // unary operand or left operand
  NodePtr rhs;         // right operand of binary ops
};

// Immutable expression tree bound to a variable naming. Copies share the
// tree; evaluation is pure and safe to run concurrently.
class Expr {
 public:
  Expr(NodePtr node, std::shared_ptr<const Variables> variables);

  static Expr constant(double value, std::shared_ptr<const Variables> variables);
  static Expr variable(int index, std::shared_ptr<const Variables> variables);

  const Node& node() const { return *node_; }
  const NodePtr& node_ptr() const { return node_; }
  const Variables& variables() const { return *variables_; }
  const std::shared_ptr<const Variables>& variables_ptr() const { return variables_; }
  int dimension() const { return variables_->dimension(); }

  bool is_constant() const { return node_->op == Op::kConstant; }
  bool is_constant(double value) const { return is_constant() && node_->value == value; }

  // Rebuild this expression with a different child, keeping the naming.
  Expr with(NodePtr node) const { return Expr(std::move(node), variables_); }

 private:
  NodePtr node_;
  std::shared_ptr<const Variables> variables_;
};

// Construction helpers. They fold constants and drop neutral elements
// (0+e, 1*e, e^1, ...); no other simplification is attempted.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr apply(Op function, const Expr& argument);
Expr operator+(const Expr& a, double b);
Expr operator*(double a, const Expr& b);

Expr parse_expression(std::string_view source, int dimension);
Expr parse_expression(std::string_view source, std::shared_ptr<const Variables> variables);

// Fully parseable text; parse(to_string(e)) evaluates bit-identically to e.
std::string to_string(const Expr& expr);

// Throws NonFiniteError naming the first subexpression that is NaN/inf.
double evaluate(const Expr& expr, std::span<const double> point);
// Hot-path variant: returns whatever IEEE arithmetic produces.
double evaluate_unchecked(const Expr& expr, std::span<const double> point);

Expr differentiate(const Expr& expr, int variable_index);

// Arguments of abs/sign (non-smooth where the argument is 0) and of sqrt
// (non-smooth where the argument is <= 0), in tree order.
struct NonSmoothSite {
  Op function;
  Expr argument;
};
std::vector<NonSmoothSite> non_smooth_sites(const Expr& expr);
bool is_smooth_everywhere(const Expr& expr);
// True when p lies on the non-smooth set of any site.
bool non_smooth_at(const Expr& expr, std::span<const double> point);
// True when the segment a-b meets the non-smooth set (an abs/sign argument
// changes sign or a sqrt argument reaches 0 along it, judged at the ends).
bool crosses_non_smooth(const Expr& expr, std::span<const double> a, std::span<const double> b);

class VectorFieldDef {
 public:
  explicit VectorFieldDef(std::vector<Expr> components);

  int dimension() const { return static_cast<int>(components_.size()); }
  const std::vector<Expr>& components() const { return components_; }
  const Expr& operator[](int i) const { return components_.at(i); }

  std::vector<double> evaluate(std::span<const double> point) const;
  void evaluate_unchecked(std::span<const double> point, std::span<double> out) const;

  VectorFieldDef scaled(double factor) const;
  bool is_smooth_everywhere() const;

 private:
  std::vector<Expr> components_;
};

VectorFieldDef gradient(const Expr& F);
// dx/dt = -grad F, or -grad(-F) = +grad F when negate_F is set.
VectorFieldDef make_gradient_system(const Expr& F, bool negate_F);
// Variables are (y_1..y_k, z_1..z_k); returns (dF/dz, -dF/dy).
VectorFieldDef make_hamiltonian_system(const Expr& F, int dof);

// Rows are gradients of the components.
std::vector<VectorFieldDef> jacobian(const VectorFieldDef& field);
std::vector<VectorFieldDef> hessian(const Expr& F);

}  // namespace lyapcert
