#include "lyapcert/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

namespace lyapcert {

NonFiniteError::NonFiniteError(const std::string& subexpression, std::vector<double> point,
                               long count)
    : Error([&] {
        std::ostringstream os;
        os << "non-finite value of '" << subexpression << "' at (";
        for (std::size_t i = 0; i < point.size(); ++i) os << (i ? ", " : "") << point[i];
        os << ")";
        if (count > 1) os << " and " << count - 1 << " more points";
        return os.str();
      }()),
      subexpression_(subexpression),
      point_(std::move(point)),
      count_(count) {}

// ---------------------------------------------------------------------------
// Variables

Variables::Variables(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw DimensionError("dimension must be at least 1");
}

Variables Variables::standard(int dimension) {
  if (dimension < 1) throw DimensionError("dimension must be at least 1");
  std::vector<std::string> names;
  if (dimension <= 3) {
    const char* short_names[] = {"x", "y", "z"};
    for (int i = 0; i < dimension; ++i) names.emplace_back(short_names[i]);
  } else {
    for (int i = 0; i < dimension; ++i) names.push_back("x" + std::to_string(i + 1));
  }
  return Variables(std::move(names));
}

Variables Variables::hamiltonian(int dof) {
  if (dof < 1) throw DimensionError("degrees of freedom must be at least 1");
  if (dof == 1) return Variables({"y", "z"});
  std::vector<std::string> names;
  for (int i = 0; i < dof; ++i) names.push_back("y" + std::to_string(i + 1));
  for (int i = 0; i < dof; ++i) names.push_back("z" + std::to_string(i + 1));
  return Variables(std::move(names));
}

std::optional<int> Variables::index_of(std::string_view name) const {
  for (int i = 0; i < dimension(); ++i) {
    if (names_[i] == name) return i;
  }
  for (int i = 0; i < dimension(); ++i) {
    const std::string n = std::to_string(i + 1);
    if (name == "x" + n || name == "x_" + n) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

NodePtr make_constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConstant;
  n->value = value;
  return n;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double sign_of(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

double apply_unary(Op op, double v) {
  switch (op) {
    case Op::kNeg: return -v;
    case Op::kSin: return std::sin(v);
    case Op::kCos: return std::cos(v);
    case Op::kExp: return std::exp(v);
    case Op::kLn: return std::log(v);
    case Op::kSqrt: return std::sqrt(v);
    case Op::kAbs: return std::fabs(v);
    case Op::kTanh: return std::tanh(v);
    case Op::kSign: return sign_of(v);
    default: break;
  }
  throw Error("not a unary operator");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::kAdd: return a + b;
    case Op::kSub: return a - b;
    case Op::kMul: return a * b;
    case Op::kDiv: return a / b;
    case Op::kPow: return std::pow(a, b);
    default: break;
  }
  throw Error("not a binary operator");
}

bool is_const(const NodePtr& n) { return n->op == Op::kConstant; }
bool is_const(const NodePtr& n, double v) { return is_const(n) && n->value == v; }

void require_same_variables(const Expr& a, const Expr& b) {
  if (a.variables_ptr() != b.variables_ptr() && !(a.variables() == b.variables())) {
    throw DimensionError("expressions are defined over different variables");
  }
}

Expr binary(Op op, const Expr& a, const Expr& b) {
  require_same_variables(a, b);
  const NodePtr& l = a.node_ptr();
  const NodePtr& r = b.node_ptr();
  if (is_const(l) && is_const(r)) {
    const double v = apply_binary(op, l->value, r->value);
    if (std::isfinite(v)) return a.with(make_constant(v));
  }
  switch (op) {
    case Op::kAdd:
      if (is_const(l, 0.0)) return b;
      if (is_const(r, 0.0)) return a;
      break;
    case Op::kSub:
      if (is_const(r, 0.0)) return a;
      if (is_const(l, 0.0)) return -b;
      break;
    case Op::kMul:
      if (is_const(l, 0.0) || is_const(r, 0.0)) return a.with(make_constant(0.0));
      if (is_const(l, 1.0)) return b;
      if (is_const(r, 1.0)) return a;
      if (is_const(l, -1.0)) return -b;
      if (is_const(r, -1.0)) return -a;
      // c1*(c2*u) -> (c1*c2)*u
      if (is_const(l) && r->op == Op::kMul && is_const(r->lhs)) {
        return binary(Op::kMul, a.with(make_constant(l->value * r->lhs->value)), b.with(r->rhs));
      }
      break;
    case Op::kDiv:
      if (is_const(r, 1.0)) return a;
      if (is_const(l, 0.0) && !is_const(r, 0.0)) return a;
      // (c1*u)/c2 -> (c1/c2)*u
      if (is_const(r) && l->op == Op::kMul && is_const(l->lhs)) {
        const double c = l->lhs->value / r->value;
        if (std::isfinite(c) && c != 0.0) return binary(Op::kMul, a.with(make_constant(c)), a.with(l->rhs));
      }
      break;
    case Op::kPow:
      if (is_const(r, 1.0)) return a;
      if (is_const(r, 0.0)) return a.with(make_constant(1.0));
      break;
    default:
      break;
  }
  return a.with(make_node(op, l, r));
}

}  // namespace

Expr::Expr(NodePtr node, std::shared_ptr<const Variables> variables)
    : node_(std::move(node)), variables_(std::move(variables)) {
  if (!node_ || !variables_) throw Error("null expression");
}

Expr Expr::constant(double value, std::shared_ptr<const Variables> variables) {
  return Expr(make_constant(value), std::move(variables));
}

Expr Expr::variable(int index, std::shared_ptr<const Variables> variables) {
  if (index < 0 || index >= variables->dimension()) {
    throw DimensionError("variable index " + std::to_string(index) + " out of range");
  }
  auto n = std::make_shared<Node>();
  n->op = Op::kVariable;
  n->variable = index;
  return Expr(std::move(n), std::move(variables));
}

Expr operator+(const Expr& a, const Expr& b) { return binary(Op::kAdd, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return binary(Op::kSub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return binary(Op::kMul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return binary(Op::kDiv, a, b); }
Expr pow(const Expr& base, const Expr& exponent) { return binary(Op::kPow, base, exponent); }

Expr operator-(const Expr& a) {
  const Node& n = a.node();
  if (n.op == Op::kConstant) return a.with(make_constant(-n.value));
  if (n.op == Op::kNeg) return a.with(n.lhs);
  if (n.op == Op::kMul && is_const(n.lhs)) return binary(Op::kMul, a.with(make_constant(-n.lhs->value)), a.with(n.rhs));
  return a.with(make_node(Op::kNeg, a.node_ptr()));
}

Expr apply(Op function, const Expr& argument) {
  if (function == Op::kNeg) return -argument;
  if (argument.is_constant()) {
    const double v = apply_unary(function, argument.node().value);
    if (std::isfinite(v)) return argument.with(make_constant(v));
  }
  return argument.with(make_node(function, argument.node_ptr()));
}

Expr operator+(const Expr& a, double b) { return a + Expr::constant(b, a.variables_ptr()); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a, b.variables_ptr()) * b; }

// ---------------------------------------------------------------------------
// Printing

namespace {

const char* function_name(Op op) {
  switch (op) {
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLn: return "ln";
    case Op::kSqrt: return "sqrt";
    case Op::kAbs: return "abs";
    case Op::kTanh: return "tanh";
    case Op::kSign: return "sign";
    default: return nullptr;
  }
}

std::optional<Op> function_from_name(std::string_view name) {
  static constexpr Op kFunctions[] = {Op::kSin,  Op::kCos, Op::kExp,  Op::kLn,
                                      Op::kSqrt, Op::kAbs, Op::kTanh, Op::kSign};
  for (Op op : kFunctions) {
    if (name == function_name(op)) return op;
  }
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Binding strength of the printed form; parenthesize when below the context.
int precedence(const Node& n) {
  switch (n.op) {
    case Op::kAdd:
    case Op::kSub: return 1;
    case Op::kMul:
    case Op::kDiv: return 2;
    case Op::kNeg: return 3;
    case Op::kPow: return 4;
    case Op::kConstant: return std::signbit(n.value) ? 3 : 5;
    default: return 5;
  }
}

void print(const Node& n, const Variables& vars, int context, std::string& out) {
  const int p = precedence(n);
  const bool paren = p < context;
  if (paren) out += '(';
  switch (n.op) {
    case Op::kConstant:
      if (std::signbit(n.value)) {
        out += '-';
        out += format_number(-n.value);
      } else {
        out += format_number(n.value);
      }
      break;
    case Op::kVariable:
      out += vars.name(n.variable);
      break;
    case Op::kNeg:
      out += '-';
      print(*n.lhs, vars, 3, out);
      break;
    case Op::kAdd:
    case Op::kSub:
      print(*n.lhs, vars, 1, out);
      out += n.op == Op::kAdd ? " + " : " - ";
      print(*n.rhs, vars, 2, out);
      break;
    case Op::kMul:
    case Op::kDiv:
      print(*n.lhs, vars, 2, out);
      out += n.op == Op::kMul ? "*" : "/";
      print(*n.rhs, vars, 3, out);
      break;
    case Op::kPow:
      print(*n.lhs, vars, 5, out);
      out += '^';
      print(*n.rhs, vars, 5, out);
      break;
    default:
      out += function_name(n.op);
      out += '(';
      print(*n.lhs, vars, 0, out);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

}  // namespace

std::string to_string(const Expr& expr) {
  std::string out;
  print(expr.node(), expr.variables(), 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view src, std::shared_ptr<const Variables> vars)
      : src_(src), vars_(std::move(vars)) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("expected operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::string msg = "syntax error: " + what;
    if (pos_ < src_.size()) {
      msg += ", found '";
      msg += src_[pos_];
      msg += "'";
    } else {
      msg += ", found end of input";
    }
    throw ParseError(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * factor();
      } else if (accept('/')) {
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    if (accept('-')) return -factor();
    Expr b = base();
    if (accept('^')) return pow(b, exponent());
    return b;
  }

  Expr exponent() {
    if (accept('-')) return -exponent();
    return base();
  }

  Expr base() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected number, variable, function or '('");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      Expr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    fail("expected number, variable, function or '('");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) {
      pos_ = start;
      fail("expected digits");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark + 1;
        fail("expected exponent digits");
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc() || !std::isfinite(value)) {
      pos_ = start;
      fail("number out of range");
    }
    return Expr::constant(value, vars_);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);
    if (auto fn = function_from_name(name)) {
      if (!accept('(')) fail("expected '(' after function '" + std::string(name) + "'");
      Expr arg = expr();
      if (!accept(')')) fail("expected ')' closing call to '" + std::string(name) + "'");
      return apply(*fn, arg);
    }
    if (auto idx = vars_->index_of(name)) return Expr::variable(*idx, vars_);
    throw UnknownVariableError(std::string(name), start);
  }

  std::string_view src_;
  std::shared_ptr<const Variables> vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view source, std::shared_ptr<const Variables> variables) {
  return Parser(source, std::move(variables)).parse();
}

Expr parse_expression(std::string_view source, int dimension) {
  return parse_expression(source, std::make_shared<const Variables>(Variables::standard(dimension)));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_raw(const Node& n, std::span<const double> p) {
  switch (n.op) {
    case Op::kConstant: return n.value;
    case Op::kVariable: return p[n.variable];
    case Op::kAdd: return eval_raw(*n.lhs, p) + eval_raw(*n.rhs, p);
    case Op::kSub: return eval_raw(*n.lhs, p) - eval_raw(*n.rhs, p);
    case Op::kMul: return eval_raw(*n.lhs, p) * eval_raw(*n.rhs, p);
    case Op::kDiv: return eval_raw(*n.lhs, p) / eval_raw(*n.rhs, p);
    case Op::kPow: return std::pow(eval_raw(*n.lhs, p), eval_raw(*n.rhs, p));
    default: return apply_unary(n.op, eval_raw(*n.lhs, p));
  }
}

double eval_checked(const NodePtr& node, const Expr& root, std::span<const double> p) {
  const Node& n = *node;
  double v = 0.0;
  switch (n.op) {
    case Op::kConstant: v = n.value; break;
    case Op::kVariable: v = p[n.variable]; break;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow:
      v = apply_binary(n.op, eval_checked(n.lhs, root, p), eval_checked(n.rhs, root, p));
      break;
    default:
      v = apply_unary(n.op, eval_checked(n.lhs, root, p));
      break;
  }
  if (!std::isfinite(v)) {
    throw NonFiniteError(to_string(root.with(node)), std::vector<double>(p.begin(), p.end()));
  }
  return v;
}

void check_point(const Expr& expr, std::span<const double> point) {
  if (static_cast<int>(point.size()) != expr.dimension()) {
    throw DimensionError("point has " + std::to_string(point.size()) +
                         " coordinates, expression expects " +
                         std::to_string(expr.dimension()));
  }
}

}  // namespace

double evaluate(const Expr& expr, std::span<const double> point) {
  check_point(expr, point);
  return eval_checked(expr.node_ptr(), expr, point);
}

double evaluate_unchecked(const Expr& expr, std::span<const double> point) {
  return eval_raw(expr.node(), point);
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr derive(const Expr& e, int i) {
  const Node& n = e.node();
  const auto& vars = e.variables_ptr();
  auto sub = [&](const NodePtr& p) { return e.with(p); };
  auto c = [&](double v) { return Expr::constant(v, vars); };
  switch (n.op) {
    case Op::kConstant: return c(0.0);
    case Op::kVariable: return c(n.variable == i ? 1.0 : 0.0);
    case Op::kNeg: return -derive(sub(n.lhs), i);
    case Op::kAdd: return derive(sub(n.lhs), i) + derive(sub(n.rhs), i);
    case Op::kSub: return derive(sub(n.lhs), i) - derive(sub(n.rhs), i);
    case Op::kMul: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      return derive(a, i) * b + a * derive(b, i);
    }
    case Op::kDiv: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      const Expr da = derive(a, i), db = derive(b, i);
      if (db.is_constant(0.0)) return da / b;
      return (da * b - a * db) / pow(b, c(2.0));
    }
    case Op::kPow: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      const Expr da = derive(a, i), db = derive(b, i);
      if (db.is_constant(0.0)) {
        return b * pow(a, b - c(1.0)) * da;
      }
      if (da.is_constant(0.0)) return pow(a, b) * apply(Op::kLn, a) * db;
      return pow(a, b) * (db * apply(Op::kLn, a) + b * da / a);
    }
    case Op::kSin: return apply(Op::kCos, sub(n.lhs)) * derive(sub(n.lhs), i);
    case Op::kCos: return -apply(Op::kSin, sub(n.lhs)) * derive(sub(n.lhs), i);
    case Op::kExp: return e * derive(sub(n.lhs), i);
    case Op::kLn: return derive(sub(n.lhs), i) / sub(n.lhs);
    case Op::kSqrt: return derive(sub(n.lhs), i) / (c(2.0) * e);
    case Op::kAbs: return apply(Op::kSign, sub(n.lhs)) * derive(sub(n.lhs), i);
    case Op::kTanh:
      return (c(1.0) - pow(e, c(2.0))) * derive(sub(n.lhs), i);
    case Op::kSign: return c(0.0);
  }
  throw Error("unhandled operator in differentiation");
}

void collect_sites(const Expr& e, std::vector<NonSmoothSite>& out) {
  const Node& n = e.node();
  if (n.op == Op::kAbs || n.op == Op::kSign || n.op == Op::kSqrt) {
    out.push_back({n.op, e.with(n.lhs)});
  }
  if (n.lhs) collect_sites(e.with(n.lhs), out);
  if (n.rhs) collect_sites(e.with(n.rhs), out);
}

}  // namespace

Expr differentiate(const Expr& expr, int variable_index) {
  if (variable_index < 0 || variable_index >= expr.dimension()) {
    throw DimensionError("cannot differentiate with respect to variable " +
                         std::to_string(variable_index) + " in dimension " +
                         std::to_string(expr.dimension()));
  }
  return derive(expr, variable_index);
}

std::vector<NonSmoothSite> non_smooth_sites(const Expr& expr) {
  std::vector<NonSmoothSite> sites;
  collect_sites(expr, sites);
  return sites;
}

bool is_smooth_everywhere(const Expr& expr) { return non_smooth_sites(expr).empty(); }

bool non_smooth_at(const Expr& expr, std::span<const double> point) {
  for (const auto& site : non_smooth_sites(expr)) {
    const double u = evaluate_unchecked(site.argument, point);
    if (site.function == Op::kSqrt ? !(u > 0.0) : u == 0.0) return true;
  }
  return false;
}

bool crosses_non_smooth(const Expr& expr, std::span<const double> a, std::span<const double> b) {
  for (const auto& site : non_smooth_sites(expr)) {
    const double ua = evaluate_unchecked(site.argument, a);
    const double ub = evaluate_unchecked(site.argument, b);
    if (site.function == Op::kSqrt) {
      if (!(ua > 0.0) || !(ub > 0.0)) return true;
    } else if (ua == 0.0 || ub == 0.0 || std::signbit(ua) != std::signbit(ub)) {
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Vector fields

VectorFieldDef::VectorFieldDef(std::vector<Expr> components) : components_(std::move(components)) {
  if (components_.size() < 2) throw DimensionError("dimension must be >= 2");
  for (const Expr& c : components_) {
    if (c.dimension() != dimension()) {
      throw DimensionError("vector field has " + std::to_string(dimension()) +
                           " components but a component is defined over " +
                           std::to_string(c.dimension()) + " variables");
    }
  }
}

std::vector<double> VectorFieldDef::evaluate(std::span<const double> point) const {
  std::vector<double> out;
  out.reserve(components_.size());
  for (const Expr& c : components_) out.push_back(lyapcert::evaluate(c, point));
  return out;
}

void VectorFieldDef::evaluate_unchecked(std::span<const double> point, std::span<double> out) const {
  for (std::size_t i = 0; i < components_.size(); ++i) {
    out[i] = lyapcert::evaluate_unchecked(components_[i], point);
  }
}

VectorFieldDef VectorFieldDef::scaled(double factor) const {
  std::vector<Expr> out;
  for (const Expr& c : components_) out.push_back(factor * c);
  return VectorFieldDef(std::move(out));
}

bool VectorFieldDef::is_smooth_everywhere() const {
  for (const Expr& c : components_) {
    if (!lyapcert::is_smooth_everywhere(c)) return false;
  }
  return true;
}

VectorFieldDef gradient(const Expr& F) {
  if (F.dimension() < 2) throw DimensionError("dimension must be >= 2");
  std::vector<Expr> parts;
  for (int i = 0; i < F.dimension(); ++i) parts.push_back(differentiate(F, i));
  return VectorFieldDef(std::move(parts));
}

VectorFieldDef make_gradient_system(const Expr& F, bool negate_F) {
  const VectorFieldDef g = gradient(F);
  return negate_F ? g : g.scaled(-1.0);
}

VectorFieldDef make_hamiltonian_system(const Expr& F, int dof) {
  if (F.dimension() % 2 != 0) {
    throw DimensionError("Hamiltonian system needs an even dimension, got " +
                         std::to_string(F.dimension()));
  }
  if (dof < 1 || 2 * dof != F.dimension()) {
    throw DimensionError("Hamiltonian with " + std::to_string(dof) +
                         " degrees of freedom needs dimension " + std::to_string(2 * dof) +
                         ", got " + std::to_string(F.dimension()));
  }
  std::vector<Expr> parts;
  for (int i = 0; i < dof; ++i) parts.push_back(differentiate(F, dof + i));
  for (int i = 0; i < dof; ++i) parts.push_back(-differentiate(F, i));
  return VectorFieldDef(std::move(parts));
}

std::vector<VectorFieldDef> jacobian(const VectorFieldDef& field) {
  std::vector<VectorFieldDef> rows;
  for (const Expr& c : field.components()) rows.push_back(gradient(c));
  return rows;
}

std::vector<VectorFieldDef> hessian(const Expr& F) { return jacobian(gradient(F)); }

}  // namespace lyapcert
