#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "lyapcert/cli.hpp"

namespace lyapcert {

std::string to_string(FieldMode mode) {
  switch (mode) {
    case FieldMode::kExplicit: return "explicit";
    case FieldMode::kGradient: return "gradient";
    case FieldMode::kHamiltonian: return "hamiltonian";
  }
  return "unknown";
}

std::shared_ptr<const Variables> SystemConfig::variables() const {
  if (mode == FieldMode::kHamiltonian) return std::make_shared<const Variables>(Variables::hamiltonian(dof));
  return std::make_shared<const Variables>(Variables::standard(dimension));
}

Expr SystemConfig::F() const { return parse_expression(F_source, variables()); }

VectorFieldDef SystemConfig::field() const {
  switch (mode) {
    case FieldMode::kGradient: return make_gradient_system(F(), negate_F);
    case FieldMode::kHamiltonian: return make_hamiltonian_system(F(), dof);
    case FieldMode::kExplicit: break;
  }
  const auto vars = variables();
  std::vector<Expr> components;
  for (const auto& s : f_sources) components.push_back(parse_expression(s, vars));
  return VectorFieldDef(std::move(components));
}

namespace {

class Reader {
 public:
  Reader(const toml::table& root, std::string origin) : root_(root), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const toml::node* node, const std::string& field, const std::string& message) const {
    std::ostringstream msg;
    msg << origin_;
    if (node) msg << ":" << node->source().begin.line;
    msg << ": field '" << field << "': " << message;
    throw ConfigError(msg.str());
  }

  const toml::table* table(const std::string& name) const {
    const toml::node* n = root_.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) fail(n, name, "expected a table");
    return n->as_table();
  }

  void only(const toml::table& t, const std::string& prefix, const std::set<std::string>& allowed) const {
    for (const auto& [key, node] : t) {
      if (!allowed.count(std::string(key.str()))) fail(&node, prefix + std::string(key.str()), "unknown key");
    }
  }

  template <typename T>
  std::optional<T> get(const toml::table* t, const std::string& prefix, const std::string& key) const {
    if (!t) return std::nullopt;
    const toml::node* n = t->get(key);
    if (!n) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n->value<double>()) return *v;
      fail(n, prefix + key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      if (n->is_integer()) return n->as_integer()->get();
      fail(n, prefix + key, "expected an integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (n->is_boolean()) return n->as_boolean()->get();
      fail(n, prefix + key, "expected true or false");
    } else {
      if (n->is_string()) return n->as_string()->get();
      fail(n, prefix + key, "expected a string");
    }
  }

  std::optional<std::vector<double>> numbers(const toml::table* t, const std::string& prefix,
                                             const std::string& key) const {
    if (!t) return std::nullopt;
    const toml::node* n = t->get(key);
    if (!n) return std::nullopt;
    if (!n->is_array()) fail(n, prefix + key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : *n->as_array()) {
      auto v = item.value<double>();
      if (!v) fail(&item, prefix + key, "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  const toml::node* node(const toml::table* t, const std::string& key) const { return t ? t->get(key) : nullptr; }

 private:
  const toml::table& root_;
  std::string origin_;
};

Vec to_vec(const std::vector<double>& v) { return Vec::from(v); }

}  // namespace

SystemConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(msg.str());
  }
  const Reader r(root, origin);
  r.only(root, "", {"dimension", "mode", "F", "f", "x0", "negate_F", "dof", "seed", "grid", "tolerances", "quasi",
                    "family", "falsifier"});
  SystemConfig cfg;
  const toml::table* top = &root;

  const auto dim = r.get<std::int64_t>(top, "", "dimension");
  if (!dim) r.fail(nullptr, "dimension", "required");
  if (*dim != 2 && *dim != 3) r.fail(r.node(top, "dimension"), "dimension", "only n = 2 or 3 is supported");
  cfg.dimension = static_cast<int>(*dim);

  const std::string mode = r.get<std::string>(top, "", "mode").value_or("explicit");
  if (mode == "explicit") {
    cfg.mode = FieldMode::kExplicit;
  } else if (mode == "gradient") {
    cfg.mode = FieldMode::kGradient;
  } else if (mode == "hamiltonian") {
    cfg.mode = FieldMode::kHamiltonian;
  } else {
    r.fail(r.node(top, "mode"), "mode", "expected explicit, gradient or hamiltonian");
  }

  const auto F = r.get<std::string>(top, "", "F");
  if (!F) r.fail(nullptr, "F", "required");
  cfg.F_source = *F;
  if (const toml::node* fn = r.node(top, "f")) {
    if (cfg.mode != FieldMode::kExplicit) r.fail(fn, "f", "explicit components are not allowed in " + mode + " mode");
    if (!fn->is_array()) r.fail(fn, "f", "expected an array of expression strings");
    for (const auto& item : *fn->as_array()) {
      if (!item.is_string()) r.fail(&item, "f", "expected an array of expression strings");
      cfg.f_sources.push_back(item.as_string()->get());
    }
    if (static_cast<int>(cfg.f_sources.size()) != cfg.dimension) {
      r.fail(fn, "f", "expected " + std::to_string(cfg.dimension) + " components");
    }
  } else if (cfg.mode == FieldMode::kExplicit) {
    r.fail(nullptr, "f", "required in explicit mode");
  }
  if (const auto v = r.get<bool>(top, "", "negate_F")) {
    if (cfg.mode != FieldMode::kGradient) r.fail(r.node(top, "negate_F"), "negate_F", "only valid in gradient mode");
    cfg.negate_F = *v;
  }
  if (const auto v = r.get<std::int64_t>(top, "", "dof")) {
    if (cfg.mode != FieldMode::kHamiltonian) r.fail(r.node(top, "dof"), "dof", "only valid in hamiltonian mode");
    cfg.dof = static_cast<int>(*v);
  }
  if (cfg.mode == FieldMode::kHamiltonian && 2 * cfg.dof != cfg.dimension) {
    r.fail(r.node(top, "dof"), "dof", "hamiltonian mode needs dimension = 2 * dof");
  }
  if (const auto v = r.get<std::int64_t>(top, "", "seed")) {
    if (*v < 0) r.fail(r.node(top, "seed"), "seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*v);
  }

  const auto x0 = r.numbers(top, "", "x0");
  if (!x0) {
    cfg.x0 = Vec{};
  } else {
    if (static_cast<int>(x0->size()) != cfg.dimension) {
      r.fail(r.node(top, "x0"), "x0", "expected " + std::to_string(cfg.dimension) + " coordinates");
    }
    cfg.x0 = to_vec(*x0);
  }

  const toml::table* grid = r.table("grid");
  if (!grid) r.fail(nullptr, "grid", "required");
  r.only(*grid, "grid.", {"lo", "hi", "resolution"});
  cfg.grid.dimension = cfg.dimension;
  for (const char* key : {"lo", "hi"}) {
    const auto v = r.numbers(grid, "grid.", key);
    if (!v) r.fail(nullptr, std::string("grid.") + key, "required");
    if (static_cast<int>(v->size()) != cfg.dimension) {
      r.fail(r.node(grid, key), std::string("grid.") + key, "expected " + std::to_string(cfg.dimension) + " values");
    }
    (std::string(key) == "lo" ? cfg.grid.lo : cfg.grid.hi) = to_vec(*v);
  }
  const toml::node* res = r.node(grid, "resolution");
  if (!res) r.fail(nullptr, "grid.resolution", "required");
  cfg.grid.resolution = {1, 1, 1};
  if (res->is_integer()) {
    for (int a = 0; a < cfg.dimension; ++a) cfg.grid.resolution[a] = static_cast<int>(res->as_integer()->get());
  } else if (res->is_array() && static_cast<int>(res->as_array()->size()) == cfg.dimension) {
    int a = 0;
    for (const auto& item : *res->as_array()) {
      if (!item.is_integer()) r.fail(&item, "grid.resolution", "expected integers");
      cfg.grid.resolution[a++] = static_cast<int>(item.as_integer()->get());
    }
  } else {
    r.fail(res, "grid.resolution", "expected an integer or one integer per axis");
  }
  try {
    cfg.grid.validate();
  } catch (const GeometryError& e) {
    r.fail(grid, "grid", e.what());
  }
  if (!cfg.grid.contains_strictly(cfg.x0)) r.fail(r.node(top, "x0"), "x0", "must lie strictly inside the grid box");

  if (const toml::table* t = r.table("tolerances")) {
    r.only(*t, "tolerances.", {"eta", "tol_S", "tol_H", "quasi_tol"});
    cfg.eta = r.get<double>(t, "tolerances.", "eta").value_or(cfg.eta);
    cfg.tol_S = r.get<double>(t, "tolerances.", "tol_S").value_or(cfg.tol_S);
    cfg.tol_H = r.get<double>(t, "tolerances.", "tol_H").value_or(cfg.tol_H);
    cfg.quasi.quasi_tol = r.get<double>(t, "tolerances.", "quasi_tol").value_or(cfg.quasi.quasi_tol);
    for (const char* key : {"eta", "tol_S", "tol_H", "quasi_tol"}) {
      if (const auto v = r.get<double>(t, "tolerances.", key); v && !(*v >= 0.0)) {
        r.fail(r.node(t, key), std::string("tolerances.") + key, "must be non-negative");
      }
    }
  }
  cfg.family.eta = cfg.eta;
  if (const toml::table* t = r.table("quasi")) {
    r.only(*t, "quasi.", {"eps0", "steps"});
    cfg.quasi.eps0 = r.get<double>(t, "quasi.", "eps0").value_or(cfg.quasi.eps0);
    cfg.quasi.steps = static_cast<int>(r.get<std::int64_t>(t, "quasi.", "steps").value_or(cfg.quasi.steps));
    if (cfg.quasi.steps < 3) r.fail(r.node(t, "steps"), "quasi.steps", "must be at least 3");
  }
  if (const toml::table* t = r.table("family")) {
    r.only(*t, "family.", {"count", "a0", "max_levels"});
    cfg.family.count = static_cast<int>(r.get<std::int64_t>(t, "family.", "count").value_or(cfg.family.count));
    cfg.family.a0 = r.get<double>(t, "family.", "a0").value_or(cfg.family.a0);
    cfg.family.max_levels =
        static_cast<int>(r.get<std::int64_t>(t, "family.", "max_levels").value_or(cfg.family.max_levels));
    if (cfg.family.count < 1) r.fail(r.node(t, "count"), "family.count", "must be positive");
  }
  if (const toml::table* t = r.table("falsifier")) {
    r.only(*t, "falsifier.", {"enabled", "trials", "horizon", "rel_tol", "abs_tol", "dump_csv"});
    auto& fs = cfg.falsifier;
    fs.enabled = r.get<bool>(t, "falsifier.", "enabled").value_or(fs.enabled);
    fs.trials = static_cast<int>(r.get<std::int64_t>(t, "falsifier.", "trials").value_or(fs.trials));
    fs.horizon = r.get<double>(t, "falsifier.", "horizon").value_or(fs.horizon);
    fs.rel_tol = r.get<double>(t, "falsifier.", "rel_tol").value_or(fs.rel_tol);
    fs.abs_tol = r.get<double>(t, "falsifier.", "abs_tol").value_or(fs.abs_tol);
    fs.dump_csv = r.get<bool>(t, "falsifier.", "dump_csv").value_or(fs.dump_csv);
    if (fs.trials < 1) r.fail(r.node(t, "trials"), "falsifier.trials", "must be positive");
  }

  // Surface expression errors now, with the field they came from.
  try {
    (void)cfg.F();
  } catch (const Error& e) {
    r.fail(r.node(top, "F"), "F", e.what());
  }
  try {
    (void)cfg.field();
  } catch (const Error& e) {
    r.fail(r.node(top, "f"), cfg.mode == FieldMode::kExplicit ? "f" : "F", e.what());
  }
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.filename().string());
}

}  // namespace lyapcert
