#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "certificate.hpp"
#include "lyapcert/cli.hpp"
#include "lyapcert/dynamics.hpp"

namespace lyapcert {

namespace {

namespace fs = std::filesystem;

std::string surface_file(int index) {
  char name[32];
  std::snprintf(name, sizeof name, "surface_%02d.mesh", index);
  return name;
}

std::string mesh_text(const Hypersurface& H) {
  std::ostringstream out;
  write_mesh(out, H);
  return out.str();
}

Json grid_json(const GridSpec& g) {
  Json out;
  out["lo"] = json_point(g.lo, g.dimension);
  out["hi"] = json_point(g.hi, g.dimension);
  Json res = Json::array();
  for (int a = 0; a < g.dimension; ++a) res.push_back(g.resolution[a]);
  out["resolution"] = res;
  out["min_cell_size"] = json_number(g.min_cell_size());
  return out;
}

Json attempts_json(const std::vector<LevelAttempt>& attempts) {
  Json out = Json::array();
  for (const auto& a : attempts) {
    Json item;
    item["level"] = json_number(a.level);
    item["accepted"] = a.accepted;
    item["reason"] = a.reason;
    out.push_back(item);
  }
  return out;
}

int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::kCertifiedStable: return kExitStable;
    case Verdict::kViolated: return kExitViolated;
    case Verdict::kInconclusive: return kExitInconclusive;
  }
  return kExitError;
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p += suffix;
  return p;
}

int run_certify(const SystemConfig& cfg, const CertifyOptions& options, const fs::path& out, std::ostream& log) {
  const Expr F = cfg.F();
  const VectorFieldDef f = cfg.field();
  const int n = cfg.dimension;

  Json doc;
  doc["format"] = "lyapcert-certificate/1";
  doc["verdict"] = nullptr;
  doc["exit_code"] = nullptr;
  doc["reasons"] = Json::array();

  Json system;
  system["mode"] = to_string(cfg.mode);
  system["dimension"] = n;
  system["variables"] = cfg.variables()->names();
  system["F"] = cfg.F_source;
  Json f_json = Json::array();
  if (cfg.mode == FieldMode::kExplicit) {
    for (const auto& s : cfg.f_sources) f_json.push_back(s);
  } else {
    for (const Expr& c : f.components()) f_json.push_back(to_string(c));
  }
  system["f"] = f_json;
  if (cfg.mode == FieldMode::kGradient) system["negate_F"] = cfg.negate_F;
  if (cfg.mode == FieldMode::kHamiltonian) system["dof"] = cfg.dof;
  system["x0"] = json_point(cfg.x0, n);
  doc["system"] = system;

  doc["assumptions"] = {
      {"smoothness",
       "F in C^n and f in C^1 are user-asserted; only symbolic non-smooth sites (abs, sign, sqrt) are checked"},
      {"discretization",
       "surfaces are piecewise-linear level-set approximations; residuals and margins are recorded per surface"}};

  Json tolerances;
  tolerances["tol_S_rel"] = json_number(cfg.tol_S);
  tolerances["eta"] = json_number(cfg.eta);
  tolerances["tol_H"] = json_number(cfg.tol_H);
  tolerances["quasi_tol"] = json_number(cfg.quasi.quasi_tol);
  doc["tolerances"] = tolerances;
  doc["grid"] = grid_json(cfg.grid);

  // Kept separate: ordered_json stores members in a vector, so references
  // into doc do not survive later insertions.
  Json reasons = Json::array();
  Verdict verdict = Verdict::kInconclusive;

  // Quasi-isolation.
  std::optional<QuasiIsolationReport> quasi;
  Json quasi_json;
  try {
    quasi = check_quasi_isolated(F, cfg.x0, cfg.grid, cfg.quasi);
    quasi_json["verdict"] = to_string(quasi->verdict);
    quasi_json["reason"] = quasi->reason;
    quasi_json["delta"] = json_number(quasi->delta);
    quasi_json["f0"] = json_number(quasi->f0);
    Json eps = Json::array(), diam = Json::array();
    for (double e : quasi->epsilons) eps.push_back(json_number(e));
    for (double d : quasi->diameters) diam.push_back(json_number(d));
    quasi_json["epsilons"] = eps;
    quasi_json["diameters"] = diam;
  } catch (const CertificationError& e) {
    quasi_json["verdict"] = "error";
    quasi_json["reason"] = e.what();
    reasons.push_back(std::string("quasi-isolation test failed: ") + e.what());
  }
  doc["quasi_isolation"] = quasi_json;

  // Family.
  std::optional<NestedFamily> family;
  Json family_json;
  family_json["requested"] = cfg.family.count;
  if (quasi && quasi->verdict == QuasiVerdict::kNotQuasiIsolated) {
    reasons.push_back("not-quasi-isolated: " + quasi->reason);
    family_json["found"] = 0;
    family_json["attempts"] = Json::array();
  } else {
    try {
      family = build_nested_family(F, cfg.x0, cfg.grid, cfg.family);
      family_json["found"] = static_cast<int>(family->surfaces.size());
      family_json["attempts"] = attempts_json(family->attempts);
      family_json["necessity_check"] =
          quasi && quasi->verdict == QuasiVerdict::kQuasiIsolated
              ? "consistent"
              : "family exists although the quasi-isolation test was not conclusive";
    } catch (const InsufficientSurfacesError& e) {
      family_json["found"] = e.found();
      family_json["attempts"] = attempts_json(e.attempts());
      reasons.push_back(std::string("insufficient-surfaces: ") + e.what());
    } catch (const CertificationError& e) {
      family_json["found"] = 0;
      family_json["attempts"] = Json::array();
      reasons.push_back(std::string("family construction failed: ") + e.what());
    }
  }
  doc["family"] = family_json;

  // Sign condition.
  Json surfaces = Json::array();
  std::vector<std::pair<fs::path, std::string>> meshes;
  const fs::path mesh_dir = sibling(out, ".meshes");
  const std::string mesh_prefix = out.filename().string() + ".meshes/";
  if (family) {
    StabilityCertificate cert = certify_stability(f, *family, cfg.tol_S);
    if (cfg.mode == FieldMode::kHamiltonian) {
      const double max_abs = apply_hamiltonian_tolerance(cert, cfg.tol_H);
      doc["hamiltonian"] = {{"max_abs_S", json_number(max_abs)}, {"tol_H", json_number(cfg.tol_H)}};
    }
    verdict = cert.verdict;
    for (const auto& r : cert.reasons) reasons.push_back(r);
    for (std::size_t i = 0; i < family->surfaces.size(); ++i) {
      const FamilySurface& s = family->surfaces[i];
      Json item;
      item["index"] = static_cast<int>(i);
      item["level"] = json_number(s.level);
      item["vertices"] = static_cast<int>(s.surface.vertices().size());
      item["diameter"] = json_number(s.surface.diameter());
      item["d_to_x0"] = json_number(s.d_to_x0);
      item["min_grad_norm"] = json_number(s.min_grad_norm);
      item["level_residual"] = json_number(s.level_residual);
      const auto report = std::find_if(cert.reports.begin(), cert.reports.end(),
                                       [&](const SignReport& r) { return r.surface_index == static_cast<int>(i); });
      if (report != cert.reports.end()) {
        item["minS"] = json_number(report->min_S);
        item["maxS"] = json_number(report->max_S);
        item["argmin"] = json_point(report->argmin_point, n);
        item["tol_S"] = json_number(report->tol_S);
        item["max_margin"] = json_number(report->max_margin);
        item["violations"] = report->violations;
        item["strict_violations"] = report->strict_violations;
      }
      item["mesh"] = mesh_prefix + surface_file(static_cast<int>(i));
      surfaces.push_back(item);
      meshes.emplace_back(mesh_dir / surface_file(static_cast<int>(i)), mesh_text(s.surface));
    }
    if (cert.witness) {
      doc["witness"] = {{"point", json_point(cert.witness->point, n)},
                        {"S", json_number(cert.witness->S)},
                        {"surface", cert.witness->surface_index}};
    } else {
      doc["witness"] = nullptr;
    }
  } else {
    doc["witness"] = nullptr;
  }
  doc["surfaces"] = surfaces;

  // Falsifier.
  if ((options.falsify || cfg.falsifier.enabled) && family) {
    FalsificationParams params;
    params.trials = cfg.falsifier.trials;
    params.horizon = cfg.falsifier.horizon;
    params.seed = cfg.seed;
    params.integrator.rel_tol = cfg.falsifier.rel_tol;
    params.integrator.abs_tol = cfg.falsifier.abs_tol;
    const fs::path traj_dir = sibling(out, ".trajectories");
    if (cfg.falsifier.dump_csv) params.dump_dir = traj_dir.string();
    const FalsificationReport report = containment_test(f, *family, params);
    Json emp;
    emp["trials"] = report.trials;
    emp["escapes"] = report.escapes;
    emp["escape_rate"] = json_number(static_cast<double>(report.escapes) / report.trials);
    if (report.first_escape) {
      emp["first_escape"] = {{"start", json_point(report.first_escape->start, n)},
                             {"time", json_number(report.first_escape->time)},
                             {"surface_index", report.first_escape->surface_index}};
    } else {
      emp["first_escape"] = nullptr;
    }
    emp["max_excursion_ratio"] = json_number(report.max_excursion_ratio);
    emp["horizon"] = json_number(params.horizon);
    emp["seed"] = cfg.seed;
    emp["convention"] = report.convention;
    emp["note"] = "empirical evidence only; it can downgrade a verdict but never upgrade one";
    if (params.dump_dir) emp["trajectory_dir"] = out.filename().string() + ".trajectories";
    doc["empirical"] = emp;
    if (verdict == Verdict::kCertifiedStable && report.escapes > 0) {
      verdict = Verdict::kInconclusive;
      reasons.push_back("falsifier found escaping trajectories despite the sign condition");
    }
  }

  const int code = exit_code_for(verdict);
  doc["verdict"] = to_string(verdict);
  doc["exit_code"] = code;
  doc["reasons"] = reasons;

  if (fs::exists(mesh_dir)) fs::remove_all(mesh_dir);
  for (const auto& [path, text] : meshes) write_file_atomic(path, text);
  write_file_atomic(out, dump_json(doc));
  log << "verdict: " << to_string(verdict) << "\n";
  for (const auto& r : reasons) log << "  " << r.get<std::string>() << "\n";
  log << "certificate: " << out.string() << "\n";
  return code;
}

}  // namespace

int cmd_certify(const CertifyOptions& options, std::ostream& log) {
  SystemConfig cfg;
  try {
    cfg = load_config(options.config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (options.seed) cfg.seed = *options.seed;
  fs::path out = options.out ? *options.out
                             : options.config.parent_path() / (options.config.stem().string() + ".cert.json");
  try {
    return run_certify(cfg, options, out, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int cmd_levels(const fs::path& config, const fs::path& out_dir, std::ostream& log) {
  SystemConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const NestedFamily family = build_nested_family(cfg.F(), cfg.x0, cfg.grid, cfg.family);
    for (std::size_t i = 0; i < family.surfaces.size(); ++i) {
      const FamilySurface& s = family.surfaces[i];
      write_file_atomic(out_dir / surface_file(static_cast<int>(i)), mesh_text(s.surface));
      log << surface_file(static_cast<int>(i)) << ": level " << s.level << ", " << s.surface.vertices().size()
          << " vertices\n";
    }
    return kExitStable;
  } catch (const InsufficientSurfacesError& e) {
    log << e.what() << "\n";
    for (const auto& a : e.attempts()) {
      log << "  level " << a.level << ": " << (a.accepted ? "accepted" : a.reason) << "\n";
    }
    return kExitInconclusive;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  }
}

namespace {

struct SvgFrame {
  Vec lo, hi;
  double scale = 1.0;
  double margin = 20.0;
  double x(double wx) const { return margin + (wx - lo.x) * scale; }
  double y(double wy) const { return margin + (hi.y - wy) * scale; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::vector<double>> read_csv_points(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_plot(const fs::path& cert_path, const fs::path& svg_path, std::ostream& log) {
  std::ifstream in(cert_path);
  if (!in) throw Error("cannot read certificate " + cert_path.string());
  const Json doc = Json::parse(in);
  const Json& system = doc.at("system");
  const int n = system.at("dimension").get<int>();
  if (n != 2) {
    log << "error: plotting supports n=2 only\n";
    return kExitError;
  }
  auto vars = std::make_shared<const Variables>(system.at("variables").get<std::vector<std::string>>());
  std::vector<Expr> components;
  for (const auto& s : system.at("f")) components.push_back(parse_expression(s.get<std::string>(), vars));
  const VectorFieldDef f(std::move(components));

  const Json& grid = doc.at("grid");
  SvgFrame frame;
  frame.lo = Vec::from(grid.at("lo").get<std::vector<double>>());
  frame.hi = Vec::from(grid.at("hi").get<std::vector<double>>());
  const double size = 760.0;
  frame.scale = size / std::max(frame.hi.x - frame.lo.x, frame.hi.y - frame.lo.y);
  const double width = 2 * frame.margin + (frame.hi.x - frame.lo.x) * frame.scale;
  const double height = 2 * frame.margin + (frame.hi.y - frame.lo.y) * frame.scale;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fmt(frame.x(frame.lo.x)) << "\" y=\"" << fmt(frame.y(frame.hi.y)) << "\" width=\""
      << fmt((frame.hi.x - frame.lo.x) * frame.scale) << "\" height=\"" << fmt((frame.hi.y - frame.lo.y) * frame.scale)
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  svg << "<text x=\"" << fmt(frame.margin) << "\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">verdict: "
      << doc.at("verdict").get<std::string>() << "</text>\n";

  if (const auto emp = doc.find("empirical"); emp != doc.end() && emp->contains("trajectory_dir")) {
    const fs::path dir = cert_path.parent_path() / (*emp)["trajectory_dir"].get<std::string>();
    std::vector<fs::path> files;
    if (fs::exists(dir)) {
      for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() > 20) files.resize(20);
    for (const auto& file : files) {
      svg << "<polyline fill=\"none\" stroke=\"#8888cc\" stroke-width=\"0.7\" points=\"";
      for (const auto& row : read_csv_points(file)) svg << fmt(frame.x(row.at(1))) << "," << fmt(frame.y(row.at(2))) << " ";
      svg << "\"/>\n";
    }
  }

  int red = 0;
  for (const auto& s : doc.at("surfaces")) {
    std::ifstream mesh_in(cert_path.parent_path() / s.at("mesh").get<std::string>());
    if (!mesh_in) throw Error("missing mesh sidecar " + s.at("mesh").get<std::string>());
    const MeshData mesh = read_mesh(mesh_in);
    const double tol = s.contains("tol_S") && s["tol_S"].is_number() ? s["tol_S"].get<double>() : 0.0;
    svg << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    for (const auto& e : mesh.edges) {
      const Vec& a = mesh.vertices[e[0]];
      const Vec& b = mesh.vertices[e[1]];
      svg << "<line x1=\"" << fmt(frame.x(a.x)) << "\" y1=\"" << fmt(frame.y(a.y)) << "\" x2=\"" << fmt(frame.x(b.x))
          << "\" y2=\"" << fmt(frame.y(b.y)) << "\"/>\n";
    }
    svg << "</g>\n<g stroke=\"none\">\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec& v = mesh.vertices[i];
      const double S = dot(mesh.normals[i], Vec::from(f.evaluate(v.head(2))));
      const bool bad = S < -tol;
      red += bad;
      svg << "<circle cx=\"" << fmt(frame.x(v.x)) << "\" cy=\"" << fmt(frame.y(v.y)) << "\" r=\"1.6\" fill=\""
          << (bad ? "#d62728" : "#2ca02c") << "\" class=\"" << (bad ? "neg" : "pos") << "\"/>\n";
    }
    svg << "</g>\n";
  }
  const Vec x0 = Vec::from(system.at("x0").get<std::vector<double>>());
  svg << "<circle cx=\"" << fmt(frame.x(x0.x)) << "\" cy=\"" << fmt(frame.y(x0.y))
      << "\" r=\"4\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  svg << "</svg>\n";
  write_file_atomic(svg_path, svg.str());
  log << "plot: " << svg_path.string() << " (" << red << " vertices with S < -tol)\n";
  return kExitStable;
}

}  // namespace

int cmd_plot(const fs::path& certificate, const fs::path& svg, std::ostream& log) {
  try {
    return run_plot(certificate, svg, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace lyapcert
