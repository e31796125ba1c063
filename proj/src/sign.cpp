#include <algorithm>
#include <cmath>
#include <limits>

#include "lyapcert/certify.hpp"

namespace lyapcert {

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kCertifiedStable: return "certified-stable";
    case Verdict::kViolated: return "violated";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

double frobenius(const std::vector<VectorFieldDef>& rows, std::span<const double> p) {
  double sum = 0.0;
  for (const auto& row : rows) {
    for (double v : row.evaluate(p)) sum += v * v;
  }
  return std::sqrt(sum);
}

Vec field_at(const VectorFieldDef& f, const Vec& v) { return Vec::from(f.evaluate(v.head(f.dimension()))); }

void check_dimensions(const VectorFieldDef& f, const Hypersurface& H) {
  if (f.dimension() != H.dimension()) {
    throw DimensionError("field has dimension " + std::to_string(f.dimension()) + " but the surface lives in R^" +
                         std::to_string(H.dimension()));
  }
}

void summarise(SignReport& r) {
  r.min_S = std::numeric_limits<double>::infinity();
  r.max_S = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double s = r.values[i];
    if (s < r.min_S) {
      r.min_S = s;
      r.argmin_vertex = static_cast<int>(i);
    }
    r.max_S = std::max(r.max_S, s);
    r.max_abs_S = std::max(r.max_abs_S, std::fabs(s));
  }
}

}  // namespace

std::vector<double> interpolation_margins(const Expr& F, const VectorFieldDef& f, const Hypersurface& H) {
  check_dimensions(f, H);
  const int n = H.dimension();
  const VectorFieldDef grad = gradient(F);
  const auto jac = jacobian(f);
  const auto hess = hessian(F);
  std::vector<double> margins;
  margins.reserve(H.vertices().size());
  for (const Vec& v : H.vertices()) {
    const auto p = v.head(n);
    const double g = norm(Vec::from(grad.evaluate(p)));
    if (!(g > 0.0)) {
      margins.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    const double pos_err = std::fabs(evaluate(F, p) - H.level()) / g;
    const double fn = norm(field_at(f, v));
    margins.push_back(pos_err * (frobenius(jac, p) + fn * frobenius(hess, p) / g));
  }
  return margins;
}

SignReport sign_condition(const VectorFieldDef& f, const Hypersurface& H, const std::vector<double>& margins,
                          double tol_rel) {
  check_dimensions(f, H);
  if (!H.normals_oriented()) throw GeometryError("sign condition needs inward-oriented normals");
  if (!margins.empty() && margins.size() != H.vertices().size()) {
    throw GeometryError("one interpolation margin per vertex required");
  }
  SignReport r;
  double max_f = 0.0;
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    const Vec fv = field_at(f, H.vertices()[i]);
    max_f = std::max(max_f, norm(fv));
    r.values.push_back(dot(H.normals()[i], fv));
  }
  for (double m : margins) r.max_margin = std::max(r.max_margin, m);
  r.tol_S = tol_rel * max_f + r.max_margin;
  summarise(r);
  r.argmin_point = H.vertices()[r.argmin_vertex];
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (r.values[i] < -r.tol_S) ++r.violations;
    const double m = margins.empty() ? 0.0 : margins[i];
    if (r.values[i] < -r.tol_S - m) ++r.strict_violations;
  }
  return r;
}

SignReport tilde_sign_condition(const Expr& F, const VectorFieldDef& f, const Hypersurface& H, double tol_rel) {
  check_dimensions(f, H);
  const int n = H.dimension();
  const VectorFieldDef grad = gradient(F);
  std::vector<Vec> g;
  std::size_t best = 0;
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    g.push_back(Vec::from(grad.evaluate(H.vertices()[i].head(n))));
    if (norm(g[i]) > norm(g[best])) best = i;
  }
  const double h = H.probe_distance();
  // +1 when grad F points into the internal component at vertex i.
  auto probe = [&](std::size_t i) {
    const Vec dir = normalized(g[i]);
    if (norm(dir) == 0.0) return 0;
    const bool plus_in = H.contains(H.vertices()[i] + h * dir);
    const bool minus_in = H.contains(H.vertices()[i] - h * dir);
    if (plus_in && !minus_in) return 1;
    if (minus_in && !plus_in) return -1;
    return 0;
  };
  SignReport r;
  r.epsilon = probe(best);
  if (r.epsilon == 0) throw CertificationError("grad F direction is ambiguous at the best-conditioned vertex");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (probe(i) != r.epsilon) {
      throw CertificationError("grad F direction is inconsistent across the surface (vertex " + std::to_string(i) +
                               "); the level is not regular");
    }
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec fv = field_at(f, H.vertices()[i]);
    scale = std::max(scale, norm(g[i]) * norm(fv));
    r.values.push_back(r.epsilon * dot(g[i], fv));
  }
  r.tol_S = tol_rel * scale;
  summarise(r);
  r.argmin_point = H.vertices()[r.argmin_vertex];
  for (double s : r.values) {
    if (s < -r.tol_S) {
      ++r.violations;
      ++r.strict_violations;
    }
  }
  return r;
}

StabilityCertificate certify_stability(const VectorFieldDef& f, const NestedFamily& family, double tol_rel) {
  StabilityCertificate cert;
  cert.tol_rel = tol_rel;
  cert.eta = family.eta;
  cert.grid = family.grid;
  if (f.dimension() != family.dimension()) {
    cert.reasons.push_back("field dimension does not match the family");
    return cert;
  }
  if (family.surfaces.empty()) {
    cert.reasons.push_back("family is empty");
    return cert;
  }
  bool usable = true;
  bool all_nonnegative = true;
  for (std::size_t i = 0; i < family.surfaces.size(); ++i) {
    const Hypersurface& H = family.surfaces[i].surface;
    const std::string tag = "surface " + std::to_string(i) + ": ";
    bool smooth = true;
    for (const Expr& c : f.components()) {
      if (is_smooth_everywhere(c)) continue;
      const int n = H.dimension();
      const auto& v = H.vertices();
      auto crosses = [&](int a, int b) { return crosses_non_smooth(c, v[a].head(n), v[b].head(n)); };
      for (const auto& e : H.edges()) smooth = smooth && !crosses(e[0], e[1]);
      for (const auto& t : H.triangles()) smooth = smooth && !crosses(t[0], t[1]) && !crosses(t[1], t[2]);
    }
    if (!smooth) {
      cert.reasons.push_back(tag + "f is not smooth on the surface");
      usable = false;
    }
    try {
      SignReport r = sign_condition(f, H, interpolation_margins(family.shifted, f, H), tol_rel);
      r.surface_index = static_cast<int>(i);
      if (r.min_S < -r.tol_S) all_nonnegative = false;
      if (r.strict_violations > 0 && (!cert.witness || r.min_S < cert.witness->S)) {
        cert.witness = Witness{r.argmin_point, r.min_S, static_cast<int>(i)};
      }
      cert.reports.push_back(std::move(r));
    } catch (const NonFiniteError& e) {
      cert.reasons.push_back(tag + "f is not finite on the surface: " + e.what());
      usable = false;
    }
  }
  if (cert.witness) {
    cert.verdict = Verdict::kViolated;
    cert.reasons.push_back("S < -tol_S - margin at surface " + std::to_string(cert.witness->surface_index));
  } else if (usable && all_nonnegative) {
    cert.verdict = Verdict::kCertifiedStable;
  } else {
    cert.verdict = Verdict::kInconclusive;
    if (!all_nonnegative) cert.reasons.push_back("negative S within the interpolation margin");
  }
  return cert;
}

}  // namespace lyapcert
