#include <algorithm>
#include <cmath>
#include <variant>

#include "lyapcert/certify.hpp"

namespace lyapcert {

NestedFamily NestedFamily::subfamily(const std::vector<int>& indices) const {
  NestedFamily out = *this;
  out.surfaces.clear();
  for (int i : indices) out.surfaces.push_back(surfaces.at(i));
  return out;
}

namespace {

bool touches_non_smooth(const Expr& F, const Hypersurface& H) {
  if (is_smooth_everywhere(F)) return false;
  const int n = H.dimension();
  const auto& v = H.vertices();
  auto crosses = [&](int a, int b) { return crosses_non_smooth(F, v[a].head(n), v[b].head(n)); };
  for (const auto& e : H.edges()) {
    if (crosses(e[0], e[1])) return true;
  }
  for (const auto& t : H.triangles()) {
    if (crosses(t[0], t[1]) || crosses(t[1], t[2]) || crosses(t[2], t[0])) return true;
  }
  return false;
}

std::string describe(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace

NestedFamily build_nested_family(const Expr& F, const Vec& x0, const GridSpec& spec, const FamilyParams& params) {
  spec.validate();
  if (!spec.contains_strictly(x0)) throw GeometryError("grid box must contain x0 strictly inside");
  if (F.dimension() != spec.dimension) {
    throw DimensionError("F has dimension " + std::to_string(F.dimension()) + " but the grid has " +
                         std::to_string(spec.dimension));
  }
  if (params.count < 1) throw CertificationError("family count must be positive");
  const double f0 = evaluate(F, x0.head(spec.dimension));
  const Expr shifted = F - Expr::constant(f0, F.variables_ptr());
  const SampleGrid grid = SampleGrid::build(shifted, spec);
  const VectorFieldDef grad = gradient(shifted);

  NestedFamily family{x0, F, shifted, f0, spec, params.eta, {}, {}};
  double a0 = params.a0;
  if (a0 <= 0.0) a0 = 0.5 * max_abs_near(grid, x0, 0.0);
  if (!(a0 > 0.0)) throw CertificationError("F is constant near x0; no level schedule exists");

  for (int i = 0; i < params.max_levels && static_cast<int>(family.surfaces.size()) < params.count; ++i) {
    for (double sign : {1.0, -1.0}) {
      const double a = sign * a0 * std::ldexp(1.0, -i);
      LevelAttempt attempt{a, false, {}};
      const LevelExtraction extraction = extract_level(grid, a);
      std::vector<std::string> reasons;
      std::optional<FamilySurface> chosen;
      for (std::size_t c = 0; c < extraction.components.size() && !chosen; ++c) {
        const std::string tag = "component " + std::to_string(c) + ": ";
        Classification cls = classify_closed(extraction.components[c]);
        if (const auto* r = std::get_if<Rejection>(&cls)) {
          reasons.push_back(tag + to_string(r->reason));
          continue;
        }
        const Hypersurface& H = std::get<Hypersurface>(cls);
        try {
          if (!bounds_point(H, x0)) {
            reasons.push_back(tag + "does not bound x0");
            continue;
          }
        } catch (const ProximityError&) {
          reasons.push_back(tag + "x0 within half a cell of the surface");
          continue;
        }
        const double min_grad = min_gradient_norm(grad, H);
        if (min_grad < params.eta) {
          reasons.push_back(tag + "min |grad F| " + describe(min_grad) + " below eta " + describe(params.eta));
          continue;
        }
        if (touches_non_smooth(shifted, H)) {
          reasons.push_back(tag + "passes through a non-smooth point of F");
          continue;
        }
        std::optional<Hypersurface> oriented;
        try {
          oriented = orient_inward(H, x0, grad);
        } catch (const GeometryError& e) {
          reasons.push_back(tag + "orientation failed: " + e.what());
          continue;
        }
        const double d = distance_to_point(x0, *oriented);
        if (!family.surfaces.empty()) {
          const FamilySurface& prev = family.surfaces.back();
          try {
            if (!is_nested(prev.surface, *oriented)) {
              reasons.push_back(tag + "not nested inside the previous surface");
              continue;
            }
          } catch (const ProximityError&) {
            reasons.push_back(tag + "within one cell of the previous surface");
            continue;
          }
          if (!(d < prev.d_to_x0)) {
            reasons.push_back(tag + "distance to x0 does not decrease");
            continue;
          }
          if (!(oriented->diameter() < prev.surface.diameter())) {
            reasons.push_back(tag + "diameter does not decrease");
            continue;
          }
        }
        chosen = FamilySurface{oriented->level(), *oriented, d, min_grad, level_residual(shifted, *oriented)};
      }
      if (extraction.components.empty()) reasons.push_back("level set misses the grid");
      if (chosen) {
        attempt.accepted = true;
        family.surfaces.push_back(std::move(*chosen));
        family.attempts.push_back(std::move(attempt));
        break;
      }
      for (std::size_t r = 0; r < reasons.size(); ++r) attempt.reason += (r ? "; " : "") + reasons[r];
      family.attempts.push_back(std::move(attempt));
    }
  }
  const int found = static_cast<int>(family.surfaces.size());
  if (found < params.count) {
    throw InsufficientSurfacesError("only " + std::to_string(found) + " of " + std::to_string(params.count) +
                                        " surfaces passed every check",
                                    family.attempts, found);
  }
  return family;
}

}  // namespace lyapcert
