#include <algorithm>
#include <cmath>

#include "lyapcert/certify.hpp"

namespace lyapcert {

std::string to_string(GradientVerdict verdict) {
  return verdict == GradientVerdict::kStableForF ? "stable-for-F" : "stable-for-minus-F";
}

namespace {

void require_quasi_isolated(const Expr& F, const Vec& x0, const GridSpec& grid, const QuasiIsolationParams& params) {
  const QuasiIsolationReport q = check_quasi_isolated(F, x0, grid, params);
  if (q.verdict == QuasiVerdict::kNotQuasiIsolated) {
    throw CertificationError("x0 is not quasi-isolated for F: " + q.reason);
  }
}

}  // namespace

GradientClassification classify_gradient_system(const Expr& F, const Vec& x0, const GridSpec& grid,
                                                 const SystemParams& params) {
  require_quasi_isolated(F, x0, grid, params.quasi);
  NestedFamily family = build_nested_family(F, x0, grid, params.family);
  const VectorFieldDef descent = make_gradient_system(F, false);
  std::vector<int> positive, negative;
  for (std::size_t i = 0; i < family.surfaces.size(); ++i) {
    const Hypersurface& H = family.surfaces[i].surface;
    const SignReport r = sign_condition(descent, H, interpolation_margins(family.shifted, descent, H), params.tol_rel);
    const auto above = std::count_if(r.values.begin(), r.values.end(), [&](double s) { return s > r.tol_S; });
    const auto below = std::count_if(r.values.begin(), r.values.end(), [&](double s) { return s < -r.tol_S; });
    if (above > 0 && below > 0) {
      throw CertificationError("surface " + std::to_string(i) + " has S of both signs (" + std::to_string(above) +
                               " positive, " + std::to_string(below) + " negative vertices)");
    }
    if (above > 0) positive.push_back(static_cast<int>(i));
    if (below > 0) negative.push_back(static_cast<int>(i));
  }
  const bool for_F = positive.size() >= negative.size();
  VectorFieldDef field = for_F ? descent : make_gradient_system(F, true);
  NestedFamily sub = family.subfamily(for_F ? positive : negative);
  StabilityCertificate cert = certify_stability(field, sub, params.tol_rel);
  return GradientClassification{for_F ? GradientVerdict::kStableForF : GradientVerdict::kStableForMinusF,
                                std::move(positive), std::move(negative), std::move(field), std::move(sub),
                                std::move(cert)};
}

double apply_hamiltonian_tolerance(StabilityCertificate& cert, double tol_H) {
  double max_abs = 0.0;
  for (const auto& r : cert.reports) max_abs = std::max(max_abs, r.max_abs_S);
  if (max_abs > tol_H) {
    cert.reasons.push_back("max |S| exceeds tol_H; check the dof split or the grid");
    if (cert.verdict == Verdict::kCertifiedStable) cert.verdict = Verdict::kInconclusive;
  }
  return max_abs;
}

HamiltonianCertification certify_hamiltonian(const Expr& F, int dof, const Vec& x0, const GridSpec& grid,
                                             const SystemParams& params) {
  VectorFieldDef field = make_hamiltonian_system(F, dof);
  require_quasi_isolated(F, x0, grid, params.quasi);
  NestedFamily family = build_nested_family(F, x0, grid, params.family);
  StabilityCertificate cert = certify_stability(field, family, params.tol_rel);
  const double max_abs = apply_hamiltonian_tolerance(cert, params.tol_H);
  return HamiltonianCertification{std::move(field), std::move(family), std::move(cert), max_abs};
}

}  // namespace lyapcert
