#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lyapcert/expr.hpp"
#include "lyapcert/grid.hpp"
#include "lyapcert/hypersurface.hpp"

namespace lyapcert {

// A precondition of a certification step does not hold (for instance the
// reference point is not quasi-isolated, or a surface has mixed signs).
class CertificationError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Quasi-isolation

enum class QuasiVerdict { kQuasiIsolated, kNotQuasiIsolated, kInconclusive };
std::string to_string(QuasiVerdict verdict);

struct QuasiIsolationParams {
  double eps0 = 0.0;  // <= 0 selects max |F - F(x0)| over nodes within delta/2
  int steps = 12;
  // Quasi-isolated when the last band diameter is at most this fraction of
  // the first one.
  double quasi_tol = 0.25;
  // Stall: the last three diameters agree within this relative spread and
  // all exceed stall_cells grid cells.
  double stall_tol = 0.05;
  double stall_cells = 10.0;
};

struct QuasiIsolationReport {
  QuasiVerdict verdict = QuasiVerdict::kInconclusive;
  double delta = 0.0;  // radius of the ball the bands are restricted to
  double f0 = 0.0;     // F(x0), subtracted before banding
  std::vector<double> epsilons;
  std::vector<double> diameters;   // bounding-box diagonal of the component
  std::vector<long> cell_counts;
  std::string reason;
};

// Flood-fills the cells of {|F - F(x0)| < eps_i} connected to x0 inside the
// ball of radius delta (distance from x0 to the box boundary), for
// eps_i = eps0 * 2^-i. A cell is in the band when the interval spanned by its
// corner values meets (-eps, eps).
QuasiIsolationReport check_quasi_isolated(const Expr& F, const Vec& x0, const GridSpec& grid,
                                          const QuasiIsolationParams& params = {});

// ---------------------------------------------------------------------------
// Nested families

struct FamilyParams {
  int count = 6;
  double eta = 1e-4;      // minimum |grad F| on every surface
  double a0 = 0.0;        // <= 0 selects half of max |F - F(x0)| within delta/2
  int max_levels = 40;    // a_i = a0 * 2^-i for i < max_levels
};

struct FamilySurface {
  double level = 0.0;  // level of F - F(x0)
  Hypersurface surface;
  double d_to_x0 = 0.0;
  double min_grad_norm = 0.0;
  double level_residual = 0.0;
};

struct LevelAttempt {
  double level = 0.0;
  bool accepted = false;
  std::string reason;  // why the level was skipped; empty when accepted
};

struct NestedFamily {
  Vec x0;
  Expr F;        // as supplied
  Expr shifted;  // F - F(x0), whose levels the surfaces are
  double f0 = 0.0;
  GridSpec grid;
  double eta = 0.0;
  std::vector<FamilySurface> surfaces;  // outermost first
  std::vector<LevelAttempt> attempts;

  int dimension() const { return grid.dimension; }
  // Copy holding only the given surfaces, in the given order.
  NestedFamily subfamily(const std::vector<int>& indices) const;
};

class InsufficientSurfacesError : public CertificationError {
 public:
  InsufficientSurfacesError(const std::string& message, std::vector<LevelAttempt> attempts, int found)
      : CertificationError(message), attempts_(std::move(attempts)), found_(found) {}
  const std::vector<LevelAttempt>& attempts() const { return attempts_; }
  int found() const { return found_; }

 private:
  std::vector<LevelAttempt> attempts_;
  int found_;
};

// Tries a_0, -a_0, a_1, -a_1, ... and keeps, per level, the first component
// that is closed, bounds x0, has |grad F| >= eta, avoids the non-smooth set
// of F, nests inside the previous surface and shrinks both its diameter and
// its distance to x0. Stops after params.count surfaces. Normals are
// +-grad F / |grad F|, oriented inward.
NestedFamily build_nested_family(const Expr& F, const Vec& x0, const GridSpec& grid,
                                 const FamilyParams& params = {});

// Default a0 and eps0: max |F - F(x0)| over grid nodes within delta/2 of x0.
double max_abs_near(const SampleGrid& grid, const Vec& x0, double f0);

// ---------------------------------------------------------------------------
// Sign conditions

struct SignReport {
  int surface_index = 0;
  double min_S = 0.0;
  double max_S = 0.0;
  double max_abs_S = 0.0;
  int argmin_vertex = 0;
  Vec argmin_point;
  double tol_S = 0.0;        // tolerance used for this surface
  double max_margin = 0.0;   // largest interpolation margin over vertices
  int violations = 0;        // vertices with S < -tol_S
  int strict_violations = 0; // vertices with S < -tol_S - margin(v)
  int epsilon = 0;           // +-1 for the tilde variant, 0 otherwise
  std::vector<double> values;
};

// Per-vertex bound on how much S can move because the vertex is not exactly
// on the level set: pos_err * (|J_f|_F + |f| |Hess F|_F / |grad F|) with
// pos_err = |F(v) - a| / |grad F(v)|.
std::vector<double> interpolation_margins(const Expr& F, const VectorFieldDef& f, const Hypersurface& H);

// S(v) = <N(v), f(v)>. The tolerance is tol_rel * max |f| plus the largest
// margin (margins may be empty).
SignReport sign_condition(const VectorFieldDef& f, const Hypersurface& H,
                          const std::vector<double>& margins = {}, double tol_rel = 1e-6);

// S~(v) = <eps(H) grad F(v), f(v)>, eps(H) fixed by the inward probe at the
// vertex with the largest gradient and validated at every vertex.
SignReport tilde_sign_condition(const Expr& F, const VectorFieldDef& f, const Hypersurface& H,
                                double tol_rel = 1e-6);

enum class Verdict { kCertifiedStable, kViolated, kInconclusive };
std::string to_string(Verdict verdict);

struct Witness {
  Vec point;
  double S = 0.0;
  int surface_index = 0;
};

struct StabilityCertificate {
  Verdict verdict = Verdict::kInconclusive;
  std::vector<SignReport> reports;
  double tol_rel = 1e-6;
  double eta = 0.0;
  GridSpec grid;
  std::optional<Witness> witness;
  std::vector<std::string> reasons;
};

// Certified-stable iff every surface has min S >= -tol_S; violated iff some
// vertex has S < -tol_S - margin; inconclusive otherwise, or when f is not
// finite or not smooth on a surface.
StabilityCertificate certify_stability(const VectorFieldDef& f, const NestedFamily& family,
                                       double tol_rel = 1e-6);

// ---------------------------------------------------------------------------
// Gradient and Hamiltonian systems

struct SystemParams {
  QuasiIsolationParams quasi;
  FamilyParams family;
  double tol_rel = 1e-6;
  double tol_H = 1e-9;
};

enum class GradientVerdict { kStableForF, kStableForMinusF };
std::string to_string(GradientVerdict verdict);

struct GradientClassification {
  GradientVerdict verdict = GradientVerdict::kStableForF;
  std::vector<int> positive;  // surfaces where S > 0 for dx/dt = -grad F
  std::vector<int> negative;
  VectorFieldDef field;       // the system that was certified
  NestedFamily family;        // majority subfamily
  StabilityCertificate certificate;
};

// Throws CertificationError when x0 is not quasi-isolated or some surface has
// vertices of both signs beyond tolerance.
GradientClassification classify_gradient_system(const Expr& F, const Vec& x0, const GridSpec& grid,
                                                 const SystemParams& params = {});

struct HamiltonianCertification {
  VectorFieldDef field;
  NestedFamily family;
  StabilityCertificate certificate;
  double max_abs_S = 0.0;
};

// Requires |S| <= tol_H on every surface: a certified verdict becomes
// inconclusive otherwise. Returns the largest |S|.
double apply_hamiltonian_tolerance(StabilityCertificate& certificate, double tol_H);

// Certifies (dF/dz, -dF/dy) on the family of F and additionally requires
// |S| <= tol_H everywhere; a larger |S| makes the certificate inconclusive.
HamiltonianCertification certify_hamiltonian(const Expr& F, int dof, const Vec& x0, const GridSpec& grid,
                                             const SystemParams& params = {});

}  // namespace lyapcert
