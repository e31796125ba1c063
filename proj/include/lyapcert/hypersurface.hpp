#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lyapcert/expr.hpp"
#include "lyapcert/level_set.hpp"

namespace lyapcert {

// The query point is within half a cell of the surface (or two surfaces are
// within a cell of each other), too close for the discrete predicates.
class ProximityError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Neither orientation of a vertex normal passes the inward/outward probe.
class OrientationError : public GeometryError {
 public:
  OrientationError(const std::string& message, int vertex) : GeometryError(message), vertex_(vertex) {}
  int vertex() const { return vertex_; }

 private:
  int vertex_;
};

class SpatialIndex;
class Hypersurface;
struct SurfaceBuilder;

enum class RejectionReason { kTouchesBox, kOpenCurve, kNonManifold, kSelfIntersecting, kTooSmall };

std::string to_string(RejectionReason reason);

struct Rejection {
  RejectionReason reason;
  std::string detail;
};

inline constexpr int kMinSurfaceVertices = 8;

using Classification = std::variant<Hypersurface, Rejection>;

// A connected closed polyline (n=2) or watertight oriented triangle mesh
// (n=3) extracted from a level set. Immutable; share freely across threads.
class Hypersurface {
 public:
  int dimension() const { return dimension_; }
  double level() const { return level_; }
  const GridSpec& grid() const { return grid_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  // n=2: edge k joins the k-th and (k+1)-th vertex of the cycle.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  // n=3: counter-clockwise seen from outside.
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Vec>& normals() const { return normals_; }
  bool normals_oriented() const { return oriented_; }
  double diameter() const { return diameter_; }
  const Vec& internal_witness() const { return witness_; }
  // Half the smallest grid cell: probe offset and proximity threshold.
  double probe_distance() const { return 0.5 * grid_.min_cell_size(); }
  double cell_size() const { return grid_.min_cell_size(); }

  // Ray-parity membership in the internal component, without the proximity
  // precondition of bounds_point.
  bool contains(const Vec& p) const;
  // Euclidean distance from p to the nearest point of the surface.
  double distance_to_surface(const Vec& p) const;

  Hypersurface with_normals(std::vector<Vec> normals, bool oriented) const;

 private:
  friend struct SurfaceBuilder;
  Hypersurface() = default;
  void finish();

  int dimension_ = 2;
  double level_ = 0.0;
  GridSpec grid_;
  std::vector<Vec> vertices_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Vec> normals_;
  bool oriented_ = false;
  double diameter_ = 0.0;
  Vec witness_;
  std::shared_ptr<const SpatialIndex> index_;
};

// Accepts closed, interior, manifold components. Normals on the result are
// geometric placeholders pointing inward; orient_inward validates them.
Classification classify_closed(const Component& component);

// True iff p is in the internal component. Throws ProximityError when p is
// within half a cell of H.
bool bounds_point(const Hypersurface& H, const Vec& p);

// Largest pairwise vertex distance.
double diameter(const Hypersurface& H);

// max over vertices of |p - v| (a farthest-point distance, not a minimum).
double distance_to_point(const Vec& p, const Hypersurface& H);

// Unit normals pointing into the internal component, checked at every vertex
// by probing half a cell along +N (inside) and -N (outside). With a gradient,
// normals are +-grad F/|grad F|; otherwise they come from the mesh.
Hypersurface orient_inward(const Hypersurface& H, const Vec& x0);
Hypersurface orient_inward(const Hypersurface& H, const Vec& x0, const VectorFieldDef& grad_F);

// True iff every vertex of inner lies in the internal component of outer.
// Throws ProximityError when the surfaces come within one cell.
bool is_nested(const Hypersurface& outer, const Hypersurface& inner);

double min_gradient_norm(const Expr& F, const Hypersurface& H);
double min_gradient_norm(const VectorFieldDef& grad_F, const Hypersurface& H);

// max |F(v) - level| over vertices.
double level_residual(const Expr& F, const Hypersurface& H);

}  // namespace lyapcert
