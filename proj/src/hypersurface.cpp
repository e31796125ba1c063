#include "lyapcert/hypersurface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "spatial_index.hpp"

namespace lyapcert {

std::string to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::kTouchesBox: return "touches-box";
    case RejectionReason::kOpenCurve: return "open-curve";
    case RejectionReason::kNonManifold: return "non-manifold";
    case RejectionReason::kSelfIntersecting: return "self-intersecting";
    case RejectionReason::kTooSmall: return "too-small";
  }
  return "unknown";
}

namespace {

double orient2d(const Vec& a, const Vec& b, const Vec& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(const Vec& a, const Vec& b, const Vec& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  const double o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
  const double o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
    return true;
  }
  return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
         (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

// Crossing parity of the +x ray with the polyline (half-open rule, so a ray
// through a vertex is counted once).
bool contains_2d(const SpatialIndex& index, const Vec& p) {
  bool inside = false;
  for (int e : index.ray_candidates(p)) {
    const Vec& a = index.vertex(index.element(e)[0]);
    const Vec& b = index.vertex(index.element(e)[1]);
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

constexpr double kBaryTol = 1e-10;

// Parity along +x using the yz projection. Empty when the ray grazes an edge
// or vertex closely enough that the count is unreliable.
std::optional<bool> contains_3d_axis(const SpatialIndex& index, const Vec& p) {
  bool inside = false;
  for (int e : index.ray_candidates(p)) {
    const auto& t = index.element(e);
    const Vec &a = index.vertex(t[0]), &b = index.vertex(t[1]), &c = index.vertex(t[2]);
    auto o = [](const Vec& u, const Vec& v, const Vec& w) {
      return (v.y - u.y) * (w.z - u.z) - (v.z - u.z) * (w.y - u.y);
    };
    const double area = o(a, b, c);
    if (area == 0.0) continue;
    const double la = o(p, b, c) / area, lb = o(a, p, c) / area, lc = o(a, b, p) / area;
    if (la < -kBaryTol || lb < -kBaryTol || lc < -kBaryTol) continue;
    const double x = la * a.x + lb * b.x + lc * c.x;
    if (x < p.x - 1e-12) continue;
    if (la <= kBaryTol || lb <= kBaryTol || lc <= kBaryTol) return std::nullopt;
    if (std::fabs(x - p.x) <= 1e-12) return std::nullopt;
    inside = !inside;
  }
  return inside;
}

std::optional<bool> contains_3d_direction(const SpatialIndex& index, const Vec& p, const Vec& d) {
  bool inside = false;
  for (int e = 0; e < index.element_count(); ++e) {
    const auto& t = index.element(e);
    const Vec &a = index.vertex(t[0]), &b = index.vertex(t[1]), &c = index.vertex(t[2]);
    const Vec e1 = b - a, e2 = c - a;
    const Vec pv = cross(d, e2);
    const double det = dot(e1, pv);
    if (std::fabs(det) <= 1e-14 * norm(e1) * norm(e2)) continue;
    const double inv = 1.0 / det;
    const Vec tv = p - a;
    const double u = dot(tv, pv) * inv;
    const Vec q = cross(tv, e1);
    const double v = dot(d, q) * inv;
    const double s = dot(e2, q) * inv;
    if (u < -kBaryTol || v < -kBaryTol || u + v > 1.0 + kBaryTol) continue;
    if (s < -1e-12) continue;
    if (u <= kBaryTol || v <= kBaryTol || u + v >= 1.0 - kBaryTol || s <= 1e-12) return std::nullopt;
    inside = !inside;
  }
  return inside;
}

bool contains_3d(const SpatialIndex& index, const Vec& p) {
  if (auto r = contains_3d_axis(index, p)) return *r;
  static const Vec kDirections[] = {
      normalized(Vec{0.2926, 0.7071, 0.6437}),  normalized(Vec{-0.5773, 0.2113, 0.7887}),
      normalized(Vec{0.8165, -0.4082, 0.4082}), normalized(Vec{-0.1314, -0.9109, 0.3912}),
      normalized(Vec{0.6123, 0.1722, -0.7716}), normalized(Vec{-0.7254, -0.5367, -0.4310}),
  };
  for (const Vec& d : kDirections) {
    if (auto r = contains_3d_direction(index, p, d)) return *r;
  }
  throw GeometryError("ray parity undecidable: every ray grazes the mesh");
}

std::uint64_t edge_id(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

double max_pairwise_distance(const std::vector<Vec>& vs) {
  double best = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const Vec d = vs[i] - vs[j];
      best = std::max(best, dot(d, d));
    }
  }
  return std::sqrt(best);
}

Rejection reject(RejectionReason r, std::string detail) { return Rejection{r, std::move(detail)}; }

}  // namespace

// ---------------------------------------------------------------------------
// Hypersurface

bool Hypersurface::contains(const Vec& p) const {
  return dimension_ == 2 ? contains_2d(*index_, p) : contains_3d(*index_, p);
}

double Hypersurface::distance_to_surface(const Vec& p) const { return index_->nearest_distance(p); }

Hypersurface Hypersurface::with_normals(std::vector<Vec> normals, bool oriented) const {
  if (normals.size() != vertices_.size()) throw GeometryError("one normal per vertex required");
  Hypersurface copy = *this;
  copy.normals_ = std::move(normals);
  copy.oriented_ = oriented;
  return copy;
}

void Hypersurface::finish() {
  std::vector<std::array<int, 3>> elements;
  if (dimension_ == 2) {
    for (const auto& e : edges_) elements.push_back({e[0], e[1], 0});
  } else {
    elements = triangles_;
  }
  index_ = std::make_shared<const SpatialIndex>(dimension_, vertices_, std::move(elements),
                                                2.0 * grid_.min_cell_size());
  diameter_ = max_pairwise_distance(vertices_);
  const double h = probe_distance();
  const Vec inward = vertices_[0] + h * normals_[0];
  witness_ = contains(inward) ? inward : vertices_[0] - h * normals_[0];
}

// ---------------------------------------------------------------------------
// Classification

struct SurfaceBuilder {
  static Hypersurface start(const Component& c, std::vector<Vec> normals) {
    Hypersurface h;
    h.dimension_ = c.dimension;
    h.level_ = c.level;
    h.grid_ = c.grid;
    h.vertices_ = c.vertices;
    h.normals_ = std::move(normals);
    return h;
  }
  static std::vector<std::array<int, 2>>& edges(Hypersurface& h) { return h.edges_; }
  static std::vector<std::array<int, 3>>& triangles(Hypersurface& h) { return h.triangles_; }
  static void finish(Hypersurface& h) { h.finish(); }
};

namespace {

Classification classify_2d(const Component& c) {
  const int nv = static_cast<int>(c.vertices.size());
  std::vector<std::vector<int>> adjacent(nv);
  for (const auto& s : c.segments) {
    adjacent[s[0]].push_back(s[1]);
    adjacent[s[1]].push_back(s[0]);
  }
  for (int v = 0; v < nv; ++v) {
    if (adjacent[v].size() == 1) return reject(RejectionReason::kOpenCurve, "curve has an endpoint");
    if (adjacent[v].size() != 2) {
      return reject(RejectionReason::kNonManifold,
                    "vertex " + std::to_string(v) + " has degree " + std::to_string(adjacent[v].size()));
    }
  }
  if (nv < kMinSurfaceVertices) {
    return reject(RejectionReason::kTooSmall, std::to_string(nv) + " vertices");
  }
  // Walk the cycle from vertex 0 towards its lower-numbered neighbour.
  std::vector<int> cycle{0};
  int prev = 0;
  int cur = std::min(adjacent[0][0], adjacent[0][1]);
  while (cur != 0) {
    cycle.push_back(cur);
    const int next = adjacent[cur][0] == prev ? adjacent[cur][1] : adjacent[cur][0];
    prev = cur;
    cur = next;
    if (static_cast<int>(cycle.size()) > nv) break;
  }
  if (static_cast<int>(cycle.size()) != nv) {
    return reject(RejectionReason::kNonManifold, "edges do not form a single cycle");
  }
  std::vector<std::array<int, 2>> edges;
  for (int k = 0; k < nv; ++k) edges.push_back({cycle[k], cycle[(k + 1) % nv]});
  for (int i = 0; i < nv; ++i) {
    for (int j = i + 2; j < nv; ++j) {
      if (i == 0 && j == nv - 1) continue;
      const auto& e = edges[i];
      const auto& f = edges[j];
      if (segments_intersect(c.vertices[e[0]], c.vertices[e[1]], c.vertices[f[0]], c.vertices[f[1]])) {
        return reject(RejectionReason::kSelfIntersecting,
                      "edges " + std::to_string(i) + " and " + std::to_string(j) + " cross");
      }
    }
  }
  double area = 0.0;
  for (const auto& e : edges) {
    const Vec& a = c.vertices[e[0]];
    const Vec& b = c.vertices[e[1]];
    area += a.x * b.y - b.x * a.y;
  }
  // Left of a counter-clockwise cycle is inside.
  const double side = area > 0.0 ? 1.0 : -1.0;
  std::vector<Vec> normals(nv);
  for (int k = 0; k < nv; ++k) {
    const Vec t = c.vertices[cycle[(k + 1) % nv]] - c.vertices[cycle[(k + nv - 1) % nv]];
    normals[cycle[k]] = normalized(side * Vec{-t.y, t.x, 0.0});
  }
  Hypersurface h = SurfaceBuilder::start(c, std::move(normals));
  SurfaceBuilder::edges(h) = std::move(edges);
  SurfaceBuilder::finish(h);
  return h;
}

Classification classify_3d(const Component& c) {
  const int nv = static_cast<int>(c.vertices.size());
  std::vector<std::array<int, 3>> tris = c.triangles;
  const int nt = static_cast<int>(tris.size());
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) edge_tris[edge_id(tris[t][k], tris[t][(k + 1) % 3])].push_back(t);
  }
  for (const auto& [id, ts] : edge_tris) {
    if (ts.size() == 1) return reject(RejectionReason::kOpenCurve, "mesh has boundary edges");
    if (ts.size() != 2) {
      return reject(RejectionReason::kNonManifold,
                    "edge shared by " + std::to_string(ts.size()) + " triangles");
    }
  }
  // Each vertex link must be a single cycle.
  std::vector<std::vector<int>> incident(nv);
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) incident[tris[t][k]].push_back(t);
  }
  for (int v = 0; v < nv; ++v) {
    std::unordered_map<int, std::vector<int>> link;
    for (int t : incident[v]) {
      int others[2], m = 0;
      for (int k = 0; k < 3; ++k) {
        if (tris[t][k] != v) others[m++] = tris[t][k];
      }
      link[others[0]].push_back(others[1]);
      link[others[1]].push_back(others[0]);
    }
    if (link.empty()) continue;
    std::size_t visited = 1;
    const int start = link.begin()->first;
    int prev = start, cur = link.begin()->second.front();
    while (cur != start && visited <= link.size()) {
      ++visited;
      const auto& nb = link[cur];
      if (nb.size() != 2) break;
      const int next = nb[0] == prev ? nb[1] : nb[0];
      prev = cur;
      cur = next;
    }
    if (cur != start || visited != link.size()) {
      return reject(RejectionReason::kNonManifold, "vertex " + std::to_string(v) + " is not a manifold point");
    }
  }
  // Propagate a consistent orientation: neighbours traverse a shared edge in
  // opposite directions.
  auto has_directed = [&](int t, int a, int b) {
    for (int k = 0; k < 3; ++k) {
      if (tris[t][k] == a && tris[t][(k + 1) % 3] == b) return true;
    }
    return false;
  };
  std::vector<int> state(nt, 0);
  std::vector<int> queue{0};
  state[0] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int t = queue[qi];
    for (int k = 0; k < 3; ++k) {
      const int a = tris[t][k], b = tris[t][(k + 1) % 3];
      const auto& pair = edge_tris[edge_id(a, b)];
      const int u = pair[0] == t ? pair[1] : pair[0];
      if (state[u] == 0) {
        if (has_directed(u, a, b)) std::swap(tris[u][0], tris[u][1]);
        state[u] = 1;
        queue.push_back(u);
      } else if (has_directed(u, a, b)) {
        return reject(RejectionReason::kNonManifold, "mesh is not orientable");
      }
    }
  }
  if (static_cast<int>(queue.size()) != nt) {
    return reject(RejectionReason::kNonManifold, "triangles are not edge-connected");
  }
  if (nv < kMinSurfaceVertices) {
    return reject(RejectionReason::kTooSmall, std::to_string(nv) + " vertices");
  }
  double volume = 0.0;
  for (const auto& t : tris) volume += dot(c.vertices[t[0]], cross(c.vertices[t[1]], c.vertices[t[2]]));
  if (volume < 0.0) {
    for (auto& t : tris) std::swap(t[0], t[1]);
  }
  std::vector<Vec> normals(nv);
  for (const auto& t : tris) {
    const Vec n = cross(c.vertices[t[1]] - c.vertices[t[0]], c.vertices[t[2]] - c.vertices[t[0]]);
    for (int k = 0; k < 3; ++k) normals[t[k]] += n;
  }
  for (Vec& n : normals) n = normalized(-n);
  Hypersurface h = SurfaceBuilder::start(c, std::move(normals));
  SurfaceBuilder::triangles(h) = std::move(tris);
  SurfaceBuilder::finish(h);
  return h;
}

}  // namespace

Classification classify_closed(const Component& component) {
  if (component.touches_box()) {
    return reject(RejectionReason::kTouchesBox, "component reaches the grid box boundary");
  }
  if (component.vertices.empty()) return reject(RejectionReason::kTooSmall, "empty component");
  return component.dimension == 2 ? classify_2d(component) : classify_3d(component);
}

// ---------------------------------------------------------------------------
// Predicates

bool bounds_point(const Hypersurface& H, const Vec& p) {
  const double d = H.distance_to_surface(p);
  if (d <= H.probe_distance()) {
    throw ProximityError("point is " + std::to_string(d) + " from the surface, within half a cell (" +
                         std::to_string(H.probe_distance()) + ")");
  }
  return H.contains(p);
}

double diameter(const Hypersurface& H) { return H.diameter(); }

double distance_to_point(const Vec& p, const Hypersurface& H) {
  double best = 0.0;
  for (const Vec& v : H.vertices()) best = std::max(best, distance(p, v));
  return best;
}

namespace {

Hypersurface orient_with(const Hypersurface& H, const Vec& x0, const VectorFieldDef* grad_F) {
  if (!bounds_point(H, x0)) throw GeometryError("surface does not bound the reference point");
  const int n = H.dimension();
  const double h = H.probe_distance();
  std::vector<Vec> normals(H.vertices().size());
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    const Vec& v = H.vertices()[i];
    Vec dir = H.normals()[i];
    if (grad_F) {
      const Vec g = Vec::from(grad_F->evaluate(v.head(n)));
      if (norm(g) > 0.0) dir = normalized(g);
    }
    const bool plus_in = H.contains(v + h * dir);
    const bool minus_in = H.contains(v - h * dir);
    if (plus_in && !minus_in) {
      normals[i] = dir;
    } else if (!plus_in && minus_in) {
      normals[i] = -dir;
    } else {
      throw OrientationError("ambiguous orientation at vertex " + std::to_string(i), static_cast<int>(i));
    }
  }
  return H.with_normals(std::move(normals), true);
}

}  // namespace

Hypersurface orient_inward(const Hypersurface& H, const Vec& x0) { return orient_with(H, x0, nullptr); }

Hypersurface orient_inward(const Hypersurface& H, const Vec& x0, const VectorFieldDef& grad_F) {
  return orient_with(H, x0, &grad_F);
}

bool is_nested(const Hypersurface& outer, const Hypersurface& inner) {
  const double cell = std::max(outer.cell_size(), inner.cell_size());
  double gap = std::numeric_limits<double>::infinity();
  for (const Vec& v : inner.vertices()) gap = std::min(gap, outer.distance_to_surface(v));
  for (const Vec& v : outer.vertices()) gap = std::min(gap, inner.distance_to_surface(v));
  if (gap <= cell) {
    throw ProximityError("surfaces come within " + std::to_string(gap) + " of each other (cell " +
                         std::to_string(cell) + ")");
  }
  for (const Vec& v : inner.vertices()) {
    if (!outer.contains(v)) return false;
  }
  return true;
}

double min_gradient_norm(const VectorFieldDef& grad_F, const Hypersurface& H) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& v : H.vertices()) {
    best = std::min(best, norm(Vec::from(grad_F.evaluate(v.head(H.dimension())))));
  }
  return best;
}

double min_gradient_norm(const Expr& F, const Hypersurface& H) { return min_gradient_norm(gradient(F), H); }

double level_residual(const Expr& F, const Hypersurface& H) {
  double worst = 0.0;
  for (const Vec& v : H.vertices()) {
    worst = std::max(worst, std::fabs(evaluate(F, v.head(H.dimension())) - H.level()));
  }
  return worst;
}

}  // namespace lyapcert
