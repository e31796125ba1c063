#include "lyapcert/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <utility>

namespace lyapcert {

bool Component::touches_box() const {
  return std::any_of(on_box_boundary.begin(), on_box_boundary.end(), [](bool b) { return b; });
}

namespace {

using EdgeKey = std::int64_t;
using Segment = std::pair<EdgeKey, EdgeKey>;

EdgeKey edge_key(std::int64_t node, int axis) { return node * 3 + axis; }

// Marching squares on one quad. Corner k sits between edges k-1 and k; edge k
// joins corners k and k+1 (mod 4). Values are already offset by the level and
// never zero. Ambiguous quads use the asymptotic decider, which depends only
// on the four values, so a face shared by two cubes is cut the same way from
// both sides.
void quad_segments(const double f[4], const EdgeKey e[4], std::vector<Segment>& out) {
  int crossing[4];
  int count = 0;
  for (int k = 0; k < 4; ++k) {
    if ((f[k] > 0.0) != (f[(k + 1) % 4] > 0.0)) crossing[count++] = k;
  }
  if (count == 2) {
    out.emplace_back(e[crossing[0]], e[crossing[1]]);
  } else if (count == 4) {
    const double saddle = (f[0] * f[2] - f[1] * f[3]) / (f[0] + f[2] - f[1] - f[3]);
    if ((saddle > 0.0) == (f[0] > 0.0)) {
      // Corners 0 and 2 connect through the centre; cut off corners 1 and 3.
      out.emplace_back(e[0], e[1]);
      out.emplace_back(e[2], e[3]);
    } else {
      out.emplace_back(e[3], e[0]);
      out.emplace_back(e[1], e[2]);
    }
  }
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

class Extractor {
 public:
  Extractor(const SampleGrid& grid, double level) : grid_(grid), level_(level) {}

  std::vector<Component> run() {
    number_crossings();
    if (grid_.dimension() == 2) {
      contour_2d();
    } else {
      contour_3d();
    }
    return split_components();
  }

 private:
  double offset(std::int64_t node) const { return grid_.value(node) - level_; }

  std::int64_t neighbour(std::int64_t node, int axis) const {
    const auto c = grid_.node_coords(node);
    std::array<int, 3> d = c;
    ++d[axis];
    return grid_.node_index(d[0], d[1], d[2]);
  }

  void number_crossings() {
    const GridSpec& spec = grid_.spec();
    const int n = grid_.dimension();
    for (std::int64_t node = 0; node < grid_.node_count(); ++node) {
      const auto c = grid_.node_coords(node);
      for (int axis = 0; axis < n; ++axis) {
        if (c[axis] >= spec.resolution[axis]) continue;
        const std::int64_t other = neighbour(node, axis);
        const double fa = offset(node), fb = offset(other);
        if ((fa > 0.0) == (fb > 0.0)) continue;
        const double t = fa / (fa - fb);
        Vec p = grid_.node_position(c[0], c[1], c[2]);
        const Vec q = grid_.node_position(c[0] + (axis == 0), c[1] + (axis == 1), c[2] + (axis == 2));
        p[axis] = p[axis] + t * (q[axis] - p[axis]);
        bool boundary = false;
        for (int b = 0; b < n; ++b) {
          if (b != axis && (c[b] == 0 || c[b] == spec.resolution[b])) boundary = true;
        }
        ids_.emplace(edge_key(node, axis), static_cast<int>(vertices_.size()));
        vertices_.push_back(p);
        boundary_.push_back(boundary);
      }
    }
  }

  int id(EdgeKey key) const { return ids_.at(key); }

  void contour_2d() {
    const GridSpec& spec = grid_.spec();
    std::vector<Segment> segs;
    for (int j = 0; j < spec.resolution[1]; ++j) {
      for (int i = 0; i < spec.resolution[0]; ++i) {
        const std::int64_t n0 = grid_.node_index(i, j), n1 = grid_.node_index(i + 1, j),
                           n2 = grid_.node_index(i + 1, j + 1), n3 = grid_.node_index(i, j + 1);
        const double f[4] = {offset(n0), offset(n1), offset(n2), offset(n3)};
        const EdgeKey e[4] = {edge_key(n0, 0), edge_key(n1, 1), edge_key(n3, 0), edge_key(n0, 1)};
        segs.clear();
        quad_segments(f, e, segs);
        for (const auto& [a, b] : segs) segments_.push_back({id(a), id(b)});
      }
    }
  }

  void contour_3d() {
    const GridSpec& spec = grid_.spec();
    std::vector<Segment> segs;
    for (int k = 0; k < spec.resolution[2]; ++k) {
      for (int j = 0; j < spec.resolution[1]; ++j) {
        for (int i = 0; i < spec.resolution[0]; ++i) {
          segs.clear();
          auto corner = [&](int dx, int dy, int dz) { return grid_.node_index(i + dx, j + dy, k + dz); };
          for (int axis = 0; axis < 3; ++axis) {
            const int u = axis == 0 ? 1 : 0;
            const int v = axis == 2 ? 1 : 2;
            for (int side = 0; side < 2; ++side) {
              auto at = [&](int du, int dv) {
                int d[3] = {0, 0, 0};
                d[axis] = side;
                d[u] = du;
                d[v] = dv;
                return corner(d[0], d[1], d[2]);
              };
              const std::int64_t c0 = at(0, 0), c1 = at(1, 0), c2 = at(1, 1), c3 = at(0, 1);
              const double f[4] = {offset(c0), offset(c1), offset(c2), offset(c3)};
              const EdgeKey e[4] = {edge_key(c0, u), edge_key(c1, v), edge_key(c3, u), edge_key(c0, v)};
              quad_segments(f, e, segs);
            }
          }
          if (!segs.empty()) close_cube_polygons(segs);
        }
      }
    }
  }

  // Every crossing edge of a cube lies on two of its faces, so the face
  // segments link into closed cycles. Each cycle becomes a triangle or a fan
  // around its centroid.
  void close_cube_polygons(const std::vector<Segment>& segs) {
    std::vector<bool> used(segs.size(), false);
    std::vector<int> cycle;
    for (std::size_t start = 0; start < segs.size(); ++start) {
      if (used[start]) continue;
      used[start] = true;
      cycle.assign({id(segs[start].first)});
      EdgeKey current = segs[start].second;
      const EdgeKey first = segs[start].first;
      while (current != first) {
        cycle.push_back(id(current));
        bool advanced = false;
        for (std::size_t s = 0; s < segs.size(); ++s) {
          if (used[s]) continue;
          if (segs[s].first == current) {
            current = segs[s].second;
          } else if (segs[s].second == current) {
            current = segs[s].first;
          } else {
            continue;
          }
          used[s] = true;
          advanced = true;
          break;
        }
        if (!advanced) throw GeometryError("open polygon inside a cube");
      }
      if (cycle.size() == 3) {
        triangles_.push_back({cycle[0], cycle[1], cycle[2]});
        continue;
      }
      Vec centre;
      for (int v : cycle) centre += vertices_[v];
      centre = centre / static_cast<double>(cycle.size());
      const int c = static_cast<int>(vertices_.size());
      vertices_.push_back(centre);
      boundary_.push_back(false);
      for (std::size_t m = 0; m < cycle.size(); ++m) {
        triangles_.push_back({cycle[m], cycle[(m + 1) % cycle.size()], c});
      }
    }
  }

  std::vector<Component> split_components() {
    DisjointSets sets(vertices_.size());
    for (const auto& s : segments_) sets.unite(s[0], s[1]);
    for (const auto& t : triangles_) {
      sets.unite(t[0], t[1]);
      sets.unite(t[1], t[2]);
    }
    // Roots are the lowest vertex id of each set, so components come out
    // ordered by their lowest vertex.
    std::vector<int> component_of(vertices_.size(), -1);
    std::vector<int> local(vertices_.size(), -1);
    std::vector<Component> out;
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
      const int root = sets.find(static_cast<int>(v));
      if (component_of[root] < 0) {
        component_of[root] = static_cast<int>(out.size());
        Component c;
        c.dimension = grid_.dimension();
        c.level = level_;
        c.grid = grid_.spec();
        out.push_back(std::move(c));
      }
      Component& c = out[component_of[root]];
      local[v] = static_cast<int>(c.vertices.size());
      c.vertices.push_back(vertices_[v]);
      c.on_box_boundary.push_back(boundary_[v]);
    }
    for (const auto& s : segments_) {
      out[component_of[sets.find(s[0])]].segments.push_back({local[s[0]], local[s[1]]});
    }
    for (const auto& t : triangles_) {
      out[component_of[sets.find(t[0])]].triangles.push_back({local[t[0]], local[t[1]], local[t[2]]});
    }
    return out;
  }

  const SampleGrid& grid_;
  double level_;
  std::unordered_map<EdgeKey, int> ids_;
  std::vector<Vec> vertices_;
  std::vector<bool> boundary_;
  std::vector<std::array<int, 2>> segments_;
  std::vector<std::array<int, 3>> triangles_;
};

bool hits_node(const SampleGrid& grid, double level) {
  return std::any_of(grid.values().begin(), grid.values().end(), [&](double v) { return v == level; });
}

}  // namespace

LevelExtraction extract_level(const SampleGrid& grid, double level) {
  LevelExtraction result;
  result.requested_level = level;
  result.level = level;
  if (!hits_node(grid, level)) {
    result.components = Extractor(grid, level).run();
    return result;
  }
  result.nudged = true;
  result.level = level - 1e-12 * std::max(1.0, std::fabs(level));
  if (!hits_node(grid, result.level)) {
    result.components = Extractor(grid, result.level).run();
    return result;
  }
  GridSpec shifted = grid.spec();
  for (int a = 0; a < shifted.dimension; ++a) {
    const double d = 1e-6 * shifted.cell_size(a);
    shifted.lo[a] += d;
    shifted.hi[a] += d;
  }
  const SampleGrid moved = SampleGrid::build(grid.function(), shifted);
  if (hits_node(moved, result.level)) {
    throw GeometryError("level " + std::to_string(level) +
                        " coincides with grid node values even after nudging");
  }
  result.grid_shifted = true;
  result.components = Extractor(moved, result.level).run();
  return result;
}

}  // namespace lyapcert
