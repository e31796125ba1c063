#include "spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lyapcert {

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

// Closest point on a triangle by Voronoi-region classification.
double point_triangle_distance(const Vec& p, const Vec& a, const Vec& b, const Vec& c) {
  const Vec ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return distance(p, a);
  const Vec bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return distance(p, b);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return distance(p, a + (d1 / (d1 - d3)) * ab);
  const Vec cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return distance(p, c);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return distance(p, a + (d2 / (d2 - d6)) * ac);
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return distance(p, b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b));
  }
  const double denom = 1.0 / (va + vb + vc);
  return distance(p, a + (vb * denom) * ab + (vc * denom) * ac);
}

SpatialIndex::SpatialIndex(int dimension, std::vector<Vec> vertices,
                           std::vector<std::array<int, 3>> elements, double bucket_size)
    : dimension_(dimension), vertices_(std::move(vertices)), elements_(std::move(elements)) {
  const double inf = std::numeric_limits<double>::infinity();
  lo_ = {inf, inf, dimension_ == 3 ? inf : 0.0};
  hi_ = {-inf, -inf, dimension_ == 3 ? -inf : 0.0};
  for (const Vec& v : vertices_) {
    for (int a = 0; a < dimension_; ++a) {
      lo_[a] = std::min(lo_[a], v[a]);
      hi_[a] = std::max(hi_[a], v[a]);
    }
  }
  double extent = 0.0;
  for (int a = 0; a < dimension_; ++a) extent = std::max(extent, hi_[a] - lo_[a]);
  bucket_ = std::max({bucket_size, extent / 64.0, 1e-300});
  for (int a = 0; a < dimension_; ++a) {
    counts_[a] = static_cast<int>(std::floor((hi_[a] - lo_[a]) / bucket_)) + 1;
  }
  const int verts_per = dimension_ == 3 ? 3 : 2;
  auto for_each_bucket = [&](int e, auto&& fn) {
    Vec blo{inf, inf, inf}, bhi{-inf, -inf, -inf};
    for (int k = 0; k < verts_per; ++k) {
      const Vec& v = vertices_[elements_[e][k]];
      for (int a = 0; a < 3; ++a) {
        blo[a] = std::min(blo[a], v[a]);
        bhi[a] = std::max(bhi[a], v[a]);
      }
    }
    int l[3], h[3];
    for (int a = 0; a < 3; ++a) {
      l[a] = a < dimension_ ? bucket_coord(a, blo[a]) : 0;
      h[a] = a < dimension_ ? bucket_coord(a, bhi[a]) : 0;
    }
    for (int z = l[2]; z <= h[2]; ++z)
      for (int y = l[1]; y <= h[1]; ++y)
        for (int x = l[0]; x <= h[0]; ++x) fn(bucket_id(x, y, z));
  };
  offsets_.assign(static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2] + 1, 0);
  for (int e = 0; e < element_count(); ++e) for_each_bucket(e, [&](int b) { ++offsets_[b + 1]; });
  for (std::size_t b = 1; b < offsets_.size(); ++b) offsets_[b] += offsets_[b - 1];
  entries_.resize(offsets_.back());
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int e = 0; e < element_count(); ++e) for_each_bucket(e, [&](int b) { entries_[fill[b]++] = e; });
}

int SpatialIndex::bucket_coord(int axis, double x) const {
  const int c = static_cast<int>(std::floor((x - lo_[axis]) / bucket_));
  return std::clamp(c, 0, counts_[axis] - 1);
}

const int* SpatialIndex::bucket_begin(int bx, int by, int bz) const {
  return entries_.data() + offsets_[bucket_id(bx, by, bz)];
}

const int* SpatialIndex::bucket_end(int bx, int by, int bz) const {
  return entries_.data() + offsets_[bucket_id(bx, by, bz) + 1];
}

double SpatialIndex::element_distance(int e, const Vec& p) const {
  const auto& el = elements_[e];
  if (dimension_ == 2) return point_segment_distance(p, vertices_[el[0]], vertices_[el[1]]);
  return point_triangle_distance(p, vertices_[el[0]], vertices_[el[1]], vertices_[el[2]]);
}

double SpatialIndex::nearest_distance(const Vec& p) const {
  int c[3] = {0, 0, 0};
  for (int a = 0; a < dimension_; ++a) c[a] = bucket_coord(a, p[a]);
  double best = std::numeric_limits<double>::infinity();
  const int max_ring = std::max({counts_[0], counts_[1], counts_[2]});
  for (int r = 0; r <= max_ring; ++r) {
    const int zr = dimension_ == 3 ? r : 0;
    for (int dz = -zr; dz <= zr; ++dz) {
      const int z = c[2] + dz;
      if (z < 0 || z >= counts_[2]) continue;
      for (int dy = -r; dy <= r; ++dy) {
        const int y = c[1] + dy;
        if (y < 0 || y >= counts_[1]) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int x = c[0] + dx;
          if (x < 0 || x >= counts_[0]) continue;
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          for (const int* e = bucket_begin(x, y, z); e != bucket_end(x, y, z); ++e) {
            best = std::min(best, element_distance(*e, p));
          }
        }
      }
    }
    // Elements outside rings 0..r are at least r buckets away from the
    // projection of p onto the index box, hence from p.
    if (best <= r * bucket_) break;
  }
  return best;
}

std::vector<int> SpatialIndex::ray_candidates(const Vec& p) const {
  std::vector<int> out;
  for (int a = 1; a < dimension_; ++a) {
    if (p[a] < lo_[a] || p[a] > hi_[a]) return out;
  }
  if (p.x > hi_.x) return out;
  const int by = bucket_coord(1, p.y);
  const int bz = dimension_ == 3 ? bucket_coord(2, p.z) : 0;
  for (int bx = bucket_coord(0, p.x); bx < counts_[0]; ++bx) {
    out.insert(out.end(), bucket_begin(bx, by, bz), bucket_end(bx, by, bz));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace lyapcert
