#pragma once

// Uniform bucket grid over the elements (segments or triangles) of a surface,
// used for nearest-distance queries and axis-aligned ray candidates.

#include <array>
#include <vector>

#include "lyapcert/vec.hpp"

namespace lyapcert {

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b);
double point_triangle_distance(const Vec& p, const Vec& a, const Vec& b, const Vec& c);

class SpatialIndex {
 public:
  SpatialIndex(int dimension, std::vector<Vec> vertices, std::vector<std::array<int, 3>> elements,
               double bucket_size);

  int dimension() const { return dimension_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }

  double nearest_distance(const Vec& p) const;

  // Sorted, de-duplicated elements whose bounding boxes may meet the ray
  // p + t*e_x, t >= 0.
  std::vector<int> ray_candidates(const Vec& p) const;

  double element_distance(int e, const Vec& p) const;
  const std::array<int, 3>& element(int e) const { return elements_[e]; }
  const Vec& vertex(int v) const { return vertices_[v]; }
  int element_count() const { return static_cast<int>(elements_.size()); }

 private:
  int bucket_coord(int axis, double x) const;
  const int* bucket_begin(int bx, int by, int bz) const;
  const int* bucket_end(int bx, int by, int bz) const;
  int bucket_id(int bx, int by, int bz) const { return bx + counts_[0] * (by + counts_[1] * bz); }

  int dimension_;
  std::vector<Vec> vertices_;
  // Segments use the first two slots.
  std::vector<std::array<int, 3>> elements_;
  Vec lo_, hi_;
  double bucket_;
  std::array<int, 3> counts_{1, 1, 1};
  std::vector<int> offsets_;
  std::vector<int> entries_;
};

}  // namespace lyapcert
