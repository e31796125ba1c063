#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lyapcert/expr.hpp"
#include "lyapcert/vec.hpp"

namespace lyapcert {

inline constexpr int kMinResolution = 8;

// Axis-aligned sampling box plus the number of cells per axis.
struct GridSpec {
  int dimension = 2;
  Vec lo;
  Vec hi;
  std::array<int, 3> resolution{0, 0, 0};

  double cell_size(int axis) const { return (hi[axis] - lo[axis]) / resolution[axis]; }
  double min_cell_size() const;
  bool contains_strictly(const Vec& p) const;
  // Distance from p to the nearest box face (0 if outside).
  double inner_distance(const Vec& p) const;

  // Throws GeometryError when the spec is malformed.
  void validate() const;
};

// Node values of F cached on a regular grid. Immutable after construction.
class SampleGrid {
 public:
  // Throws GeometryError on bad specs and NonFiniteError when F is not finite
  // at some node (message carries the count).
  static SampleGrid build(const Expr& F, const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  const Expr& function() const { return F_; }
  int dimension() const { return spec_.dimension; }

  int nodes(int axis) const { return axis < spec_.dimension ? spec_.resolution[axis] + 1 : 1; }
  std::int64_t node_count() const { return static_cast<std::int64_t>(values_.size()); }

  std::int64_t node_index(int i, int j, int k = 0) const {
    return i + static_cast<std::int64_t>(nodes(0)) * (j + static_cast<std::int64_t>(nodes(1)) * k);
  }
  std::array<int, 3> node_coords(std::int64_t index) const;
  Vec node_position(int i, int j, int k = 0) const;
  double value(int i, int j, int k = 0) const { return values_[node_index(i, j, k)]; }
  double value(std::int64_t index) const { return values_[index]; }
  const std::vector<double>& values() const { return values_; }

 private:
  SampleGrid(Expr F, GridSpec spec, std::vector<double> values)
      : F_(std::move(F)), spec_(spec), values_(std::move(values)) {}

  Expr F_;
  GridSpec spec_;
  std::vector<double> values_;
};

inline SampleGrid build_grid(const Expr& F, const GridSpec& spec) { return SampleGrid::build(F, spec); }

}  // namespace lyapcert
