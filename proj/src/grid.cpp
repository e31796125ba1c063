#include "lyapcert/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lyapcert {

double GridSpec::min_cell_size() const {
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dimension; ++a) h = std::min(h, cell_size(a));
  return h;
}

bool GridSpec::contains_strictly(const Vec& p) const {
  for (int a = 0; a < dimension; ++a) {
    if (!(p[a] > lo[a] && p[a] < hi[a])) return false;
  }
  return true;
}

double GridSpec::inner_distance(const Vec& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dimension; ++a) d = std::min({d, p[a] - lo[a], hi[a] - p[a]});
  return std::max(d, 0.0);
}

void GridSpec::validate() const {
  if (dimension != 2 && dimension != 3) {
    throw GeometryError("grid dimension must be 2 or 3, got " + std::to_string(dimension));
  }
  for (int a = 0; a < dimension; ++a) {
    if (!(lo[a] < hi[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a])) {
      throw GeometryError("grid box needs lo < hi on axis " + std::to_string(a));
    }
    if (resolution[a] < kMinResolution) {
      throw GeometryError("resolution " + std::to_string(resolution[a]) + " on axis " +
                          std::to_string(a) + " is below the minimum of " +
                          std::to_string(kMinResolution));
    }
  }
}

std::array<int, 3> SampleGrid::node_coords(std::int64_t index) const {
  const std::int64_t nx = nodes(0), ny = nodes(1);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

Vec SampleGrid::node_position(int i, int j, int k) const {
  const int idx[3] = {i, j, k};
  Vec p;
  for (int a = 0; a < spec_.dimension; ++a) {
    // Exact at both ends of the axis.
    const double t = static_cast<double>(idx[a]) / spec_.resolution[a];
    p[a] = idx[a] == spec_.resolution[a] ? spec_.hi[a] : spec_.lo[a] + t * (spec_.hi[a] - spec_.lo[a]);
  }
  return p;
}

SampleGrid SampleGrid::build(const Expr& F, const GridSpec& spec) {
  spec.validate();
  if (F.dimension() != spec.dimension) {
    throw DimensionError("function has dimension " + std::to_string(F.dimension()) +
                         " but grid has dimension " + std::to_string(spec.dimension));
  }
  const int nx = spec.resolution[0] + 1;
  const int ny = spec.resolution[1] + 1;
  const int nz = spec.dimension == 3 ? spec.resolution[2] + 1 : 1;
  std::vector<double> values(static_cast<std::size_t>(nx) * ny * nz);
  SampleGrid grid(F, spec, {});
  std::int64_t bad = 0;
  Vec first_bad;
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i, ++idx) {
        const Vec p = grid.node_position(i, j, k);
        const double v = evaluate_unchecked(F, p.head(spec.dimension));
        if (!std::isfinite(v)) {
          if (bad++ == 0) first_bad = p;
        }
        values[idx] = v;
      }
    }
  }
  if (bad > 0) {
    // Re-evaluate the first offender with the checked evaluator for the
    // subexpression diagnostics.
    try {
      (void)evaluate(F, first_bad.head(spec.dimension));
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(e.subexpression(), e.point(), static_cast<long>(bad));
    }
    throw NonFiniteError(to_string(F), first_bad.to_vector(spec.dimension), static_cast<long>(bad));
  }
  grid.values_ = std::move(values);
  return grid;
}

}  // namespace lyapcert
