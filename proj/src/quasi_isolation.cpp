#include <algorithm>
#include <cmath>
#include <limits>

#include "lyapcert/certify.hpp"

namespace lyapcert {

std::string to_string(QuasiVerdict verdict) {
  switch (verdict) {
    case QuasiVerdict::kQuasiIsolated: return "quasi-isolated";
    case QuasiVerdict::kNotQuasiIsolated: return "not-quasi-isolated";
    case QuasiVerdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

double max_abs_near(const SampleGrid& grid, const Vec& x0, double f0) {
  const double radius = 0.5 * grid.spec().inner_distance(x0);
  double best = 0.0;
  for (std::int64_t node = 0; node < grid.node_count(); ++node) {
    const auto c = grid.node_coords(node);
    if (distance(grid.node_position(c[0], c[1], c[2]), x0) <= radius) {
      best = std::max(best, std::fabs(grid.value(node) - f0));
    }
  }
  return best;
}

namespace {

// Cells of the grid with the range of F - f0 over their corners.
struct CellRanges {
  std::array<int, 3> counts{1, 1, 1};
  std::vector<double> lo, hi;
  std::vector<bool> in_ball;

  std::int64_t index(int i, int j, int k) const {
    return i + static_cast<std::int64_t>(counts[0]) * (j + static_cast<std::int64_t>(counts[1]) * k);
  }
};

CellRanges cell_ranges(const SampleGrid& grid, double f0, const Vec& x0, double delta) {
  const GridSpec& spec = grid.spec();
  const int n = spec.dimension;
  CellRanges r;
  for (int a = 0; a < n; ++a) r.counts[a] = spec.resolution[a];
  const std::int64_t total = static_cast<std::int64_t>(r.counts[0]) * r.counts[1] * r.counts[2];
  r.lo.assign(total, std::numeric_limits<double>::infinity());
  r.hi.assign(total, -std::numeric_limits<double>::infinity());
  r.in_ball.assign(total, false);
  for (int k = 0; k < r.counts[2]; ++k) {
    for (int j = 0; j < r.counts[1]; ++j) {
      for (int i = 0; i < r.counts[0]; ++i) {
        const std::int64_t c = r.index(i, j, k);
        for (int corner = 0; corner < (1 << n); ++corner) {
          const double v = grid.value(i + (corner & 1), j + ((corner >> 1) & 1), k + ((corner >> 2) & 1)) - f0;
          r.lo[c] = std::min(r.lo[c], v);
          r.hi[c] = std::max(r.hi[c], v);
        }
        Vec centre;
        for (int a = 0; a < n; ++a) {
          const int idx = a == 0 ? i : (a == 1 ? j : k);
          centre[a] = spec.lo[a] + (idx + 0.5) * spec.cell_size(a);
        }
        r.in_ball[c] = distance(centre, x0) <= delta;
      }
    }
  }
  return r;
}

// Cells whose closure contains x0.
std::vector<std::array<int, 3>> seed_cells(const GridSpec& spec, const Vec& x0) {
  std::vector<int> options[3] = {{0}, {0}, {0}};
  for (int a = 0; a < spec.dimension; ++a) {
    const double t = (x0[a] - spec.lo[a]) / spec.cell_size(a);
    const int i = std::clamp(static_cast<int>(std::floor(t)), 0, spec.resolution[a] - 1);
    options[a] = {i};
    if (std::fabs(t - std::round(t)) < 1e-9) {
      const int r = static_cast<int>(std::round(t));
      options[a] = {};
      if (r - 1 >= 0) options[a].push_back(r - 1);
      if (r < spec.resolution[a]) options[a].push_back(r);
    }
  }
  std::vector<std::array<int, 3>> seeds;
  for (int i : options[0])
    for (int j : options[1])
      for (int k : options[2]) seeds.push_back({i, j, k});
  return seeds;
}

struct Flood {
  long cells = 0;
  double diameter = 0.0;
  bool seeded = false;  // some seed cell met the band on its own
};

Flood flood(const CellRanges& r, const GridSpec& spec, const std::vector<std::array<int, 3>>& seeds, double eps) {
  const int n = spec.dimension;
  auto member = [&](std::int64_t c) { return r.in_ball[c] && r.lo[c] < eps && r.hi[c] > -eps; };
  std::vector<bool> seen(r.lo.size(), false);
  std::vector<std::array<int, 3>> stack;
  Flood out;
  for (const auto& s : seeds) {
    const std::int64_t c = r.index(s[0], s[1], s[2]);
    if (member(c)) out.seeded = true;
    // Seeds are always part of the component so the sequence stays nested.
    if (!seen[c]) {
      seen[c] = true;
      stack.push_back(s);
    }
  }
  constexpr int kBig = std::numeric_limits<int>::max();
  std::array<int, 3> lo{kBig, kBig, kBig}, hi{-1, -1, -1};
  while (!stack.empty()) {
    const auto cell = stack.back();
    stack.pop_back();
    ++out.cells;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], cell[a]);
      hi[a] = std::max(hi[a], cell[a]);
    }
    for (int a = 0; a < n; ++a) {
      for (int d : {-1, 1}) {
        auto next = cell;
        next[a] += d;
        if (next[a] < 0 || next[a] >= r.counts[a]) continue;
        const std::int64_t c = r.index(next[0], next[1], next[2]);
        if (seen[c] || !member(c)) continue;
        seen[c] = true;
        stack.push_back(next);
      }
    }
  }
  double diag2 = 0.0;
  for (int a = 0; a < n; ++a) {
    const double extent = (hi[a] - lo[a] + 1) * spec.cell_size(a);
    diag2 += extent * extent;
  }
  out.diameter = std::sqrt(diag2);
  return out;
}

}  // namespace

QuasiIsolationReport check_quasi_isolated(const Expr& F, const Vec& x0, const GridSpec& spec,
                                          const QuasiIsolationParams& params) {
  spec.validate();
  if (!spec.contains_strictly(x0)) throw GeometryError("grid box must contain x0 strictly inside");
  if (params.steps < 3) throw CertificationError("quasi-isolation needs at least 3 bands");
  const SampleGrid grid = SampleGrid::build(F, spec);
  QuasiIsolationReport report;
  report.f0 = evaluate(F, x0.head(spec.dimension));
  report.delta = spec.inner_distance(x0);
  double eps0 = params.eps0;
  if (eps0 <= 0.0) eps0 = max_abs_near(grid, x0, report.f0);
  if (!(eps0 > 0.0)) throw CertificationError("F is constant near x0; no band schedule exists");

  const CellRanges ranges = cell_ranges(grid, report.f0, x0, report.delta);
  const auto seeds = seed_cells(spec, x0);
  double seed_diameter = 0.0;
  for (int i = 0; i < params.steps; ++i) {
    const double eps = eps0 * std::ldexp(1.0, -i);
    const Flood f = flood(ranges, spec, seeds, eps);
    if (i == 0) {
      if (!f.seeded) {
        throw CertificationError("cells at x0 have |F - F(x0)| >= eps0; band schedule starts too small");
      }
      seed_diameter = flood(ranges, spec, seeds, -1.0).diameter;
      if (f.diameter <= seed_diameter) {
        throw CertificationError("grid too coarse: the first band does not extend past the cells at x0");
      }
    }
    report.epsilons.push_back(eps);
    report.diameters.push_back(f.diameter);
    report.cell_counts.push_back(f.cells);
  }

  const auto& d = report.diameters;
  const std::size_t m = d.size();
  const double last = d[m - 1];
  const double top = std::max({d[m - 1], d[m - 2], d[m - 3]});
  const double bottom = std::min({d[m - 1], d[m - 2], d[m - 3]});
  const double cells = params.stall_cells * spec.min_cell_size();
  if (top - bottom <= params.stall_tol * top && bottom > cells) {
    report.verdict = QuasiVerdict::kNotQuasiIsolated;
    report.reason = "band component stalls at diameter " + std::to_string(last);
  } else if (last <= params.quasi_tol * d.front()) {
    report.verdict = QuasiVerdict::kQuasiIsolated;
    report.reason = "band component shrinks to " + std::to_string(last / d.front()) + " of its initial diameter";
  } else {
    report.verdict = QuasiVerdict::kInconclusive;
    report.reason = "band component shrinks slowly without stalling";
  }
  return report;
}

}  // namespace lyapcert
