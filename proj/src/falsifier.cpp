#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "lyapcert/dynamics.hpp"
#include "parallel.hpp"

namespace lyapcert {

namespace {

// Outside the outermost surface by more than one cell.
bool escaped(const Hypersurface& outer, const Vec& p) {
  return !outer.contains(p) && outer.distance_to_surface(p) > outer.cell_size();
}

IntegratorConfig surface_config(const IntegratorConfig& base, const NestedFamily& family) {
  IntegratorConfig cfg = base;
  const double cell = family.surfaces.front().surface.cell_size();
  cfg.max_displacement = std::min(cfg.max_displacement, cell);
  cfg.box = family.grid;
  return cfg;
}

std::vector<Vec> sample_inside(const Hypersurface& inner, int count, std::uint64_t seed) {
  const int n = inner.dimension();
  Vec lo = inner.vertices().front(), hi = lo;
  for (const Vec& v : inner.vertices()) {
    for (int a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  const long budget = 1000L * count + 1000;
  for (long attempt = 0; attempt < budget && static_cast<int>(out.size()) < count; ++attempt) {
    Vec p;
    for (int a = 0; a < n; ++a) p[a] = lo[a] + unit(rng) * (hi[a] - lo[a]);
    try {
      if (bounds_point(inner, p)) out.push_back(p);
    } catch (const ProximityError&) {
    }
  }
  if (static_cast<int>(out.size()) < count) {
    throw CertificationError("sampler failure: the innermost region is thinner than one cell");
  }
  return out;
}

}  // namespace

FalsificationReport containment_test(const VectorFieldDef& f, const NestedFamily& family,
                                     const FalsificationParams& params) {
  if (family.surfaces.empty()) throw CertificationError("containment test needs a non-empty family");
  if (params.trials < 1) throw CertificationError("containment test needs at least one trial");
  const Hypersurface& outer = family.surfaces.front().surface;
  const Hypersurface& inner = family.surfaces.back().surface;
  const int n = family.dimension();
  const std::vector<Vec> starts = sample_inside(inner, params.trials, params.seed);
  const IntegratorConfig cfg = surface_config(params.integrator, family);
  const double reach = distance_to_point(family.x0, outer);
  if (params.dump_dir) std::filesystem::create_directories(*params.dump_dir);

  struct Outcome {
    bool escaped = false;
    double time = 0.0;
    double excursion = 0.0;
  };
  std::vector<Outcome> outcomes(starts.size());
  parallel_for(params.trials, thread_limit(), [&](int i) {
    auto stop = [&](double, std::span<const double> x) { return escaped(outer, Vec::from(x)); };
    const Trajectory traj = integrate(f, starts[i].head(n), params.horizon, cfg, stop);
    Outcome& o = outcomes[i];
    o.escaped = traj.termination != Termination::kHorizon;
    o.time = traj.times.back();
    for (const auto& s : traj.states) o.excursion = std::max(o.excursion, distance(Vec::from(s), family.x0));
    if (params.dump_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "trajectory_%04d.csv", i);
      write_trajectory_csv(traj, (std::filesystem::path(*params.dump_dir) / name).string());
    }
  });

  FalsificationReport report;
  report.trials = params.trials;
  report.convention =
      "a trajectory within one cell of the outermost surface counts as contained; escapes are states outside it "
      "by more than one cell, or leaving the grid box, or blowing up";
  for (int i = 0; i < params.trials; ++i) {
    const Outcome& o = outcomes[i];
    report.max_excursion_ratio = std::max(report.max_excursion_ratio, o.excursion / reach);
    if (!o.escaped) continue;
    ++report.escapes;
    if (!report.first_escape || o.time < report.first_escape->time) {
      report.first_escape = EscapeWitness{starts[i], o.time, 0};
    }
  }
  return report;
}

std::optional<double> escape_time(const VectorFieldDef& f, const NestedFamily& family, const Vec& start,
                                  double horizon, const IntegratorConfig& config) {
  if (family.surfaces.empty()) throw CertificationError("escape time needs a non-empty family");
  const Hypersurface& outer = family.surfaces.front().surface;
  auto stop = [&](double, std::span<const double> x) { return escaped(outer, Vec::from(x)); };
  const Trajectory traj =
      integrate(f, start.head(family.dimension()), horizon, surface_config(config, family), stop);
  if (traj.termination == Termination::kHorizon) return std::nullopt;
  return traj.times.back();
}

namespace {

std::vector<Vec> sphere_directions(int n, int count) {
  std::vector<Vec> dirs;
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * k / count;
      dirs.push_back({std::cos(t), std::sin(t), 0.0});
    }
    return dirs;
  }
  // Fibonacci lattice.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
  }
  return dirs;
}

}  // namespace

std::vector<ProbeRow> epsilon_delta_probe(const VectorFieldDef& f, const Vec& x0, const std::vector<double>& epsilons,
                                          const ProbeParams& params) {
  const int n = f.dimension();
  if (n != 2 && n != 3) throw DimensionError("the probe supports n = 2 or 3");
  const double residual = norm(Vec::from(f.evaluate(x0.head(n))));
  if (residual > params.equilibrium_tol) {
    throw CertificationError("x0 is not an equilibrium: |f(x0)| = " + std::to_string(residual));
  }
  const std::vector<Vec> dirs = sphere_directions(n, std::max(params.trials, 1));
  std::vector<ProbeRow> rows;
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw CertificationError("epsilon must be positive");
    auto validated = [&](double delta) {
      std::vector<char> ok(dirs.size(), 0);
      parallel_for(static_cast<int>(dirs.size()), thread_limit(), [&](int i) {
        const Vec start = x0 + delta * dirs[i];
        auto stop = [&](double, std::span<const double> x) { return distance(Vec::from(x), x0) >= eps; };
        try {
          ok[i] = integrate(f, start.head(n), params.horizon, params.integrator, stop).termination ==
                  Termination::kHorizon;
        } catch (const IntegrationError&) {
          ok[i] = 0;
        }
      });
      return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    };
    double lo = 0.0, hi = eps;
    for (int s = 0; s < params.bisection_steps; ++s) {
      const double mid = 0.5 * (lo + hi);
      (validated(mid) ? lo : hi) = mid;
    }
    rows.push_back({eps, lo, lo < params.effectively_zero * eps});
  }
  return rows;
}

}  // namespace lyapcert
