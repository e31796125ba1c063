#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "lyapcert/dynamics.hpp"

namespace lyapcert {

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::kHorizon: return "horizon";
    case Termination::kLeftBox: return "left-box";
    case Termination::kBlowUp: return "blow-up";
    case Termination::kStopped: return "stopped";
  }
  return "unknown";
}

int thread_limit() {
  if (const char* env = std::getenv("LYAPCERT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Fifth minus fourth order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
 public:
  explicit Stepper(const VectorFieldDef& f) : f_(f), n_(f.dimension()) {
    for (auto& k : k_) k.resize(n_);
    tmp_.resize(n_);
  }

  void derivative(const std::vector<double>& x, std::vector<double>& out) { f_.evaluate_unchecked(x, out); }

  // One trial step from (x, k1 = f(x)). Fills `next`, the error estimate and
  // k7 = f(next).
  void step(const std::vector<double>& x, double h, std::vector<double>& next, std::vector<double>& err) {
    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<int, double>> terms) {
      for (int i = 0; i < n_; ++i) {
        double s = x[i];
        for (const auto& [j, a] : terms) s += h * a * k_[j][i];
        tmp_[i] = s;
      }
      derivative(tmp_, out);
    };
    stage(k_[1], {{0, a21}});
    stage(k_[2], {{0, a31}, {1, a32}});
    stage(k_[3], {{0, a41}, {1, a42}, {2, a43}});
    stage(k_[4], {{0, a51}, {1, a52}, {2, a53}, {3, a54}});
    stage(k_[5], {{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}});
    next.resize(n_);
    for (int i = 0; i < n_; ++i) {
      next[i] = x[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] + b6 * k_[5][i]);
    }
    derivative(next, k_[6]);
    err.resize(n_);
    for (int i = 0; i < n_; ++i) {
      err[i] = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                    e7 * k_[6][i]);
    }
  }

  std::vector<double>& k1() { return k_[0]; }
  // First-same-as-last: the last stage of an accepted step is the next k1.
  void accept() { std::swap(k_[0], k_[6]); }

 private:
  const VectorFieldDef& f_;
  int n_;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> tmp_;
};

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Trajectory integrate(const VectorFieldDef& f, std::span<const double> start, double horizon,
                     const IntegratorConfig& cfg, const StopPredicate& stop) {
  const int n = f.dimension();
  if (static_cast<int>(start.size()) != n) throw DimensionError("start point dimension does not match the field");
  if (!(horizon >= 0.0)) throw IntegrationError("horizon must be non-negative");
  f.evaluate(start);  // reports the offending subexpression when not finite

  Trajectory traj;
  std::vector<double> x(start.begin(), start.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  if (horizon == 0.0) return traj;

  Stepper stepper(f);
  stepper.derivative(x, stepper.k1());
  double t = 0.0;
  double h;
  if (cfg.fixed_step) {
    h = *cfg.fixed_step;
    if (!(h > 0.0)) throw IntegrationError("fixed step must be positive");
  } else {
    const double d = norm_of(stepper.k1());
    h = d > 0.0 ? std::clamp(std::pow(cfg.rel_tol, 0.2) * (norm_of(x) + 1.0) / d, 1e-8, horizon) : horizon;
  }
  std::vector<double> next, err;
  long steps = 0;
  while (t < horizon) {
    if (++steps > cfg.max_steps) throw IntegrationError("step budget exhausted before the horizon");
    h = std::min({h, horizon - t, cfg.max_step});
    const bool last = h >= horizon - t;
    stepper.step(x, h, next, err);

    bool accept = all_finite(next) && all_finite(err);
    double factor = 0.2;
    if (accept && !cfg.fixed_step) {
      double e = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(x[i]), std::fabs(next[i]));
        e = std::max(e, std::fabs(err[i]) / sc);
      }
      accept = e <= 1.0;
      factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
    }
    if (accept && std::isfinite(cfg.max_displacement)) {
      double d2 = 0.0;
      for (int i = 0; i < n; ++i) d2 += (next[i] - x[i]) * (next[i] - x[i]);
      if (std::sqrt(d2) > cfg.max_displacement) {
        accept = false;
        factor = std::min(factor, 0.9 * cfg.max_displacement / std::sqrt(d2));
      }
    }
    if (!accept) {
      if (cfg.fixed_step) {
        traj.termination = Termination::kBlowUp;
        return traj;
      }
      h *= std::min(factor, 0.9);
      if (h < cfg.min_step * std::max(1.0, std::fabs(t))) {
        throw IntegrationError("step size underflow at t = " + std::to_string(t));
      }
      continue;
    }
    t = last ? horizon : t + h;
    x = next;
    stepper.accept();
    traj.step_sizes.push_back(h);
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (!all_finite(stepper.k1()) || norm_of(x) > cfg.blow_up_norm) {
      traj.termination = Termination::kBlowUp;
      return traj;
    }
    if (cfg.box) {
      for (int a = 0; a < n; ++a) {
        if (x[a] < cfg.box->lo[a] || x[a] > cfg.box->hi[a]) {
          traj.termination = Termination::kLeftBox;
          return traj;
        }
      }
    }
    if (stop && stop(t, x)) {
      traj.termination = Termination::kStopped;
      return traj;
    }
    if (!cfg.fixed_step) h *= factor;
  }
  traj.termination = Termination::kHorizon;
  return traj;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "t";
  const std::size_t n = trajectory.states.empty() ? 0 : trajectory.states[0].size();
  for (std::size_t i = 0; i < n; ++i) out << ",x_" << i + 1;
  out << "\n";
  char buf[32];
  for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g", trajectory.times[s]);
    out << buf;
    for (double v : trajectory.states[s]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace lyapcert
