#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyapcert/certify.hpp"
#include "lyapcert/expr.hpp"

namespace lyapcert {

enum class Termination { kHorizon, kLeftBox, kBlowUp, kStopped };
std::string to_string(Termination reason);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<double> step_sizes;  // accepted steps; one fewer than samples
  Termination termination = Termination::kHorizon;
};

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  // Accepted steps never move the state further than this (one grid cell
  // when checking against surfaces).
  double max_displacement = std::numeric_limits<double>::infinity();
  double blow_up_norm = 1e8;
  double min_step = 1e-14;
  long max_steps = 5'000'000;
  // When set, classical fixed steps of this size (error control disabled).
  std::optional<double> fixed_step;
  // When set, integration ends as soon as the state leaves this box.
  std::optional<GridSpec> box;
};

// Called after every accepted step; returning true ends the integration with
// Termination::kStopped.
using StopPredicate = std::function<bool(double t, std::span<const double> state)>;

// Dormand-Prince 5(4) with the fifth-order solution propagated. Throws
// NonFiniteError if f is not finite at the start and IntegrationError on
// step-size underflow or when max_steps is exhausted.
Trajectory integrate(const VectorFieldDef& f, std::span<const double> start, double horizon,
                     const IntegratorConfig& config = {}, const StopPredicate& stop = {});

// Worker count: LYAPCERT_THREADS when set and positive, else the hardware
// concurrency.
int thread_limit();

struct EscapeWitness {
  Vec start;
  double time = 0.0;
  int surface_index = 0;  // surface the trajectory escaped (0 = outermost)
};

struct FalsificationParams {
  int trials = 200;
  double horizon = 100.0;
  std::uint64_t seed = 42;
  IntegratorConfig integrator;
  // When set, every trajectory is written to <dump_dir>/trajectory_NNNN.csv.
  std::optional<std::string> dump_dir;
};

struct FalsificationReport {
  int trials = 0;
  int escapes = 0;
  std::optional<EscapeWitness> first_escape;  // earliest escape time
  // Largest |x(t) - x0| over all samples divided by d(x0, outermost surface).
  double max_excursion_ratio = 0.0;
  std::string convention;
};

// Starts are drawn uniformly inside the innermost surface; an escape is a
// state outside the outermost surface by more than one cell.
FalsificationReport containment_test(const VectorFieldDef& f, const NestedFamily& family,
                                     const FalsificationParams& params = {});

// Time at which the trajectory from `start` first escapes the outermost
// surface of the family by more than one cell, if it does before `horizon`.
std::optional<double> escape_time(const VectorFieldDef& f, const NestedFamily& family, const Vec& start,
                                  double horizon, const IntegratorConfig& config = {});

struct ProbeParams {
  int trials = 32;
  double horizon = 100.0;
  double equilibrium_tol = 1e-9;
  int bisection_steps = 20;
  // delta below effectively_zero * epsilon is reported as effectively zero.
  double effectively_zero = 1e-3;
  IntegratorConfig integrator;
};

struct ProbeRow {
  double epsilon = 0.0;
  double delta = 0.0;  // largest validated delta (0 when none)
  bool effectively_zero = false;
};

// Empirical epsilon-delta table: for each epsilon, bisection over delta in
// (0, epsilon] where delta is validated when every trajectory started on the
// sphere |x - x0| = delta stays within epsilon up to the horizon. Evidence,
// not proof. Throws CertificationError when |f(x0)| > equilibrium_tol.
std::vector<ProbeRow> epsilon_delta_probe(const VectorFieldDef& f, const Vec& x0,
                                          const std::vector<double>& epsilons, const ProbeParams& params = {});

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);

}  // namespace lyapcert
