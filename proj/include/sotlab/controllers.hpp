#pragma once

#include <span>
#include <variant>
#include <vector>

#include "sotlab/targets.hpp"
#include "sotlab/transport.hpp"
#include "sotlab/value_det.hpp"

namespace sotlab {

/// Velocity applied to one mass element during a step. Elements of a split
/// source atom appear as separate entries sharing the site.
struct ControlAtom {
  int site = 0;
  Vec velocity{0.0, 0.0};
  double mass = 0.0;
};

struct TrajectoryStep {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<ControlAtom> atoms;
  double power = 0.0;  // sum of mass * c * |velocity|^k over atoms
};

/// State trajectory of a controlled measure together with the applied
/// velocities and the accumulated running cost.
struct ControlledTrajectory {
  std::vector<double> times;           // node times, size steps+1
  std::vector<GridMeasure> states;     // measure at each node time
  std::vector<TrajectoryStep> steps;
  double running_cost = 0.0;
  /// Steering only: distance covered by the final uncosted adjustment that
  /// places the state on the exact terminal target.
  double terminal_adjust_gap = 0.0;
};

/// Constant-speed displacement geodesic from mu to nu over [t0, t1]: every
/// plan atom moves along its minimal-image segment and arrives at t1. The
/// cost is computed from the exact atom displacements,
/// c * W_k(mu,nu)^k / (t1-t0)^(k-1); snapping affects only the recorded
/// intermediate states.
ControlledTrajectory geodesic_rollout(const GridMeasure& mu, const GridMeasure& nu, double t0,
                                      double t1, int steps, const PowerCost& cost);

/// Replanning policy for piecewise-constant target paths: between jumps the
/// state follows the geodesic from the current state toward the currently
/// observed target, paced to arrive at the horizon T; each jump triggers a
/// replan from wherever the state is. After the last jump the geodesic
/// completes, so the terminal state equals the path's final measure.
ControlledTrajectory replanning_rollout(const GridMeasure& mu, const TargetPath& path, double t0,
                                        const Horizon& horizon, const PowerCost& cost,
                                        int steps_per_segment);

/// Where the phase-two steering ODE starts: at the offset observed when the
/// plan was made (adapted, the default) or at the current offset (used by
/// identity checks that need the initial mismatch term to vanish).
enum class SteerStart { AtPlanningOffset, AtCurrentOffset };

struct SteerOptions {
  SteerStart start = SteerStart::AtPlanningOffset;
  bool record_states = true;
  int phase1_steps = 8;
};

/// Transport-then-steer policy for diffusion-translated targets (quadratic
/// cost). Phase one transports mu to the translated target shape over
/// delta = (T-t0) - (T-t0)^theta; phase two translates every atom with the
/// common bridge velocity (W_t - X_t)/(T-t). The ODE is integrated by
/// explicit Euler on the path's grid up to T - dt_min; the final uncosted
/// step places the state on the exact terminal target and its magnitude is
/// recorded in terminal_adjust_gap.
ControlledTrajectory steer_rollout(const GridMeasure& mu, const TargetPath& diffusion_path,
                                   double t0, const Horizon& horizon, const PowerCost& cost,
                                   double theta, const SteerOptions& options = {});

/// Jensen projection: value of the deterministic problem toward the average
/// terminal measure of a family of trajectories sharing (t0, mu). Always a
/// lower bound for the family's mean cost when the running cost is convex.
double lower_bound_projection(std::span<const ControlledTrajectory> trajectories,
                              const PowerCost& cost, const Horizon& horizon);

// Policy tags used by the Monte Carlo layer.
struct DeterministicGeodesicPolicy {
  bool operator==(const DeterministicGeodesicPolicy&) const = default;
};
struct ReplanningPolicy {
  bool operator==(const ReplanningPolicy&) const = default;
};
struct TransportThenSteerPolicy {
  double theta = 2.4;
  bool operator==(const TransportThenSteerPolicy&) const = default;
};
struct IdlePolicy {
  bool operator==(const IdlePolicy&) const = default;
};

using ControlPolicy = std::variant<DeterministicGeodesicPolicy, ReplanningPolicy,
                                   TransportThenSteerPolicy, IdlePolicy>;

}  // namespace sotlab
