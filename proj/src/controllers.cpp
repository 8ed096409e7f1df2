#include "sotlab/controllers.hpp"

#include <cmath>
#include <stdexcept>

namespace sotlab {

namespace {

double power_of(double x, double k) {
  if (k == 2.0) return x * x;
  return std::pow(x, k);
}

std::vector<ControlAtom> atoms_for_plan(const TransportPlan& plan, double interp,
                                        double inv_duration) {
  const TorusGrid& grid = plan.source().grid();
  std::vector<ControlAtom> atoms;
  atoms.reserve(plan.entries().size());
  for (const PlanEntry& e : plan.entries()) {
    ControlAtom a;
    Vec p = grid.site_position(e.source_site);
    p[0] += interp * e.displacement[0];
    if (grid.dim == 2) p[1] += interp * e.displacement[1];
    a.site = grid.nearest_site(p);
    a.velocity[0] = e.displacement[0] * inv_duration;
    a.velocity[1] = e.displacement[1] * inv_duration;
    a.mass = e.mass;
    atoms.push_back(a);
  }
  return atoms;
}

double plan_power(const TransportPlan& plan, double inv_duration, const PowerCost& cost) {
  const int dim = plan.source().grid().dim;
  double p = 0.0;
  for (const PlanEntry& e : plan.entries())
    p += e.mass * power_of(e.distance * inv_duration, cost.exponent);
  (void)dim;
  return cost.scale * p;
}

// Plays the geodesic of `plan` paced to complete over `pace_duration`, but
// only on [t_begin, t_end], starting from interpolation parameter s_begin.
// Appends nodes/steps to `out` (which must already hold the state at
// t_begin) and returns the final interpolation parameter.
double play_geodesic_segment(const TransportPlan& plan, double t_begin, double t_end,
                             double s_begin, double pace_duration, int steps,
                             const PowerCost& cost, bool record_states,
                             ControlledTrajectory& out) {
  const double inv_pace = 1.0 / pace_duration;
  const double power = plan_power(plan, inv_pace, cost);
  const double duration = t_end - t_begin;
  double s_end = s_begin;
  for (int q = 0; q < steps; ++q) {
    double ta = t_begin + duration * q / steps;
    double tb = (q + 1 == steps) ? t_end : t_begin + duration * (q + 1) / steps;
    double sa = s_begin + (ta - t_begin) * inv_pace;
    s_end = s_begin + (tb - t_begin) * inv_pace;
    TrajectoryStep step;
    step.t_begin = ta;
    step.t_end = tb;
    step.power = power;
    if (record_states) step.atoms = atoms_for_plan(plan, sa, inv_pace);
    out.running_cost += power * (tb - ta);
    out.steps.push_back(std::move(step));
    out.times.push_back(tb);
    if (record_states)
      out.states.push_back(displacement_interpolate(plan, std::min(s_end, 1.0)));
  }
  return s_end;
}

}  // namespace

ControlledTrajectory geodesic_rollout(const GridMeasure& mu, const GridMeasure& nu, double t0,
                                      double t1, int steps, const PowerCost& cost) {
  if (!(t1 > t0)) throw std::invalid_argument("geodesic_rollout: t1 must exceed t0");
  if (steps < 1) throw std::invalid_argument("geodesic_rollout: need at least one step");
  TransportPlan plan = exact_ot(mu, nu, cost.exponent);

  ControlledTrajectory out;
  out.times.push_back(t0);
  out.states.push_back(mu);
  play_geodesic_segment(plan, t0, t1, 0.0, t1 - t0, steps, cost, true, out);
  out.states.back() = nu;  // s = 1 endpoint is the exact marginal
  return out;
}

ControlledTrajectory replanning_rollout(const GridMeasure& mu, const TargetPath& path, double t0,
                                        const Horizon& horizon, const PowerCost& cost,
                                        int steps_per_segment) {
  if (path.is_diffusion)
    throw std::invalid_argument("replanning_rollout: expects a jump-type target path");
  if (steps_per_segment < 1)
    throw std::invalid_argument("replanning_rollout: need at least one step per segment");
  const double T = horizon.T;
  if (!(t0 < T)) throw std::invalid_argument("replanning_rollout: t0 must be below the horizon");
  if (!path.event_times.empty() && path.event_times.back() >= T)
    throw std::invalid_argument("replanning_rollout: target jump at the horizon is unreachable");

  ControlledTrajectory out;
  out.times.push_back(t0);
  out.states.push_back(mu);

  GridMeasure state = mu;
  double t = t0;
  const GridMeasure* observed = &path.initial;
  size_t next_event = 0;
  while (true) {
    double t_end = next_event < path.event_times.size() ? path.event_times[next_event] : T;
    TransportPlan plan = exact_ot(state, *observed, cost.exponent);
    double s_end = play_geodesic_segment(plan, t, t_end, 0.0, T - t, steps_per_segment, cost,
                                         true, out);
    if (next_event == path.event_times.size()) {
      out.states.back() = *observed;  // geodesic completed at the horizon
      break;
    }
    state = displacement_interpolate(plan, std::min(s_end, 1.0));
    out.states.back() = state;
    t = t_end;
    observed = &path.event_measures[next_event];
    ++next_event;
  }
  return out;
}

ControlledTrajectory steer_rollout(const GridMeasure& mu, const TargetPath& diffusion_path,
                                   double t0, const Horizon& horizon, const PowerCost& cost,
                                   double theta, const SteerOptions& options) {
  if (!diffusion_path.is_diffusion)
    throw std::invalid_argument("steer_rollout: expects a diffusion target path");
  if (cost.exponent != 2.0)
    throw std::invalid_argument("steer_rollout: requires the quadratic cost");
  if (!(theta > 1.0)) throw std::invalid_argument("steer_rollout: theta must exceed 1");
  const double T = horizon.T;
  const double span = T - t0;
  const double delta = span - std::pow(span, theta);
  if (!(delta > 0.0) || !(delta < span))
    throw std::invalid_argument("steer_rollout: theta puts the handover outside (t0, T)");

  const GridMeasure& nu0 = diffusion_path.initial;
  const TorusGrid& grid = nu0.grid();
  const int dim = grid.dim;
  const double t_switch = t0 + delta;

  Vec x = options.start == SteerStart::AtPlanningOffset ? diffusion_path.offset_at(t0)
                                                        : diffusion_path.offset_at(t_switch);

  ControlledTrajectory out;
  out.times.push_back(t0);
  out.states.push_back(mu);

  // Phase one: transport to the translated target shape over [t0, t0+delta].
  GridMeasure handover = translate_snap(nu0, x);
  TransportPlan plan = exact_ot(mu, handover, cost.exponent);
  play_geodesic_segment(plan, t0, t_switch, 0.0, delta, options.phase1_steps, cost,
                        options.record_states, out);
  if (options.record_states) out.states.back() = handover;

  // Phase two: common translation with the bridge velocity (W - X)/(T - t),
  // explicit Euler on the path grid, stopping at the grid's last interior
  // node. The factor 1/(T-t) is evaluated at the left endpoint.
  const std::vector<double>& times = diffusion_path.times;
  size_t i = 0;
  while (i + 1 < times.size() && times[i] < t_switch) ++i;
  // Partial first interval when the handover falls between grid nodes.
  double t = t_switch;
  Vec w = diffusion_path.offset_at(t_switch);
  for (size_t j = i; j + 1 < times.size(); ++j) {
    double t_next = times[j + 1];
    if (t_next <= t) continue;
    if (t_next >= T) break;
    w = diffusion_path.offsets[j];
    Vec v{(w[0] - x[0]) / (T - t), dim == 2 ? (w[1] - x[1]) / (T - t) : 0.0};
    double dt = t_next - t;
    TrajectoryStep step;
    step.t_begin = t;
    step.t_end = t_next;
    step.power = cost.scale * squared_norm(v, dim);
    if (options.record_states) {
      GridMeasure current = translate_snap(nu0, x);
      for (int site = 0; site < current.site_count(); ++site)
        if (current.weight(site) > 0.0)
          step.atoms.push_back(ControlAtom{site, v, current.weight(site)});
    }
    out.running_cost += step.power * dt;
    out.steps.push_back(std::move(step));
    x[0] += v[0] * dt;
    if (dim == 2) x[1] += v[1] * dt;
    t = t_next;
    out.times.push_back(t);
    if (options.record_states) out.states.push_back(translate_snap(nu0, x));
  }

  // Final uncosted adjustment onto the exact terminal target.
  Vec w_final = diffusion_path.final_offset();
  Vec gap{w_final[0] - x[0], dim == 2 ? w_final[1] - x[1] : 0.0};
  out.terminal_adjust_gap = norm(gap, dim);
  out.times.push_back(T);
  out.states.push_back(translate_snap(nu0, w_final));
  return out;
}

double lower_bound_projection(std::span<const ControlledTrajectory> trajectories,
                              const PowerCost& cost, const Horizon& horizon) {
  if (trajectories.empty())
    throw std::invalid_argument("lower_bound_projection: empty trajectory family");
  const GridMeasure& mu = trajectories.front().states.front();
  const TorusGrid& grid = mu.grid();
  const double t0 = trajectories.front().times.front();

  std::vector<double> mean(grid.site_count(), 0.0);
  for (const ControlledTrajectory& traj : trajectories) {
    const GridMeasure& terminal = traj.states.back();
    if (!(terminal.grid() == grid))
      throw std::invalid_argument("lower_bound_projection: inconsistent grids");
    for (int i = 0; i < grid.site_count(); ++i) mean[i] += terminal.weight(i);
  }
  double total = 0.0;
  for (double& w : mean) total += w;
  for (double& w : mean) w /= total;

  return u_det(t0, mu, GridMeasure(grid, std::move(mean)), cost, horizon);
}

}  // namespace sotlab
