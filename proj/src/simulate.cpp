#include "sotlab/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "sotlab/quadrature.hpp"
#include "sotlab/rng.hpp"

namespace sotlab {

double pairwise_sum(const std::vector<double>& values) {
  std::function<double(size_t, size_t)> sum = [&](size_t begin, size_t end) -> double {
    if (end - begin <= 8) {
      double s = 0.0;
      for (size_t i = begin; i < end; ++i) s += values[i];
      return s;
    }
    size_t mid = begin + (end - begin) / 2;
    return sum(begin, mid) + sum(mid, end);
  };
  return values.empty() ? 0.0 : sum(0, values.size());
}

void SimConfig::validate() const {
  if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
  if (!(t0 < horizon.T)) throw std::invalid_argument("SimConfig: t0 must be below the horizon");
  if (!(dt_min > 0.0) || dt_min > dt_coarse || !(dt_coarse < horizon.T - t0))
    throw std::invalid_argument("SimConfig: need 0 < dt_min <= dt_coarse < T - t0");
  if (!(refine_ratio > 0.0 && refine_ratio < 1.0))
    throw std::invalid_argument("SimConfig: refine_ratio must lie in (0,1)");
  if (!(mu0.grid() == target_grid(target)))
    throw std::invalid_argument("SimConfig: state and target live on different grids");
  if (std::holds_alternative<TransportThenSteerPolicy>(policy) &&
      !std::holds_alternative<DiffusionTranslateTarget>(target))
    throw std::invalid_argument("SimConfig: steering policy needs a diffusion target");
  if (std::holds_alternative<ReplanningPolicy>(policy) &&
      std::holds_alternative<DiffusionTranslateTarget>(target))
    throw std::invalid_argument("SimConfig: replanning policy needs a jump-type target");
  if (std::holds_alternative<TransportThenSteerPolicy>(policy)) {
    double theta = std::get<TransportThenSteerPolicy>(policy).theta;
    const auto& diff = std::get<DiffusionTranslateTarget>(target);
    if (diff.sigma.kind == RateFunction::Kind::PowerOfRemaining && !diff.sigma.is_zero()) {
      double gamma = diff.sigma.exponent;
      if (!(theta > 2.0 && theta < 1.0 + 2.0 * gamma))
        throw std::invalid_argument(
            "SimConfig: steering needs theta in (2, 1 + 2*gamma) for this sigma");
    }
  }
}

std::string SimReport::to_json_string(int indent) const {
  nlohmann::json j;
  j["mean_cost"] = mean_cost;
  j["std_error"] = std_error;
  j["n_paths"] = n_paths;
  j["diagnostics"] = {{"terminal_snap_gap", diagnostics.terminal_snap_gap},
                      {"jump_count_histogram", diagnostics.jump_count_histogram}};
  if (per_path_costs) j["per_path_costs"] = *per_path_costs;
  return j.dump(indent);
}

namespace {

struct PathOutcome {
  double cost = 0.0;
  int jumps = 0;
  double terminal_gap = 0.0;
};

struct PathRunner {
  const SimConfig& cfg;
  std::vector<double> diffusion_grid;  // shared, read-only

  PathOutcome run(std::uint64_t path_index) const {
    const std::uint64_t seed = derive_stream(cfg.base_seed, path_index);
    const bool diffusion = std::holds_alternative<DiffusionTranslateTarget>(cfg.target);
    TargetPath path = sample_path_on_grid(cfg.target, cfg.t0, cfg.horizon,
                                          diffusion ? diffusion_grid : std::vector<double>{},
                                          seed);
    PathOutcome outcome;
    outcome.jumps = path.jump_count();
    std::visit(
        [&](const auto& policy) {
          using P = std::decay_t<decltype(policy)>;
          if constexpr (std::is_same_v<P, DeterministicGeodesicPolicy>) {
            ControlledTrajectory traj =
                geodesic_rollout(cfg.mu0, path.initial, cfg.t0, cfg.horizon.T, 1, cfg.cost);
            outcome.cost = traj.running_cost;
          } else if constexpr (std::is_same_v<P, ReplanningPolicy>) {
            ControlledTrajectory traj =
                replanning_rollout(cfg.mu0, path, cfg.t0, cfg.horizon, cfg.cost, 1);
            outcome.cost = traj.running_cost;
          } else if constexpr (std::is_same_v<P, TransportThenSteerPolicy>) {
            SteerOptions options;
            options.record_states = false;
            ControlledTrajectory traj = steer_rollout(cfg.mu0, path, cfg.t0, cfg.horizon,
                                                      cfg.cost, policy.theta, options);
            outcome.cost = traj.running_cost;
            outcome.terminal_gap = traj.terminal_adjust_gap;
          } else {
            outcome.cost = 0.0;  // idle policy: state frozen, zero running cost
          }
        },
        cfg.policy);
    return outcome;
  }
};

void run_indexed(long long count, int threads, const std::function<void(long long)>& body) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = hw > 0 ? hw : 1;
  threads = static_cast<int>(std::min<long long>(threads, count));
  if (threads <= 1) {
    for (long long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (long long i = w; i < count; i += threads) body(i);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace

SimReport estimate_value(const SimConfig& cfg, int threads) {
  cfg.validate();
  auto started = std::chrono::steady_clock::now();

  PathRunner runner{cfg, {}};
  if (std::holds_alternative<DiffusionTranslateTarget>(cfg.target)) {
    runner.diffusion_grid =
        make_refined_grid(cfg.t0, cfg.horizon.T, cfg.dt_coarse, cfg.dt_min, cfg.refine_ratio);
    if (std::holds_alternative<TransportThenSteerPolicy>(cfg.policy)) {
      // Keep the steering handover time on the grid.
      double theta = std::get<TransportThenSteerPolicy>(cfg.policy).theta;
      double span = cfg.horizon.T - cfg.t0;
      double t_switch = cfg.t0 + span - std::pow(span, theta);
      auto it = std::lower_bound(runner.diffusion_grid.begin(), runner.diffusion_grid.end(),
                                 t_switch);
      if (it == runner.diffusion_grid.end() || std::abs(*it - t_switch) > 1e-15)
        runner.diffusion_grid.insert(it, t_switch);
    }
  }

  const long long n = cfg.n_paths;
  std::vector<double> costs(n);
  std::vector<int> jumps(n);
  std::vector<double> gaps(n);
  run_indexed(n, threads, [&](long long i) {
    PathOutcome outcome = runner.run(static_cast<std::uint64_t>(i));
    costs[i] = outcome.cost;
    jumps[i] = outcome.jumps;
    gaps[i] = outcome.terminal_gap;
  });

  SimReport report;
  report.n_paths = n;
  report.mean_cost = pairwise_sum(costs) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> sq(n);
    for (long long i = 0; i < n; ++i) {
      double d = costs[i] - report.mean_cost;
      sq[i] = d * d;
    }
    double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    report.std_error = std::sqrt(var / static_cast<double>(n));
  }
  int max_jumps = 0;
  for (long long i = 0; i < n; ++i) max_jumps = std::max(max_jumps, jumps[i]);
  report.diagnostics.jump_count_histogram.assign(max_jumps + 1, 0);
  for (long long i = 0; i < n; ++i) ++report.diagnostics.jump_count_histogram[jumps[i]];
  for (long long i = 0; i < n; ++i)
    report.diagnostics.terminal_snap_gap = std::max(report.diagnostics.terminal_snap_gap, gaps[i]);
  if (cfg.keep_per_path_costs) report.per_path_costs = costs;
  report.diagnostics.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<GapPoint> value_gap_curve(const SimConfig& cfg_template,
                                      const std::vector<double>& t_list,
                                      const GapCurveOptions& options, int threads) {
  std::vector<GapPoint> curve;
  curve.reserve(t_list.size());
  for (size_t idx = 0; idx < t_list.size(); ++idx) {
    SimConfig cfg = cfg_template;
    cfg.t0 = t_list[idx];
    cfg.dt_coarse = std::min(cfg.dt_coarse, 0.5 * (cfg.horizon.T - cfg.t0));
    cfg.dt_min = std::min(cfg.dt_min, cfg.dt_coarse);
    cfg.base_seed = derive_stream(cfg_template.base_seed, 0x9E3779B9ULL + idx);

    double u = u_det(cfg.t0, cfg.mu0, initial_target_measure(cfg.target), cfg.cost, cfg.horizon);

    SimReport report = estimate_value(cfg, threads);
    if (options.target_rel_stderr > 0.0) {
      while (report.std_error > options.target_rel_stderr * std::abs(report.mean_cost - u) &&
             cfg.n_paths < options.n_paths_cap) {
        cfg.n_paths = std::min(options.n_paths_cap, cfg.n_paths * 2);
        report = estimate_value(cfg, threads);
      }
    }

    GapPoint point;
    point.t = cfg.t0;
    point.mc_mean = report.mean_cost;
    point.mc_stderr = report.std_error;
    point.u_det_value = u;
    point.gap = report.mean_cost - u;
    point.n_paths = report.n_paths;
    curve.push_back(point);
  }
  return curve;
}

std::vector<std::pair<double, double>> blowup_probe(double lambda_const, const GridMeasure& mu,
                                                    const GridMeasure& nu, const JumpOperator& op,
                                                    double t, const Horizon& horizon,
                                                    const std::vector<double>& epsilons) {
  if (!(lambda_const > 0.0)) throw std::invalid_argument("blowup_probe: lambda must be positive");
  const double T = horizon.T;
  if (!(t < T)) throw std::invalid_argument("blowup_probe: t must be below the horizon");

  GridMeasure moved = op.apply(nu);
  if (max_weight_deviation(moved, nu) <= 1e-12)
    throw std::invalid_argument("blowup_probe: blow-up hypothesis violated (T nu equals nu)");

  const double window = T - t;
  const double intensity = lambda_const * window;
  const double p_one_jump = intensity * std::exp(-intensity);
  const double rho = 1.0 / window;  // conditional jump-time density, constant rate

  TransportPlan plan = exact_ot(mu, nu, 2.0);
  auto w2sq = [](const GridMeasure& a, const GridMeasure& b) {
    return exact_ot(a, b, 2.0).total_cost();
  };
  auto integrand = [&](double s) {
    GridMeasure state = displacement_interpolate(plan, (s - t) / window);
    return (w2sq(state, nu) + w2sq(state, moved)) / (T - s) * rho;
  };

  std::vector<std::pair<double, double>> probe;
  probe.reserve(epsilons.size());
  for (double eps : epsilons) {
    if (!(eps > 0.0) || eps >= window)
      throw std::invalid_argument("blowup_probe: cutoff outside (0, T - t)");
    double integral = adaptive_simpson(integrand, t, T - eps, 1e-9, 1e-14);
    probe.emplace_back(eps, p_one_jump * integral);
  }
  return probe;
}

SteeringCheck steering_identity_check(const RateFunction& sigma, double t0,
                                      const Horizon& horizon, long long n_paths,
                                      double x0_offset, std::uint64_t base_seed, double dt_coarse,
                                      double dt_min, double refine_ratio, int threads) {
  const double T = horizon.T;
  if (!(t0 < T))
    throw std::invalid_argument("steering_identity_check: t0 must be below the horizon");
  if (n_paths < 1) throw std::invalid_argument("steering_identity_check: n_paths must be >= 1");

  SteeringCheck check;
  const double span = T - t0;
  const bool noiseless = sigma.is_zero();
  if (!noiseless) {
    if (sigma.kind == RateFunction::Kind::Constant ||
        (sigma.kind == RateFunction::Kind::PowerOfRemaining && sigma.exponent <= 0.0))
      throw std::invalid_argument("steering_identity_check: identity is +inf = +inf");
    // Closed-form tail near the singularity; quadrature elsewhere.
    const double gamma = sigma.exponent;
    const double K = sigma.scale;
    const double tail = 1e-9 * span;
    double body = adaptive_simpson(
        [&](double s) {
          double v = sigma(s, T);
          return v * v / (T - s);
        },
        t0, T - tail, 1e-10, 1e-16);
    check.rhs_analytic = body + K * K * std::pow(tail, 2.0 * gamma) / (2.0 * gamma);
  }
  check.rhs_analytic += x0_offset * x0_offset / span;

  std::vector<double> grid = make_refined_grid(t0, T, dt_coarse, dt_min, refine_ratio);
  const size_t last = grid.size() - 2;  // integrate up to T - dt_min

  std::vector<double> energies(n_paths);
  run_indexed(n_paths, threads, [&](long long i) {
    Rng rng(derive_stream(base_seed, static_cast<std::uint64_t>(i)));
    double w = 0.0;
    double x = -x0_offset;
    double energy = 0.0;
    for (size_t j = 0; j < last; ++j) {
      double dt = grid[j + 1] - grid[j];
      double v = (w - x) / (T - grid[j]);
      energy += v * v * dt;
      x += v * dt;
      if (!noiseless) w += sigma(grid[j], T) * std::sqrt(dt) * rng.gaussian();
    }
    energies[i] = energy;
  });

  check.lhs_mc = pairwise_sum(energies) / static_cast<double>(n_paths);
  if (n_paths > 1) {
    std::vector<double> sq(n_paths);
    for (long long i = 0; i < n_paths; ++i) {
      double d = energies[i] - check.lhs_mc;
      sq[i] = d * d;
    }
    check.lhs_stderr =
        std::sqrt(pairwise_sum(sq) / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
  }
  check.z_score =
      check.lhs_stderr > 0.0 ? (check.lhs_mc - check.rhs_analytic) / check.lhs_stderr : 0.0;
  return check;
}

}  // namespace sotlab
