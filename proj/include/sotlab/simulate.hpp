#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sotlab/controllers.hpp"
#include "sotlab/targets.hpp"

namespace sotlab {

/// Full description of one Monte Carlo estimation run. Identical configs
/// produce bit-identical reports, whatever the worker thread count: paths
/// are seeded by (base_seed, path index) and aggregated by a fixed pairwise
/// tree reduction.
struct SimConfig {
  GridMeasure mu0;
  TargetProcess target;
  ControlPolicy policy;
  double t0 = 0.0;
  Horizon horizon;
  PowerCost cost;
  long long n_paths = 1;
  std::uint64_t base_seed = 0;
  double dt_coarse = 1e-3;
  double dt_min = 1e-6;
  double refine_ratio = 0.5;
  bool keep_per_path_costs = false;

  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct SimDiagnostics {
  double terminal_snap_gap = 0.0;            // max over paths
  std::vector<long long> jump_count_histogram;
  double runtime_seconds = 0.0;              // not serialized; see to_json
};

struct SimReport {
  double mean_cost = 0.0;
  double std_error = 0.0;
  long long n_paths = 0;
  std::optional<std::vector<double>> per_path_costs;
  SimDiagnostics diagnostics;

  /// Stable serialization: runtime_seconds is reported on the console
  /// summary only, so files from identical configs compare byte-equal.
  std::string to_json_string(int indent = -1) const;
};

/// Mean rollout cost of the configured policy over sampled target paths:
/// an upper-bound estimate of the stochastic transport value. threads <= 0
/// uses all hardware threads.
SimReport estimate_value(const SimConfig& cfg, int threads = 0);

struct GapPoint {
  double t = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double u_det_value = 0.0;
  double gap = 0.0;
  long long n_paths = 0;
};

struct GapCurveOptions {
  long long n_paths_cap = 1000000;
  double target_rel_stderr = 0.0;  // 0 disables the adaptive loop

  bool operator==(const GapCurveOptions&) const = default;
};

/// Runs estimate_value at each time in t_list (t0 replaced, per-time seed
/// stream) and pairs the estimate with the deterministic value toward the
/// target observed at that time. When target_rel_stderr > 0 the path count
/// doubles until each point's standard error is below that fraction of its
/// gap, capped at n_paths_cap.
std::vector<GapPoint> value_gap_curve(const SimConfig& cfg_template,
                                      const std::vector<double>& t_list,
                                      const GapCurveOptions& options = {}, int threads = 0);

/// Lower bound of the one-jump conditioning argument for a constant-rate
/// jump target whose operator moves nu: P(n=1) times the integral of
/// [W2^2(mu_s, nu) + W2^2(mu_s, T nu)] / (T-s) against the conditional jump
/// density, cut off at T - epsilon, along the no-jump geodesic trajectory.
/// The sequence grows without bound as epsilon shrinks.
std::vector<std::pair<double, double>> blowup_probe(double lambda_const, const GridMeasure& mu,
                                                    const GridMeasure& nu, const JumpOperator& op,
                                                    double t, const Horizon& horizon,
                                                    const std::vector<double>& epsilons);

struct SteeringCheck {
  double lhs_mc = 0.0;        // E integral |dX/dt|^2 dt, Monte Carlo
  double lhs_stderr = 0.0;
  double rhs_analytic = 0.0;  // |x0_offset|^2/(T-t0) + integral sigma^2/(T-s)
  double z_score = 0.0;
};

/// Monte Carlo check of the bridge energy identity: X follows
/// dX = (W - X)/(T - t) dt from X(t0) = W(t0) - x0_offset, with W driven by
/// sigma. Throws when the right side is infinite (sigma constant > 0).
SteeringCheck steering_identity_check(const RateFunction& sigma, double t0,
                                      const Horizon& horizon, long long n_paths,
                                      double x0_offset, std::uint64_t base_seed,
                                      double dt_coarse = 1e-3, double dt_min = 1e-7,
                                      double refine_ratio = 0.5, int threads = 0);

/// Deterministic pairwise tree sum; independent of any threading.
double pairwise_sum(const std::vector<double>& values);

}  // namespace sotlab
