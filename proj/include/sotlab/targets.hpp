#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sotlab/measure.hpp"
#include "sotlab/value_det.hpp"

namespace sotlab {

/// Time-dependent nonnegative rate, either constant or K * (T - t)^gamma.
struct RateFunction {
  enum class Kind { Constant, PowerOfRemaining };

  Kind kind = Kind::Constant;
  double value = 0.0;     // Constant
  double scale = 0.0;     // K
  double exponent = 0.0;  // gamma

  static RateFunction constant(double v);
  static RateFunction power_of_remaining(double K, double gamma);

  double operator()(double t, double T) const;
  /// Supremum on [t0, T]; throws when unbounded (negative exponent).
  double sup_on(double t0, double T) const;
  bool is_zero() const;

  bool operator==(const RateFunction&) const = default;
};

/// Operator applied to the target measure at each jump time: a grid-aligned
/// translation or an arbitrary permutation of sites. Both preserve weights
/// exactly.
struct JumpOperator {
  enum class Kind { Translation, Permutation };

  Kind kind = Kind::Translation;
  TorusDisplacement shift;
  std::vector<int> permutation;  // permutation[i] = image site of i

  static JumpOperator translation(const TorusDisplacement& shift);
  static JumpOperator site_permutation(std::vector<int> permutation);

  GridMeasure apply(const GridMeasure& m) const;

  bool operator==(const JumpOperator&) const = default;
};

struct ConstantTarget {
  GridMeasure nu;
  bool operator==(const ConstantTarget&) const = default;
};

/// Target equal to nu_pre until T/2; at T/2 it switches to nu1 with
/// probability p and to nu2 otherwise, then stays constant.
struct BernoulliTarget {
  GridMeasure nu_pre, nu1, nu2;
  double p = 0.5;
  bool operator==(const BernoulliTarget&) const = default;
};

/// Target jumping nu -> op(nu) at the event times of a nonhomogeneous
/// Poisson process with intensity lambda, simulated by thinning against
/// lambda_max (0 means: use the exact supremum of lambda on the window).
struct PoissonJumpTarget {
  GridMeasure nu0;
  RateFunction lambda;
  double lambda_max = 0.0;
  JumpOperator op;
  bool operator==(const PoissonJumpTarget&) const = default;
};

/// Target (tau_{W_t})#nu0 for W driven by dW = sigma(t) dB. Offsets live in
/// R^d (cumulative Gaussian increments); measures are produced by snapping
/// the translated atoms to the grid.
struct DiffusionTranslateTarget {
  GridMeasure nu0;
  RateFunction sigma;
  bool operator==(const DiffusionTranslateTarget&) const = default;
};

using TargetProcess =
    std::variant<ConstantTarget, BernoulliTarget, PoissonJumpTarget, DiffusionTranslateTarget>;

const GridMeasure& initial_target_measure(const TargetProcess& process);
const TorusGrid& target_grid(const TargetProcess& process);

/// One sampled trajectory of a target process on [t0, T]. Jump-type paths
/// are piecewise constant and right-continuous: the observed measure is
/// `initial` on [t0, event_times[0]) and event_measures[i] from
/// event_times[i] on. Diffusion paths carry Brownian offsets on `times`.
struct TargetPath {
  double t0 = 0.0;
  double T = 1.0;
  GridMeasure initial;
  std::vector<double> event_times;  // strictly increasing, inside (t0, T]
  std::vector<GridMeasure> event_measures;
  std::vector<double> times;   // diffusion discretization grid (t0 ... T)
  std::vector<Vec> offsets;    // cumulative offsets, offsets[0] = 0
  bool is_diffusion = false;

  int jump_count() const { return static_cast<int>(event_times.size()); }
  const GridMeasure& measure_at(double t) const;
  const GridMeasure& final_measure() const;
  Vec offset_at(double t) const;   // diffusion only; left node lookup
  Vec final_offset() const;
};

/// Samples one path. `dt` sets the uniform discretization grid for the
/// diffusion variant (jump variants use exact event times); it must be
/// positive and below T - t0. Identical arguments give bit-identical paths.
TargetPath sample_path(const TargetProcess& process, double t0, const Horizon& horizon, double dt,
                       std::uint64_t rng_seed);

/// As sample_path, but the diffusion offsets are sampled on the supplied
/// monotone grid (first node t0, last node T).
TargetPath sample_path_on_grid(const TargetProcess& process, double t0, const Horizon& horizon,
                               const std::vector<double>& grid_times, std::uint64_t rng_seed);

/// Integral of the jump intensity over [t0, T] by adaptive quadrature.
double expected_jump_count(const PoissonJumpTarget& target, double t0, const Horizon& horizon);

struct JumpCountLaw {
  std::vector<double> probabilities;  // P(n = k) for k = 0..k_max
  double tail = 0.0;                  // P(n > k_max)
  double mean = 0.0;                  // integral of lambda
};

JumpCountLaw jump_count_law(const PoissonJumpTarget& target, double t0, const Horizon& horizon,
                            int k_max);

/// Monotone time grid from t0 to T whose step shrinks geometrically near the
/// horizon: the step is multiplied by refine_ratio each time the remaining
/// time halves, floored at dt_min. The last interior node is T - dt_min.
std::vector<double> make_refined_grid(double t0, double T, double dt_coarse, double dt_min,
                                      double refine_ratio);

}  // namespace sotlab
