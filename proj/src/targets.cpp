#include "sotlab/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sotlab/quadrature.hpp"
#include "sotlab/rng.hpp"

namespace sotlab {

RateFunction RateFunction::constant(double v) {
  if (v < 0.0) throw std::invalid_argument("RateFunction: constant rate must be nonnegative");
  RateFunction r;
  r.kind = Kind::Constant;
  r.value = v;
  return r;
}

RateFunction RateFunction::power_of_remaining(double K, double gamma) {
  if (K < 0.0) throw std::invalid_argument("RateFunction: scale must be nonnegative");
  RateFunction r;
  r.kind = Kind::PowerOfRemaining;
  r.scale = K;
  r.exponent = gamma;
  return r;
}

double RateFunction::operator()(double t, double T) const {
  if (kind == Kind::Constant) return value;
  double remaining = T - t;
  if (remaining <= 0.0) return exponent > 0.0 ? 0.0 : scale;
  return scale * std::pow(remaining, exponent);
}

double RateFunction::sup_on(double t0, double T) const {
  if (kind == Kind::Constant) return value;
  if (scale == 0.0) return 0.0;
  if (exponent < 0.0)
    throw std::invalid_argument("RateFunction: unbounded on the window (negative exponent)");
  return scale * std::pow(T - t0, exponent);
}

bool RateFunction::is_zero() const {
  return kind == Kind::Constant ? value == 0.0 : scale == 0.0;
}

JumpOperator JumpOperator::translation(const TorusDisplacement& shift) {
  JumpOperator op;
  op.kind = Kind::Translation;
  op.shift = shift;
  return op;
}

JumpOperator JumpOperator::site_permutation(std::vector<int> permutation) {
  JumpOperator op;
  op.kind = Kind::Permutation;
  op.permutation = std::move(permutation);
  std::vector<char> seen(op.permutation.size(), 0);
  for (int image : op.permutation) {
    if (image < 0 || image >= static_cast<int>(op.permutation.size()) || seen[image])
      throw std::invalid_argument("JumpOperator: not a permutation");
    seen[image] = 1;
  }
  return op;
}

GridMeasure JumpOperator::apply(const GridMeasure& m) const {
  if (kind == Kind::Translation) return pushforward_translate(m, shift);
  if (static_cast<int>(permutation.size()) != m.site_count())
    throw std::invalid_argument("JumpOperator: permutation size does not match grid");
  std::vector<double> out(m.site_count(), 0.0);
  for (int i = 0; i < m.site_count(); ++i) out[permutation[i]] += m.weight(i);
  return GridMeasure(m.grid(), std::move(out));
}

const GridMeasure& initial_target_measure(const TargetProcess& process) {
  return std::visit(
      [](const auto& p) -> const GridMeasure& {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantTarget>)
          return p.nu;
        else if constexpr (std::is_same_v<P, BernoulliTarget>)
          return p.nu_pre;
        else
          return p.nu0;
      },
      process);
}

const TorusGrid& target_grid(const TargetProcess& process) {
  return initial_target_measure(process).grid();
}

const GridMeasure& TargetPath::measure_at(double t) const {
  if (is_diffusion)
    throw std::logic_error("TargetPath: diffusion paths are read through offsets");
  const GridMeasure* current = &initial;
  for (size_t i = 0; i < event_times.size() && event_times[i] <= t; ++i)
    current = &event_measures[i];
  return *current;
}

const GridMeasure& TargetPath::final_measure() const {
  return event_measures.empty() ? initial : event_measures.back();
}

Vec TargetPath::offset_at(double t) const {
  if (!is_diffusion) return Vec{0.0, 0.0};
  auto it = std::upper_bound(times.begin(), times.end(), t);
  size_t idx = (it == times.begin()) ? 0 : static_cast<size_t>(it - times.begin()) - 1;
  return offsets[idx];
}

Vec TargetPath::final_offset() const {
  return is_diffusion ? offsets.back() : Vec{0.0, 0.0};
}

namespace {

void sample_poisson_events(const PoissonJumpTarget& target, double t0, double T, Rng& rng,
                           TargetPath& path) {
  double lambda_max = target.lambda_max > 0.0 ? target.lambda_max : target.lambda.sup_on(t0, T);
  if (lambda_max == 0.0) {
    if (!target.lambda.is_zero())
      throw std::invalid_argument("sample_path: lambda_max is zero but lambda is not");
    return;
  }
  GridMeasure current = target.nu0;
  double t = t0;
  while (true) {
    t += rng.exponential(lambda_max);
    if (t >= T) break;
    double rate = target.lambda(t, T);
    if (rate > lambda_max * (1.0 + 1e-12))
      throw std::invalid_argument("sample_path: lambda exceeds lambda_max");
    if (rng.uniform01() * lambda_max <= rate) {
      current = target.op.apply(current);
      path.event_times.push_back(t);
      path.event_measures.push_back(current);
    }
  }
}

void sample_diffusion_offsets(const DiffusionTranslateTarget& target,
                              const std::vector<double>& grid_times, double T, Rng& rng,
                              TargetPath& path) {
  const int dim = target.nu0.grid().dim;
  path.is_diffusion = true;
  path.times = grid_times;
  path.offsets.assign(grid_times.size(), Vec{0.0, 0.0});
  Vec w{0.0, 0.0};
  for (size_t i = 0; i + 1 < grid_times.size(); ++i) {
    double dt = grid_times[i + 1] - grid_times[i];
    double sd = target.sigma(grid_times[i], T) * std::sqrt(dt);
    w[0] += sd * rng.gaussian();
    if (dim == 2) w[1] += sd * rng.gaussian();
    path.offsets[i + 1] = w;
  }
}

}  // namespace

TargetPath sample_path_on_grid(const TargetProcess& process, double t0, const Horizon& horizon,
                               const std::vector<double>& grid_times, std::uint64_t rng_seed) {
  const double T = horizon.T;
  if (!(t0 < T)) throw std::invalid_argument("sample_path: t0 must be below the horizon");

  TargetPath path;
  path.t0 = t0;
  path.T = T;
  path.initial = initial_target_measure(process);

  Rng rng(rng_seed);
  std::visit(
      [&](const auto& target) {
        using P = std::decay_t<decltype(target)>;
        if constexpr (std::is_same_v<P, ConstantTarget>) {
          (void)target;
        } else if constexpr (std::is_same_v<P, BernoulliTarget>) {
          double switch_time = T / 2.0;
          if (!(t0 < switch_time))
            throw std::invalid_argument("sample_path: Bernoulli paths must start before T/2");
          bool first = rng.uniform01() < target.p;
          path.event_times.push_back(switch_time);
          path.event_measures.push_back(first ? target.nu1 : target.nu2);
        } else if constexpr (std::is_same_v<P, PoissonJumpTarget>) {
          sample_poisson_events(target, t0, T, rng, path);
        } else {
          sample_diffusion_offsets(target, grid_times, T, rng, path);
        }
      },
      process);
  return path;
}

TargetPath sample_path(const TargetProcess& process, double t0, const Horizon& horizon, double dt,
                       std::uint64_t rng_seed) {
  const double T = horizon.T;
  if (!(dt > 0.0) || dt >= T - t0)
    throw std::invalid_argument("sample_path: dt must lie in (0, T - t0)");
  std::vector<double> grid_times;
  if (std::holds_alternative<DiffusionTranslateTarget>(process)) {
    for (double t = t0; t < T; t += dt) grid_times.push_back(t);
    grid_times.push_back(T);
  }
  return sample_path_on_grid(process, t0, horizon, grid_times, rng_seed);
}

double expected_jump_count(const PoissonJumpTarget& target, double t0, const Horizon& horizon) {
  const double T = horizon.T;
  return adaptive_simpson([&](double s) { return target.lambda(s, T); }, t0, T, 1e-9, 1e-14);
}

JumpCountLaw jump_count_law(const PoissonJumpTarget& target, double t0, const Horizon& horizon,
                            int k_max) {
  if (k_max < 0) throw std::invalid_argument("jump_count_law: k_max must be nonnegative");
  JumpCountLaw law;
  law.mean = expected_jump_count(target, t0, horizon);
  law.probabilities.resize(k_max + 1);
  double total = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    double log_p = law.mean == 0.0 ? (k == 0 ? 0.0 : -std::numeric_limits<double>::infinity())
                                   : k * std::log(law.mean) - law.mean - std::lgamma(k + 1.0);
    law.probabilities[k] = std::exp(log_p);
    total += law.probabilities[k];
  }
  law.tail = std::max(0.0, 1.0 - total);
  return law;
}

std::vector<double> make_refined_grid(double t0, double T, double dt_coarse, double dt_min,
                                      double refine_ratio) {
  if (!(dt_min > 0.0) || dt_min > dt_coarse || !(dt_coarse < T - t0))
    throw std::invalid_argument("make_refined_grid: need 0 < dt_min <= dt_coarse < T - t0");
  if (!(refine_ratio > 0.0 && refine_ratio < 1.0))
    throw std::invalid_argument("make_refined_grid: refine_ratio must lie in (0,1)");

  // Step(t) = dt_coarse * ((T-t)/(T-t0))^p with p chosen so that the step
  // picks up a factor refine_ratio whenever the remaining time halves.
  const double p = std::log(refine_ratio) / std::log(0.5);
  const double span = T - t0;
  std::vector<double> times;
  double t = t0;
  const double last_interior = T - dt_min;
  while (t < last_interior) {
    times.push_back(t);
    double step = dt_coarse * std::pow((T - t) / span, p);
    step = std::clamp(step, dt_min, dt_coarse);
    t = std::min(t + step, last_interior);
  }
  times.push_back(last_interior);
  times.push_back(T);
  return times;
}

}  // namespace sotlab
