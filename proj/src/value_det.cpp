#include "sotlab/value_det.hpp"

#include <cmath>
#include <stdexcept>

namespace sotlab {

PowerCost::PowerCost(double k, double c) : exponent(k), scale(c) {
  if (!(k > 1.0)) throw std::invalid_argument("PowerCost: exponent must exceed 1");
  if (!(c > 0.0)) throw std::invalid_argument("PowerCost: scale must be positive");
}

Horizon::Horizon(double T_) : T(T_) {
  if (!(T > 0.0)) throw std::invalid_argument("Horizon: T must be positive");
}

double u_det(double t, const GridMeasure& mu, const GridMeasure& nu, const PowerCost& cost,
             const Horizon& horizon) {
  if (!(t < horizon.T)) throw std::invalid_argument("u_det: t must be below the horizon");
  double w = wasserstein(mu, nu, cost.exponent);
  return cost.scale * std::pow(w, cost.exponent) / std::pow(horizon.T - t, cost.exponent - 1.0);
}

double omega_envelope(double t, const TorusGrid& grid, const PowerCost& cost,
                      const Horizon& horizon) {
  if (!(t < horizon.T)) throw std::invalid_argument("omega_envelope: t must be below the horizon");
  double diam = std::sqrt(static_cast<double>(grid.dim)) / 2.0;
  return cost.scale * std::pow(diam, cost.exponent) /
         std::pow(horizon.T - t, cost.exponent - 1.0);
}

HjbResidual hjb_residual_quadratic(double t, const GridMeasure& mu, const GridMeasure& nu,
                                   const Horizon& horizon) {
  if (!(t < horizon.T))
    throw std::invalid_argument("hjb_residual_quadratic: t must be below the horizon");
  const double remaining = horizon.T - t;
  TransportPlan plan = exact_ot(mu, nu, 2.0);

  HjbResidual out;
  out.monge = plan.is_monge();
  out.dt_u = plan.total_cost() / (2.0 * remaining * remaining);

  std::vector<Vec> vel = optimal_velocity_field(plan, remaining);
  double h = 0.0;
  for (int i = 0; i < mu.site_count(); ++i) {
    double w = mu.weight(i);
    if (w <= 0.0) continue;
    h += w * squared_norm(vel[i], mu.grid().dim);
  }
  out.hamiltonian = 0.5 * h;
  out.residual = -out.dt_u + out.hamiltonian;
  return out;
}

double time_rescale_check(const GridMeasure& mu, const GridMeasure& nu, const PowerCost& cost,
                          const Horizon& horizon, const std::vector<double>& t_list) {
  if (t_list.empty()) return 0.0;
  double reference = 0.0;
  double deviation = 0.0;
  for (size_t i = 0; i < t_list.size(); ++i) {
    double value = u_det(t_list[i], mu, nu, cost, horizon) *
                   std::pow(horizon.T - t_list[i], cost.exponent - 1.0);
    if (i == 0)
      reference = value;
    else
      deviation = std::max(deviation, std::abs(value - reference));
  }
  return deviation;
}

}  // namespace sotlab
