#pragma once

#include <vector>

#include "sotlab/transport.hpp"

namespace sotlab {

/// Running cost L(x, a) = c * |a|^k with k > 1, c > 0. The quadratic
/// normalization L = |a|^2 / 2 is (c = 1/2, k = 2).
struct PowerCost {
  double exponent = 2.0;  // k
  double scale = 0.5;     // c

  PowerCost() = default;
  PowerCost(double k, double c);

  bool operator==(const PowerCost&) const = default;
};

struct Horizon {
  double T = 1.0;

  Horizon() = default;
  explicit Horizon(double T_);

  bool operator==(const Horizon&) const = default;
};

/// Deterministic transport value: c * W_k(mu, nu)^k / (T - t)^(k-1).
/// Diverges as t -> T unless mu == nu; throws for t >= T.
double u_det(double t, const GridMeasure& mu, const GridMeasure& nu, const PowerCost& cost,
             const Horizon& horizon);

/// Supremum of u_det over all times s <= t and all measure pairs on the
/// torus of the given dimension: c * (sqrt(d)/2)^k / (T - t)^(k-1). The
/// extreme pair is a pair of antipodal Diracs.
double omega_envelope(double t, const TorusGrid& grid, const PowerCost& cost,
                      const Horizon& horizon);

struct HjbResidual {
  double residual = 0.0;       // -dU/dt + (1/2) * integral |D_mu U|^2 dmu
  double dt_u = 0.0;           // analytic time derivative of U
  double hamiltonian = 0.0;    // (1/2) * integral of the squared gradient
  bool monge = false;          // plan couples each source atom to one target
};

/// Residual of the quadratic Hamilton-Jacobi-Bellman equation at (t, mu, nu)
/// for U = W_2^2 / (2 (T - t)). The measure gradient is evaluated at the
/// atoms of mu through the barycentric displacements of the exact plan; the
/// residual vanishes (up to rounding) exactly when the plan is Monge.
HjbResidual hjb_residual_quadratic(double t, const GridMeasure& mu, const GridMeasure& nu,
                                   const Horizon& horizon);

/// Max deviation of u_det(t) * (T - t)^(k-1) over t_list from its value at
/// the first time. Pure algebra; the deviation is rounding noise only.
double time_rescale_check(const GridMeasure& mu, const GridMeasure& nu, const PowerCost& cost,
                          const Horizon& horizon, const std::vector<double>& t_list);

}  // namespace sotlab
