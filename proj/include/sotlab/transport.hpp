#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sotlab/measure.hpp"

namespace sotlab {

/// One positive coupling of a transport plan: `mass` moved from a source
/// site to a target site along the minimal-image displacement.
struct PlanEntry {
  int source_site = 0;
  int target_site = 0;
  double mass = 0.0;
  Vec displacement{0.0, 0.0};  // minimal image of (target - source)
  double distance = 0.0;
};

/// Optimal (or entropic) coupling between two measures on a common grid,
/// together with Kantorovich dual potentials. For exact plans the duals are
/// feasible everywhere and tight on the support of the coupling.
class TransportPlan {
 public:
  TransportPlan() = default;
  TransportPlan(GridMeasure source, GridMeasure target, double cost_exponent,
                double total_cost, std::vector<PlanEntry> entries,
                std::vector<double> potential_source, std::vector<double> potential_target);

  const GridMeasure& source() const { return source_; }
  const GridMeasure& target() const { return target_; }
  double cost_exponent() const { return cost_exponent_; }
  double total_cost() const { return total_cost_; }
  const std::vector<PlanEntry>& entries() const { return entries_; }
  const std::vector<double>& potential_source() const { return potential_source_; }
  const std::vector<double>& potential_target() const { return potential_target_; }

  /// Row / column sums of the coupling, accumulated in entry order.
  std::vector<double> source_marginal() const;
  std::vector<double> target_marginal() const;

  /// True when every source site with positive mass couples to exactly one
  /// target site (the plan is induced by a map).
  bool is_monge(double mass_tol = 1e-12) const;

  std::vector<double> dense_coupling() const;  // N x N row-major

  std::string to_json_string(bool include_coupling = false, int indent = -1) const;

 private:
  GridMeasure source_, target_;
  double cost_exponent_ = 2.0;
  double total_cost_ = 0.0;
  std::vector<PlanEntry> entries_;
  std::vector<double> potential_source_, potential_target_;
};

/// Thrown when an iterative solver fails to reach its stopping criterion.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, long iterations, double residual = 0.0)
      : std::runtime_error(what), iterations(iterations), residual(residual) {}
  long iterations;
  double residual;
};

/// Exact optimal transport between mu and nu for the cost
/// periodic_distance^k, solved as a transportation problem by the network
/// simplex. Deterministic: a fixed pivot rule makes the returned vertex a
/// function of the input alone. Dual potentials come from the final node
/// potentials, normalized so the potential of the lowest-index source site
/// with positive mass is zero.
TransportPlan exact_ot(const GridMeasure& mu, const GridMeasure& nu, double k);

/// k-Wasserstein distance: (exact_ot total cost)^(1/k).
double wasserstein(const GridMeasure& mu, const GridMeasure& nu, double k);

/// Entropic optimal transport in the log domain with epsilon-scaling warm
/// starts. Zero-weight sites are excluded from the Gibbs kernel. The
/// reported total_cost is the transport part <coupling, cost> only; the
/// stopping criterion is the L1 marginal violation.
TransportPlan sinkhorn(const GridMeasure& mu, const GridMeasure& nu, double k,
                       double epsilon, int max_iters, double tol);

/// Drift realizing the constant-speed geodesic of an exact quadratic plan:
/// at each source site with positive mass, the barycentric minimal-image
/// displacement to its plan targets divided by the remaining time. Sites
/// with zero mass get velocity zero.
std::vector<Vec> optimal_velocity_field(const TransportPlan& plan, double remaining_time);

/// Measure at parameter s along the displacement interpolation of a plan:
/// each coupled mass element sits at source + s * displacement, snapped to
/// the nearest grid site. s = 0 and s = 1 reproduce the plan marginals.
GridMeasure displacement_interpolate(const TransportPlan& plan, double s);

/// Finitely supported distribution of velocities at each grid site.
struct SpeedAtom {
  Vec velocity{0.0, 0.0};
  double probability = 0.0;
};

struct SpeedDistribution {
  std::vector<std::vector<SpeedAtom>> site_atoms;  // empty list = site unused
  double velocity_bound = 0.0;

  void validate(int dim) const;
};

}  // namespace sotlab
