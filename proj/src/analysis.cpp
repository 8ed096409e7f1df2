#include "sotlab/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace sotlab {

SuperDiffCandidate candidate_from_optimal_plan(const TransportPlan& plan) {
  const GridMeasure& mu = plan.source();
  const int dim = mu.grid().dim;

  SuperDiffCandidate cand;
  cand.base_measure = mu;
  cand.psi.site_atoms.assign(mu.site_count(), {});
  double bound = 0.0;
  for (const PlanEntry& e : plan.entries()) {
    double w = mu.weight(e.source_site);
    if (w <= 0.0) continue;
    SpeedAtom atom;
    atom.velocity[0] = -e.displacement[0];  // pi_1 - pi_2, minimal image
    atom.velocity[1] = -e.displacement[1];
    atom.probability = e.mass / w;
    bound = std::max(bound, norm(atom.velocity, dim));
    cand.psi.site_atoms[e.source_site].push_back(atom);
  }
  cand.psi.velocity_bound = bound;
  cand.psi.validate(dim);
  return cand;
}

Coupling Coupling::product(const GridMeasure& a, const GridMeasure& b) {
  Coupling gamma;
  for (int i = 0; i < a.site_count(); ++i) {
    double wa = a.weight(i);
    if (wa <= 0.0) continue;
    for (int j = 0; j < b.site_count(); ++j) {
      double wb = b.weight(j);
      if (wb <= 0.0) continue;
      gamma.atoms.push_back(CouplingAtom{i, j, wa * wb});
    }
  }
  return gamma;
}

Coupling Coupling::from_plan(const TransportPlan& plan) {
  Coupling gamma;
  gamma.atoms.reserve(plan.entries().size());
  for (const PlanEntry& e : plan.entries())
    gamma.atoms.push_back(CouplingAtom{e.source_site, e.target_site, e.mass});
  return gamma;
}

void Coupling::validate_marginals(const GridMeasure& a, const GridMeasure& b, double tol) const {
  std::vector<double> ma(a.site_count(), 0.0), mb(b.site_count(), 0.0);
  for (const CouplingAtom& atom : atoms) {
    ma[atom.from] += atom.mass;
    mb[atom.to] += atom.mass;
  }
  for (int i = 0; i < a.site_count(); ++i)
    if (std::abs(ma[i] - a.weight(i)) > tol)
      throw std::invalid_argument("Coupling: first marginal mismatch");
  for (int j = 0; j < b.site_count(); ++j)
    if (std::abs(mb[j] - b.weight(j)) > tol)
      throw std::invalid_argument("Coupling: second marginal mismatch");
}

SuperDiffCheck check_superdiff_inequality(const SuperDiffCandidate& cand,
                                          const GridMeasure& nu_ref, const GridMeasure& mu_prime,
                                          const Coupling& gamma, double slack) {
  const GridMeasure& mu = cand.base_measure;
  const TorusGrid& grid = mu.grid();
  if (!(grid == nu_ref.grid()) || !(grid == mu_prime.grid()))
    throw std::invalid_argument("check_superdiff_inequality: grid mismatch");
  const int dim = grid.dim;

  SuperDiffCheck check;
  check.lhs = exact_ot(mu_prime, nu_ref, 2.0).total_cost() - exact_ot(mu, nu_ref, 2.0).total_cost();

  double first_order = 0.0;
  double quadratic = 0.0;
  for (const CouplingAtom& atom : gamma.atoms) {
    TorusDisplacement step =
        TorusDisplacement::between(grid.site_position(atom.from), grid.site_position(atom.to), dim);
    quadratic += atom.mass * squared_norm(step.v, dim);
    for (const SpeedAtom& z : cand.psi.site_atoms[atom.from])
      first_order += atom.mass * z.probability * dot(z.velocity, step.v, dim);
  }
  check.rhs = 2.0 * first_order + quadratic;
  check.holds = check.lhs <= check.rhs + slack;
  return check;
}

double quadratic_action(const GridMeasure& mu, const SpeedDistribution& psi) {
  const int dim = mu.grid().dim;
  double total = 0.0;
  for (int i = 0; i < mu.site_count(); ++i) {
    double w = mu.weight(i);
    if (w <= 0.0) continue;
    for (const SpeedAtom& a : psi.site_atoms[i])
      total += w * a.probability * squared_norm(a.velocity, dim);
  }
  return total;
}

double quadratic_action_of_means(const GridMeasure& mu, const SpeedDistribution& psi) {
  const int dim = mu.grid().dim;
  double total = 0.0;
  for (int i = 0; i < mu.site_count(); ++i) {
    double w = mu.weight(i);
    if (w <= 0.0) continue;
    Vec mean{0.0, 0.0};
    for (const SpeedAtom& a : psi.site_atoms[i]) {
      mean[0] += a.probability * a.velocity[0];
      mean[1] += a.probability * a.velocity[1];
    }
    total += w * squared_norm(mean, dim);
  }
  return total;
}

}  // namespace sotlab
