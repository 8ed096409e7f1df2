#pragma once

#include <vector>

#include "sotlab/transport.hpp"

namespace sotlab {

/// Candidate element of the super-differential of mu' -> W_2^2(mu', nu)/2
/// at mu: a finitely supported velocity distribution at each atom of mu,
/// with a recorded support bound.
struct SuperDiffCandidate {
  GridMeasure base_measure;
  SpeedDistribution psi;
};

/// Disintegration of (pi_1, pi_1 - pi_2)#plan: at each source site with
/// positive mass, the plan's conditional mass sits on the minimal-image
/// displacements source - target. Built from an exact quadratic plan.
SuperDiffCandidate candidate_from_optimal_plan(const TransportPlan& plan);

/// Sparse coupling between two measures on a common grid.
struct CouplingAtom {
  int from = 0;  // site of the first marginal
  int to = 0;    // site of the second marginal
  double mass = 0.0;
};

struct Coupling {
  std::vector<CouplingAtom> atoms;

  static Coupling product(const GridMeasure& a, const GridMeasure& b);
  static Coupling from_plan(const TransportPlan& plan);
  void validate_marginals(const GridMeasure& a, const GridMeasure& b, double tol = 1e-9) const;
};

struct SuperDiffCheck {
  double lhs = 0.0;  // W2^2(mu', nu) - W2^2(mu, nu)
  double rhs = 0.0;  // 2 int z.(y-x) psi gamma + int |y-x|^2 gamma
  bool holds = false;
};

/// The exact first-order inequality behind super-differentiability of the
/// squared distance, evaluated with minimal-image displacements throughout.
/// `cand` must come from an optimal plan between mu and nu_ref; gamma may be
/// any coupling of (mu, mu').
SuperDiffCheck check_superdiff_inequality(const SuperDiffCandidate& cand,
                                          const GridMeasure& nu_ref, const GridMeasure& mu_prime,
                                          const Coupling& gamma, double slack = 1e-9);

/// Quadratic kinetic energy of a velocity distribution against a measure:
/// sum over sites of weight * sum of probability * |z|^2.
double quadratic_action(const GridMeasure& mu, const SpeedDistribution& psi);

/// Same with each site's distribution collapsed to its mean velocity.
double quadratic_action_of_means(const GridMeasure& mu, const SpeedDistribution& psi);

}  // namespace sotlab
