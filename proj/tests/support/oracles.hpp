#pragma once

// Test-only oracles, independent of the solver paths they check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sotlab/measure.hpp"

namespace sotlab::oracles {

/// Minimum transport cost between equal-weight supports of the same size by
/// enumerating every permutation coupling (Birkhoff vertices).
inline double permutation_min_cost(const GridMeasure& mu, const GridMeasure& nu, double k) {
  const TorusGrid& grid = mu.grid();
  std::vector<int> src, dst;
  for (int i = 0; i < grid.site_count(); ++i) {
    if (mu.weight(i) > 0.0) src.push_back(i);
    if (nu.weight(i) > 0.0) dst.push_back(i);
  }
  const int m = static_cast<int>(src.size());
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  const double w = 1.0 / m;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      double d = periodic_distance(grid.site_position(src[i]), grid.site_position(dst[perm[i]]),
                                   grid.dim);
      total += w * std::pow(d, k);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Simple fixed-step trapezoid integral, for cross-checking quadrature.
template <typename F>
double trapezoid(F f, double a, double b, int steps) {
  double h = (b - a) / steps;
  double total = 0.5 * (f(a) + f(b));
  for (int i = 1; i < steps; ++i) total += f(a + i * h);
  return total * h;
}

}  // namespace sotlab::oracles
