#pragma once

#include "sotlab/measure.hpp"
#include "sotlab/rng.hpp"

namespace sotlab {

/// Random measure with independent uniform weights, renormalized. With
/// allow_zeros, each site is emptied with probability 1/4 (at least one
/// site always survives).
inline GridMeasure random_measure(const TorusGrid& grid, Rng& rng, bool allow_zeros = false) {
  const int count = grid.site_count();
  std::vector<double> w(count);
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    double x = rng.uniform_pos();
    if (allow_zeros && rng.uniform01() < 0.25) x = 0.0;
    w[i] = x;
    total += x;
  }
  if (total == 0.0) {
    w[static_cast<int>(rng.uniform01() * count) % count] = 1.0;
    total = 1.0;
  }
  for (double& x : w) x /= total;
  return GridMeasure(grid, std::move(w));
}

/// Equal weights 1/atoms on `atoms` distinct random sites.
inline GridMeasure random_equal_weight_support(const TorusGrid& grid, int atoms, Rng& rng) {
  const int count = grid.site_count();
  std::vector<int> sites(count);
  for (int i = 0; i < count; ++i) sites[i] = i;
  // Partial Fisher-Yates for the first `atoms` positions.
  for (int i = 0; i < atoms; ++i) {
    int j = i + static_cast<int>(rng.uniform01() * (count - i));
    if (j >= count) j = count - 1;
    std::swap(sites[i], sites[j]);
  }
  std::vector<double> w(count, 0.0);
  for (int i = 0; i < atoms; ++i) w[sites[i]] = 1.0 / atoms;
  return GridMeasure(grid, std::move(w));
}

}  // namespace sotlab
