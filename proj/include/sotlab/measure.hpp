#pragma once

#include <string>
#include <vector>

#include "sotlab/torus.hpp"

namespace sotlab {

/// Discrete probability measure supported on a TorusGrid. Immutable after
/// construction: weights are nonnegative and sum to one (tolerance 1e-12).
class GridMeasure {
 public:
  GridMeasure() = default;
  GridMeasure(TorusGrid grid, std::vector<double> weights);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(int site) const { return weights_[site]; }
  int site_count() const { return static_cast<int>(weights_.size()); }

  bool operator==(const GridMeasure&) const = default;

  std::string to_json_string(int indent = -1) const;
  static GridMeasure from_json_string(const std::string& text);

 private:
  TorusGrid grid_;
  std::vector<double> weights_;
};

/// Unit mass at one grid site.
GridMeasure dirac(const TorusGrid& grid, int site_index);

/// Equal weight 1/n^dim on every site.
GridMeasure uniform(const TorusGrid& grid);

GridMeasure measure_from_weights(const TorusGrid& grid, std::vector<double> weights);

/// Pushforward of m under translation by a grid-aligned shift. The weights
/// are permuted cyclically, so mass bookkeeping is exact. Throws if any
/// shift component is not an integer multiple of the grid spacing.
GridMeasure pushforward_translate(const GridMeasure& m, const TorusDisplacement& shift);

/// Pushforward under an arbitrary translation, with each moved atom snapped
/// to its nearest grid site. Used by the Monte Carlo layer; not exact.
GridMeasure translate_snap(const GridMeasure& m, const Vec& offset);

/// Largest absolute difference of weights; measures must share a grid.
double max_weight_deviation(const GridMeasure& a, const GridMeasure& b);

}  // namespace sotlab
