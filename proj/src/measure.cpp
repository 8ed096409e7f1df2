#include "sotlab/measure.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace sotlab {

namespace {
constexpr double kMassTolerance = 1e-12;
}

GridMeasure::GridMeasure(TorusGrid grid, std::vector<double> weights)
    : grid_(grid), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != grid_.site_count())
    throw std::invalid_argument("GridMeasure: weight vector size does not match grid");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0))
      throw std::invalid_argument("GridMeasure: negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw std::invalid_argument("GridMeasure: weights must sum to 1");
}

std::string GridMeasure::to_json_string(int indent) const {
  nlohmann::json j{{"dim", grid_.dim}, {"n", grid_.points_per_axis}, {"weights", weights_}};
  return j.dump(indent);
}

GridMeasure GridMeasure::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TorusGrid grid(j.at("dim").get<int>(), j.at("n").get<int>());
  return GridMeasure(grid, j.at("weights").get<std::vector<double>>());
}

GridMeasure dirac(const TorusGrid& grid, int site_index) {
  if (site_index < 0 || site_index >= grid.site_count())
    throw std::out_of_range("dirac: site index out of range");
  std::vector<double> w(grid.site_count(), 0.0);
  w[site_index] = 1.0;
  return GridMeasure(grid, std::move(w));
}

GridMeasure uniform(const TorusGrid& grid) {
  const int count = grid.site_count();
  return GridMeasure(grid, std::vector<double>(count, 1.0 / count));
}

GridMeasure measure_from_weights(const TorusGrid& grid, std::vector<double> weights) {
  return GridMeasure(grid, std::move(weights));
}

GridMeasure pushforward_translate(const GridMeasure& m, const TorusDisplacement& shift) {
  const TorusGrid& grid = m.grid();
  if (shift.dim != grid.dim)
    throw std::invalid_argument("pushforward_translate: dimension mismatch");
  const int n = grid.points_per_axis;
  int steps[2] = {0, 0};
  for (int a = 0; a < grid.dim; ++a) {
    double k = shift.v[a] * n;
    double r = std::round(k);
    if (std::abs(k - r) > 1e-9)
      throw std::invalid_argument("pushforward_translate: shift is not grid-aligned");
    steps[a] = static_cast<int>(r);
  }
  std::vector<double> out(grid.site_count(), 0.0);
  if (grid.dim == 1) {
    for (int i = 0; i < n; ++i)
      out[grid.site_index(i + steps[0])] = m.weight(i);
  } else {
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        out[grid.site_index(ix + steps[0], iy + steps[1])] = m.weight(grid.site_index(ix, iy));
  }
  return GridMeasure(grid, std::move(out));
}

GridMeasure translate_snap(const GridMeasure& m, const Vec& offset) {
  const TorusGrid& grid = m.grid();
  std::vector<double> out(grid.site_count(), 0.0);
  for (int i = 0; i < grid.site_count(); ++i) {
    double w = m.weight(i);
    if (w == 0.0) continue;
    Vec p = grid.site_position(i);
    p[0] += offset[0];
    if (grid.dim == 2) p[1] += offset[1];
    out[grid.nearest_site(p)] += w;
  }
  return GridMeasure(grid, std::move(out));
}

double max_weight_deviation(const GridMeasure& a, const GridMeasure& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("max_weight_deviation: measures on different grids");
  double m = 0.0;
  for (int i = 0; i < a.site_count(); ++i)
    m = std::max(m, std::abs(a.weight(i) - b.weight(i)));
  return m;
}

}  // namespace sotlab
