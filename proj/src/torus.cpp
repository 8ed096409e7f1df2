#include "sotlab/torus.hpp"

#include <stdexcept>

namespace sotlab {

TorusDisplacement TorusDisplacement::between(const Vec& from, const Vec& to, int dim) {
  TorusDisplacement d;
  d.dim = dim;
  d.v[0] = minimal_image(to[0] - from[0]);
  if (dim == 2) d.v[1] = minimal_image(to[1] - from[1]);
  return d;
}

double periodic_distance(const TorusPoint& a, const TorusPoint& b) {
  if (a.dim != b.dim)
    throw std::invalid_argument("periodic_distance: dimension mismatch");
  return periodic_distance(a.x, b.x, a.dim);
}

double periodic_distance(const Vec& a, const Vec& b, int dim) {
  double dx = minimal_image(a[0] - b[0]);
  double s = dx * dx;
  if (dim == 2) {
    double dy = minimal_image(a[1] - b[1]);
    s += dy * dy;
  }
  return std::sqrt(s);
}

TorusGrid::TorusGrid(int dim_, int n_) : dim(dim_), points_per_axis(n_) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
  if (points_per_axis < 2)
    throw std::invalid_argument("TorusGrid: need at least 2 points per axis");
}

Vec TorusGrid::site_position(int index) const {
  const int n = points_per_axis;
  if (index < 0 || index >= site_count())
    throw std::out_of_range("TorusGrid: site index out of range");
  if (dim == 1) return Vec{static_cast<double>(index) / n, 0.0};
  return Vec{static_cast<double>(index / n) / n, static_cast<double>(index % n) / n};
}

int TorusGrid::site_index(int ix, int iy) const {
  const int n = points_per_axis;
  int wx = ((ix % n) + n) % n;
  if (dim == 1) return wx;
  int wy = ((iy % n) + n) % n;
  return wx * n + wy;
}

namespace {

int nearest_axis_index(double coord, int n) {
  double k = wrap01(coord) * n;
  double f = std::floor(k);
  double frac = k - f;
  int lo = static_cast<int>(f) % n;
  int hi = (lo + 1) % n;
  if (frac < 0.5) return lo;
  if (frac > 0.5) return hi;
  return lo < hi ? lo : hi;
}

}  // namespace

int TorusGrid::nearest_site(const Vec& p) const {
  const int n = points_per_axis;
  int ix = nearest_axis_index(p[0], n);
  if (dim == 1) return ix;
  int iy = nearest_axis_index(p[1], n);
  return ix * n + iy;
}

}  // namespace sotlab
