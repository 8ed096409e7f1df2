#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sotlab {

/// Coordinate vector on the unit torus or in R^d. Only the first `dim`
/// components are meaningful (dim is 1 or 2 everywhere in this library);
/// unused components are kept at zero.
using Vec = std::array<double, 2>;

/// Maps x to its representative in [0, 1).
inline double wrap01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? r - 1.0 : r;
}

/// Minimal-image representative of a coordinate difference, in (-1/2, 1/2].
/// The tie at distance exactly 1/2 resolves toward the positive direction.
inline double minimal_image(double c) {
  double r = c - std::floor(c);
  if (r >= 1.0) r -= 1.0;
  if (r > 0.5) r -= 1.0;
  return r;
}

inline double norm(const Vec& v, int dim) {
  double s = v[0] * v[0];
  if (dim == 2) s += v[1] * v[1];
  return std::sqrt(s);
}

inline double squared_norm(const Vec& v, int dim) {
  double s = v[0] * v[0];
  if (dim == 2) s += v[1] * v[1];
  return s;
}

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = a[0] * b[0];
  if (dim == 2) s += a[1] * b[1];
  return s;
}

/// A point of the flat torus T^d together with its dimension tag.
struct TorusPoint {
  int dim = 1;
  Vec x{0.0, 0.0};
};

/// Minimal-image displacement between two torus points, component-wise in
/// (-1/2, 1/2].
struct TorusDisplacement {
  int dim = 1;
  Vec v{0.0, 0.0};

  static TorusDisplacement between(const Vec& from, const Vec& to, int dim);
  double length() const { return norm(v, dim); }

  bool operator==(const TorusDisplacement&) const = default;
};

/// Distance on the torus: Euclidean norm of the minimal-image displacement.
/// Throws std::invalid_argument on dimension mismatch.
double periodic_distance(const TorusPoint& a, const TorusPoint& b);

/// Unchecked variant for inner loops.
double periodic_distance(const Vec& a, const Vec& b, int dim);

/// Regular periodic grid {0, 1/n, ..., (n-1)/n}^dim on the unit torus.
/// Sites are indexed row-major over axes: index = ix * n + iy for dim 2.
struct TorusGrid {
  int dim = 1;
  int points_per_axis = 2;

  TorusGrid() = default;
  TorusGrid(int dim_, int n_);

  int site_count() const {
    return dim == 1 ? points_per_axis : points_per_axis * points_per_axis;
  }
  double spacing() const { return 1.0 / points_per_axis; }

  Vec site_position(int index) const;
  int site_index(int ix, int iy = 0) const;

  /// Index of the grid site nearest to p (periodic metric). Exact half-way
  /// ties resolve toward the lexicographically smaller multi-index.
  int nearest_site(const Vec& p) const;

  bool operator==(const TorusGrid&) const = default;
};

}  // namespace sotlab
