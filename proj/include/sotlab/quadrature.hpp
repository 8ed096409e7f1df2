#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace sotlab {

/// Adaptive Simpson quadrature. Recurses until the local Richardson error
/// estimate meets the tolerance (relative to the accumulated integral scale,
/// with an absolute floor), up to max_depth.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double rel_tol = 1e-10, double abs_tol = 1e-14,
                               int max_depth = 48) {
  struct Helper {
    const std::function<double(double)>& f;
    double rel_tol, abs_tol;

    double recurse(double a, double b, double fa, double fm, double fb, double whole,
                   int depth) const {
      double m = 0.5 * (a + b);
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      double flm = f(lm), frm = f(rm);
      double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      double delta = left + right - whole;
      double tol = std::max(abs_tol, rel_tol * std::abs(left + right));
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
      return recurse(a, m, fa, flm, fm, left, depth - 1) +
             recurse(m, b, fm, frm, fb, right, depth - 1);
    }
  };

  if (!(b >= a)) throw std::invalid_argument("adaptive_simpson: b must be >= a");
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Helper{f, rel_tol, abs_tol}.recurse(a, b, fa, fm, fb, whole, max_depth);
}

}  // namespace sotlab
