#pragma once

// Reference values computed independently of the library.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "buckle/sparse.hpp"

namespace oracle {

/// First positive zero of J_1 by bisection on std::cyl_bessel_j over [3, 4.5],
/// where J_1 changes sign exactly once.
inline double j11() {
  double a = 3.0;
  double b = 4.5;
  const double fa = std::cyl_bessel_j(1.0, a);
  for (int k = 0; k < 200 && b - a > 1e-15; ++k) {
    const double mid = 0.5 * (a + b);
    const double fm = std::cyl_bessel_j(1.0, mid);
    ((fm > 0.0) == (fa > 0.0) ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

/// Tabulated value, used to cross-check the bisection.
inline constexpr double kJ11Table = 3.8317059702;

/// Clamped column of length L: 4 pi^2 / L^2.
inline double clamped_column(double length) {
  return 4.0 * std::numbers::pi * std::numbers::pi / (length * length);
}

/// Row-major dense copy of a sparse operator.
inline std::vector<double> dense(const buckle::SparseOperator& a) {
  const std::size_t n = a.size();
  std::vector<double> out(n * n, 0.0);
  const auto rp = a.row_ptr();
  const auto cols = a.cols();
  const auto vals = a.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) out[i * n + cols[k]] += vals[k];
  }
  return out;
}

}  // namespace oracle
