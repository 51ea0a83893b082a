#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "cdrodeo/errors.hpp"

namespace cdrodeo {

/// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b]. Convergence
/// is certified by agreement of two refinement depths within abs_tol; built-in
/// error estimates alone are too pessimistic for integrands with kinks (the
/// L1 norms of sign-changing kernels). Fails hard instead of returning a
/// silently inaccurate value.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double coarse = gk::integrate(f, a, b, /*max_depth=*/18, abs_tol / 10.0);
  const double fine = gk::integrate(f, a, b, /*max_depth=*/24, abs_tol / 100.0);
  if (!std::isfinite(fine) || !(std::abs(fine - coarse) <= abs_tol)) {
    throw numeric_error("quadrature did not converge on [" + std::to_string(a) +
                        ", " + std::to_string(b) + "]: refinement gap " +
                        std::to_string(std::abs(fine - coarse)) + " exceeds " +
                        std::to_string(abs_tol));
  }
  return fine;
}

/// Deterministic pairwise (tree) summation. Blocks of up to 16 terms are
/// accumulated left to right, longer ranges are split at the midpoint. The
/// reduction order is part of the library contract: every sum over
/// observations uses it, so results are reproducible bit for bit.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace cdrodeo
