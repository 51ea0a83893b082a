#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/kernels.hpp"
#include "cdrodeo/marginal.hpp"
#include "cdrodeo/quadrature.hpp"

namespace cdrodeo {

/// Counts kernel function evaluations (K and J calls) for the complexity
/// accounting. Interval prefiltering of observations is not an evaluation.
struct EvalStats {
  std::uint64_t kernel_evals = 0;
};

namespace detail {

inline void require_cache(const MarginalModel& marginal, const Dataset& data,
                          const char* op) {
  if (marginal.cached_values.size() != static_cast<std::size_t>(data.n))
    throw input_error(std::string(op) +
                      ": marginal values are not cached for this dataset "
                      "(call attach_cache / construct via marginal_known)");
}

/// True when observation i cannot contribute: some coordinate lies outside
/// the (compact) kernel support at the current bandwidth.
inline bool outside_support(const Dataset& data, int i, std::span<const double> w,
                            std::span<const double> h, double support_radius) {
  for (int k = 0; k < data.d; ++k)
    if (std::abs(w[k] - data.at(i, k)) > support_radius * h[k]) return true;
  return false;
}

}  // namespace detail

/// The product-kernel conditional density estimate at w:
///   (1/n) sum_i [1/f~_X(X_i)] prod_j h_j^{-1} K((w_j - W_ij)/h_j).
/// Signed: higher-order kernels can push it negative, and it is reported
/// as-is so the derivative identity with the Z statistic stays intact.
inline double estimate_density(const QueryPoint& w, const Bandwidth& h,
                               const Dataset& data, const MarginalModel& marginal,
                               const KernelProfile& kernel, EvalStats* stats = nullptr) {
  detail::require_cache(marginal, data, "estimate_density");
  if (static_cast<int>(w.w.size()) != data.d || static_cast<int>(h.h.size()) != data.d)
    throw input_error("estimate_density: w and h must have dimension d");

  thread_local std::vector<double> terms;
  terms.clear();
  std::uint64_t evals = 0;
  for (int i = 0; i < data.n; ++i) {
    if (kernel.support_radius &&
        detail::outside_support(data, i, w.w, h.h, *kernel.support_radius))
      continue;
    double term = 1.0 / marginal.cached_values[i];
    for (int k = 0; k < data.d; ++k) {
      term *= kernel.eval((w.w[k] - data.at(i, k)) / h.h[k]) / h.h[k];
      ++evals;
    }
    terms.push_back(term);
  }
  if (stats) stats->kernel_evals += evals;
  return pairwise_sum(terms) / data.n;
}

/// The bandwidth-derivative statistic Z_hj = d/dh_j of the estimate:
///   (-1/(n h_j^2)) sum_i [1/f~_X(X_i)] J((w_j - W_ij)/h_j)
///                          prod_{k != j} h_k^{-1} K((w_k - W_ik)/h_k).
/// Component index j is 0-based.
inline double z_statistic(const QueryPoint& w, const Bandwidth& h, int j,
                          const Dataset& data, const MarginalModel& marginal,
                          const KernelProfile& kernel, EvalStats* stats = nullptr) {
  detail::require_cache(marginal, data, "z_statistic");
  if (j < 0 || j >= data.d)
    throw input_error("z_statistic: component index " + std::to_string(j) +
                      " out of range for d=" + std::to_string(data.d));
  if (static_cast<int>(w.w.size()) != data.d || static_cast<int>(h.h.size()) != data.d)
    throw input_error("z_statistic: w and h must have dimension d");

  thread_local std::vector<double> terms;
  terms.clear();
  std::uint64_t evals = 0;
  for (int i = 0; i < data.n; ++i) {
    if (kernel.support_radius &&
        detail::outside_support(data, i, w.w, h.h, *kernel.support_radius))
      continue;
    double term = (1.0 / marginal.cached_values[i]) *
                  j_eval(kernel, (w.w[j] - data.at(i, j)) / h.h[j]);
    ++evals;
    for (int k = 0; k < data.d; ++k) {
      if (k == j) continue;
      term *= kernel.eval((w.w[k] - data.at(i, k)) / h.h[k]) / h.h[k];
      ++evals;
    }
    terms.push_back(term);
  }
  if (stats) stats->kernel_evals += evals;
  return -pairwise_sum(terms) / (data.n * h.h[j] * h.h[j]);
}

/// Concentration threshold lambda_hj = C_lambda sqrt((log n)^a / (n h_j^2 prod_k h_k))
/// with C_lambda = 4 ||J||_2 ||K||_2^{d-1}. Natural logarithm throughout.
inline double threshold(const Bandwidth& h, int j, long n, double a,
                        const KernelNorms& norms, int d) {
  if (j < 0 || j >= static_cast<int>(h.h.size()))
    throw input_error("threshold: component index out of range");
  if (n < 2) throw input_error("threshold: n must be at least 2");
  if (a < 1.0) throw input_error("threshold: exponent a must be >= 1");
  for (double v : h.h)
    if (!(v > 0.0)) throw input_error("threshold: bandwidth components must be positive");

  double c_lambda = 4.0 * norms.j_l2;
  for (int k = 1; k < d; ++k) c_lambda *= norms.k_l2;
  const double log_n = std::log(static_cast<double>(n));
  return c_lambda *
         std::sqrt(std::pow(log_n, a) /
                   (static_cast<double>(n) * h.h[j] * h.h[j] * h.product()));
}

}  // namespace cdrodeo
