#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdrodeo/errors.hpp"
#include "cdrodeo/quadrature.hpp"

namespace cdrodeo {

/// Quadrature cutoff for kernels without compact support. The Gaussian tail
/// mass beyond |t| = 8 is below 1e-15, far under every tolerance in use.
inline constexpr double kUnboundedCutoff = 8.0;

/// Norms and moments of a kernel K and of J(t) = K(t) + t K'(t), computed
/// once at construction. Thresholds are evaluated millions of times per run,
/// so these must be constants.
struct KernelNorms {
  double k_l1 = 0, k_l2 = 0, k_sup = 0;
  double j_l1 = 0, j_l2 = 0, j_sup = 0;
  std::vector<double> moments_k;  // moments_k[l] = integral of t^l K(t)
  std::vector<double> moments_j;  // moments_j[l] = integral of t^l J(t)
};

/// A univariate kernel with its derivative, order (index of the first
/// nonvanishing moment), support radius (nullopt = unbounded) and cached
/// norms. Immutable after construction; safe to share across threads.
struct KernelProfile {
  std::string name;
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  int order = 2;
  std::optional<double> support_radius;
  double unbounded_cutoff = kUnboundedCutoff;
  KernelNorms norms;

  double quad_halfwidth() const {
    return support_radius ? *support_radius : unbounded_cutoff;
  }
};

/// J(t) = K(t) + t K'(t); identically zero outside a compact support.
inline double j_eval(const KernelProfile& k, double t) {
  if (k.support_radius && std::abs(t) > *k.support_radius) return 0.0;
  return k.eval(t) + t * k.deriv(t);
}

inline KernelNorms compute_norms(const KernelProfile& k) {
  const double H = k.quad_halfwidth();
  KernelNorms norms;
  norms.k_l1 = integrate([&](double t) { return std::abs(k.eval(t)); }, -H, H);
  norms.k_l2 = std::sqrt(integrate([&](double t) { double v = k.eval(t); return v * v; }, -H, H));
  norms.j_l1 = integrate([&](double t) { return std::abs(j_eval(k, t)); }, -H, H);
  norms.j_l2 = std::sqrt(integrate([&](double t) { double v = j_eval(k, t); return v * v; }, -H, H));

  const int grid = 20001;
  for (int i = 0; i < grid; ++i) {
    const double t = -H + 2.0 * H * i / (grid - 1);
    norms.k_sup = std::max(norms.k_sup, std::abs(k.eval(t)));
    norms.j_sup = std::max(norms.j_sup, std::abs(j_eval(k, t)));
  }

  const int max_moment = std::max(k.order, 4);
  for (int l = 0; l <= max_moment; ++l) {
    norms.moments_k.push_back(
        integrate([&](double t) { return std::pow(t, l) * k.eval(t); }, -H, H));
    norms.moments_j.push_back(
        integrate([&](double t) { return std::pow(t, l) * j_eval(k, t); }, -H, H));
  }
  return norms;
}

namespace detail {

inline void validate_profile(const KernelProfile& k) {
  if (std::abs(k.norms.moments_k[0] - 1.0) > 1e-10)
    throw numeric_error("kernel '" + k.name + "' does not integrate to 1");
  for (int l = 1; l < k.order; ++l)
    if (std::abs(k.norms.moments_k[l]) > 1e-8)
      throw numeric_error("kernel '" + k.name + "': moment " + std::to_string(l) +
                          " does not vanish");
  if (std::abs(k.norms.moments_k[k.order]) <= 1e-8)
    throw numeric_error("kernel '" + k.name + "': order-" + std::to_string(k.order) +
                        " moment vanishes");
}

inline KernelProfile make_profile(std::string name, std::function<double(double)> eval,
                                  std::function<double(double)> deriv, int order,
                                  std::optional<double> support_radius,
                                  double unbounded_cutoff = kUnboundedCutoff) {
  KernelProfile k;
  k.name = std::move(name);
  k.eval = std::move(eval);
  k.deriv = std::move(deriv);
  k.order = order;
  k.support_radius = support_radius;
  k.unbounded_cutoff = unbounded_cutoff;
  k.norms = compute_norms(k);
  validate_profile(k);
  return k;
}

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gauss_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

}  // namespace detail

/// Standard Gaussian kernel, order 2.
inline KernelProfile make_gaussian_kernel() {
  return detail::make_profile(
      "gaussian", [](double t) { return detail::gauss_pdf(t); },
      [](double t) { return -t * detail::gauss_pdf(t); }, 2, std::nullopt);
}

/// Biweight kernel (15/16)(1-t^2)^2 on [-1,1]; C^1 at the support edge.
inline KernelProfile make_biweight_kernel() {
  return detail::make_profile(
      "biweight",
      [](double t) {
        if (std::abs(t) > 1.0) return 0.0;
        const double u = 1.0 - t * t;
        return 0.9375 * u * u;
      },
      [](double t) {
        if (std::abs(t) > 1.0) return 0.0;
        return -3.75 * t * (1.0 - t * t);
      },
      2, 1.0);
}

/// Order-4 Gaussian kernel via the polynomial-multiplier scheme:
/// (3 - t^2)/2 * phi(t). Quadrature cutoff 9: the truncation boundary term
/// 2 A^5 K(A) of the fourth J/K moment identity stays below 1e-9 there,
/// which the |t| <= 8 window of the order-2 kernel does not guarantee.
inline KernelProfile make_gaussian4_kernel() {
  return detail::make_profile(
      "gaussian4",
      [](double t) { return 0.5 * (3.0 - t * t) * detail::gauss_pdf(t); },
      [](double t) { return -0.5 * t * (5.0 - t * t) * detail::gauss_pdf(t); }, 4,
      std::nullopt, 9.0);
}

/// Order-4 biweight kernel (105/64)(1 - 3t^2)(1 - t^2)^2 on [-1,1].
inline KernelProfile make_biweight4_kernel() {
  return detail::make_profile(
      "biweight4",
      [](double t) {
        if (std::abs(t) > 1.0) return 0.0;
        const double u = 1.0 - t * t;
        return (105.0 / 64.0) * (1.0 - 3.0 * t * t) * u * u;
      },
      [](double t) {
        if (std::abs(t) > 1.0) return 0.0;
        return -(105.0 / 32.0) * t * (1.0 - t * t) * (5.0 - 9.0 * t * t);
      },
      4, 1.0);
}

inline KernelProfile kernel_by_name(std::string_view name) {
  if (name == "gaussian") return make_gaussian_kernel();
  if (name == "biweight") return make_biweight_kernel();
  if (name == "gaussian4") return make_gaussian4_kernel();
  if (name == "biweight4") return make_biweight4_kernel();
  throw input_error("unknown kernel '" + std::string(name) +
                    "' (available: gaussian, biweight, gaussian4, biweight4)");
}

}  // namespace cdrodeo
