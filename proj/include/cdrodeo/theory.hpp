#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/kernels.hpp"

namespace cdrodeo {

/// Oracle knowledge of the target density around the query point, available
/// only for synthetic examples. Everything here is supplied analytically;
/// nothing is estimated from data.
struct OracleDensity {
  int d = 0;
  std::function<double(std::span<const double>)> f;
  std::vector<int> relevant;      // 0-based components the density varies in
  int p = 2;                      // regularity / kernel order
  std::vector<double> partials;   // d_j^p f(w) for each j in `relevant`
  double sup_f_local = 0.0;       // sup of f over the initial neighbourhood
  double delta = 0.0;             // inf of f_X over the initial neighbourhood
};

/// The stopping-iteration bounds of the selected-bandwidth set: relevant
/// exponents land in {floor(tau_n)+1, ..., floor(T_n)} with high probability,
/// irrelevant exponents stay at 0. tau_n is routinely negative at desk
/// scales; raw values are reported, nothing is clamped.
struct TheoryDiagnostics {
  double c_tau = 0.0;
  double c_T = 0.0;
  double tau_n = 0.0;
  double T_n = 0.0;
  int theta_lo = 0;  // floor(tau_n) + 1
  int theta_hi = 0;  // floor(T_n)
  bool interval_empty = false;
};

/// Computes C_tau, C_T, tau_n and T_n for the given oracle and tuning.
/// The constants follow the concentration analysis: both use the minimum of
/// |d_j^p f(w)| over the relevant components.
inline TheoryDiagnostics compute_bounds(const OracleDensity& oracle, long n, double beta,
                                        double a, const KernelNorms& norms) {
  if (oracle.relevant.empty()) throw input_error("compute_bounds: relevant set is empty");
  if (oracle.partials.size() != oracle.relevant.size())
    throw input_error("compute_bounds: one partial derivative per relevant component");
  const int p = oracle.p;
  if (p < 1 || p >= static_cast<int>(norms.moments_k.size()))
    throw input_error("compute_bounds: regularity p out of range for kernel moments");
  const double mom_p = norms.moments_k[p];
  if (std::abs(mom_p) <= 1e-8)
    throw input_error("compute_bounds: kernel order mismatch, integral of t^p K vanishes");
  if (!(beta > 0.0 && beta < 1.0)) throw input_error("compute_bounds: beta in (0,1)");
  if (n < 3) throw input_error("compute_bounds: n >= 3");

  double min_abs = std::abs(oracle.partials[0]);
  double max_abs = min_abs;
  for (double v : oracle.partials) {
    if (!(std::abs(v) > 0.0))
      throw input_error("compute_bounds: relevant partial derivative vanishes");
    min_abs = std::min(min_abs, std::abs(v));
    max_abs = std::max(max_abs, std::abs(v));
  }

  double c_lambda = 4.0 * norms.j_l2;
  for (int k = 1; k < oracle.d; ++k) c_lambda *= norms.k_l2;

  double factorial = 1.0;
  for (int i = 2; i <= p - 1; ++i) factorial *= i;

  const int r = static_cast<int>(oracle.relevant.size());
  const double log_n = std::log(static_cast<double>(n));
  const double log_inv_beta = std::log(1.0 / beta);

  TheoryDiagnostics diag;
  const double c_tau_root = 4.0 * factorial * c_lambda / (min_abs * std::abs(mom_p));
  diag.c_tau = c_tau_root * c_tau_root;
  const double c_T_root = min_abs / (24.0 * max_abs);
  diag.c_T = c_T_root * c_T_root;
  diag.tau_n = std::log(static_cast<double>(n) /
                        (diag.c_tau * std::pow(log_n, 2 * p + oracle.d + a))) /
               ((2 * p + r) * log_inv_beta);
  diag.T_n = diag.tau_n + std::log(1.0 / diag.c_T) / ((2 * p + 1) * log_inv_beta);
  diag.theta_lo = static_cast<int>(std::floor(diag.tau_n)) + 1;
  diag.theta_hi = static_cast<int>(std::floor(diag.T_n));
  diag.interval_empty = diag.theta_hi < diag.theta_lo;
  return diag;
}

/// Membership test for the high-probability bandwidth set: every component
/// must equal beta^theta / log n with theta = 0 for irrelevant components and
/// theta in [theta_lo, theta_hi] for relevant ones. The exponent is recovered
/// as log(h_j log n)/log beta and must sit within 1e-9 (relative) of an
/// integer.
inline bool in_Hhp(const Bandwidth& h, const TheoryDiagnostics& diag,
                   std::span<const int> relevant, long n, double beta) {
  const double log_n = std::log(static_cast<double>(n));
  const double log_beta = std::log(beta);
  for (int j = 0; j < static_cast<int>(h.h.size()); ++j) {
    const double theta_raw = std::log(h.h[j] * log_n) / log_beta;
    const double theta_rounded = std::round(theta_raw);
    if (std::abs(theta_raw - theta_rounded) > 1e-9 * std::max(1.0, std::abs(theta_raw)))
      return false;
    const long theta = static_cast<long>(theta_rounded);
    const bool is_relevant =
        std::find(relevant.begin(), relevant.end(), j) != relevant.end();
    if (is_relevant) {
      if (diag.interval_empty) return false;
      if (theta < diag.theta_lo || theta > diag.theta_hi) return false;
    } else {
      if (theta != 0) return false;
    }
  }
  return true;
}

}  // namespace cdrodeo
