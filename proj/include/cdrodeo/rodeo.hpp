#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/estimator.hpp"
#include "cdrodeo/kernels.hpp"
#include "cdrodeo/marginal.hpp"

namespace cdrodeo {

struct RodeoConfig {
  double beta = 0.95;           // bandwidth decreasing factor, in (0,1)
  double h0 = 0.4;              // initial bandwidth per component
  double a = 1.1;               // threshold exponent (a = 1 allowed, flagged)
  long max_iterations = 10000;  // safety cap for pathological configurations
  bool simultaneous_tests = false;  // batch mode for sensitivity studies
};

inline void validate(const RodeoConfig& cfg) {
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw input_error("beta must be in (0,1)");
  if (!(cfg.h0 > 0.0)) throw input_error("h0 must be positive");
  if (cfg.a < 1.0) throw input_error("threshold exponent a must be >= 1");
  if (cfg.max_iterations < 1) throw input_error("max_iterations must be >= 1");
}

/// The loop guard (log n)/n on the bandwidth product.
inline double product_floor(long n) {
  if (n < 3) throw input_error("product_floor requires n >= 3");
  return std::log(static_cast<double>(n)) / static_cast<double>(n);
}

enum class StopReason { all_deactivated, product_floor, safety_cap };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::all_deactivated: return "all_deactivated";
    case StopReason::product_floor: return "product_floor";
    case StopReason::safety_cap: return "safety_cap";
  }
  return "unknown";
}

/// One threshold test: component j examined during `iteration` at bandwidth
/// value h_j (the vector state is recoverable by replaying decisions).
struct TraceRecord {
  int iteration;
  int component;  // 0-based
  double h_j;
  double z;
  double lambda;
  bool shrink;  // |z| >= lambda
};

struct IterationSnapshot {
  int iteration;
  std::vector<int> active_before;
  std::vector<double> h_after;
};

struct RodeoTrace {
  std::vector<TraceRecord> records;
  std::vector<IterationSnapshot> iterations;
};

struct RodeoResult {
  Bandwidth h_final;
  std::vector<int> theta;  // deactivation iteration; h_final[j] = h0 * beta^theta[j]
  double estimate = 0.0;
  StopReason stop_reason = StopReason::all_deactivated;
  RodeoTrace trace;
  std::uint64_t kernel_evals = 0;
  int iterations_run = 0;
  bool a_equals_one = false;  // a == 1 is outside the proved regime
};

/// The greedy bandwidth-selection loop. Starts every component at h0, and in
/// each iteration visits the active components in ascending index order,
/// recomputing Z and lambda with the current bandwidth: a shrink of h_j is
/// visible to the test of the next component within the same iteration.
/// |Z| >= lambda shrinks h_j by beta, otherwise j is deactivated for good.
/// The loop stops when no component is active or the bandwidth product drops
/// below (log n)/n; the guard is checked before each full iteration, so the
/// final product is at least beta^d (log n)/n.
inline RodeoResult run_cdrodeo(const QueryPoint& w, const Dataset& data,
                               const MarginalModel& marginal, const KernelProfile& kernel,
                               const RodeoConfig& cfg) {
  validate(cfg);
  if (data.n < 3) throw input_error("run_cdrodeo requires n >= 3");
  detail::require_cache(marginal, data, "run_cdrodeo");
  if (static_cast<int>(w.w.size()) != data.d)
    throw input_error("run_cdrodeo: query point dimension mismatch");

  const int d = data.d;
  const double floor = product_floor(data.n);

  RodeoResult result;
  result.a_equals_one = cfg.a == 1.0;
  result.theta.assign(d, 0);
  Bandwidth h = make_bandwidth(std::vector<double>(d, cfg.h0));
  std::vector<int> active(d);
  for (int j = 0; j < d; ++j) active[j] = j;

  EvalStats stats;
  int t = 0;
  StopReason stop = StopReason::safety_cap;
  while (true) {
    if (active.empty()) {
      stop = StopReason::all_deactivated;
      break;
    }
    if (h.product() < floor) {
      stop = StopReason::product_floor;
      break;
    }
    if (t >= cfg.max_iterations) {
      stop = StopReason::safety_cap;
      break;
    }

    IterationSnapshot snap;
    snap.iteration = t;
    snap.active_before = active;

    std::vector<int> still_active;
    still_active.reserve(active.size());

    if (cfg.simultaneous_tests) {
      // Batch mode: every component of this iteration is tested against the
      // bandwidth as it stood when the iteration began.
      std::vector<TraceRecord> pending;
      const Bandwidth h_start = h;
      for (int j : active) {
        const double z = z_statistic(w, h_start, j, data, marginal, kernel, &stats);
        if (!std::isfinite(z))
          throw numeric_error("non-finite Z statistic for component " +
                              std::to_string(j) + " at iteration " + std::to_string(t));
        const double lambda = threshold(h_start, j, data.n, cfg.a, kernel.norms, d);
        pending.push_back({t, j, h_start.h[j], z, lambda, std::abs(z) >= lambda});
      }
      for (const TraceRecord& rec : pending) {
        result.trace.records.push_back(rec);
        if (rec.shrink) {
          h.h[rec.component] *= cfg.beta;
          ++result.theta[rec.component];
          still_active.push_back(rec.component);
        }
      }
    } else {
      for (int j : active) {
        const double z = z_statistic(w, h, j, data, marginal, kernel, &stats);
        if (!std::isfinite(z))
          throw numeric_error("non-finite Z statistic for component " +
                              std::to_string(j) + " at iteration " + std::to_string(t) +
                              " (corrupt marginal cache?)");
        const double lambda = threshold(h, j, data.n, cfg.a, kernel.norms, d);
        const bool shrink = std::abs(z) >= lambda;
        result.trace.records.push_back({t, j, h.h[j], z, lambda, shrink});
        if (shrink) {
          h.h[j] *= cfg.beta;
          ++result.theta[j];
          still_active.push_back(j);
        }
      }
    }

    active = std::move(still_active);
    snap.h_after = h.h;
    result.trace.iterations.push_back(std::move(snap));
    ++t;
  }

  result.iterations_run = t;
  result.stop_reason = stop;
  result.h_final = h;
  result.estimate = estimate_density(w, h, data, marginal, kernel, &stats);
  result.kernel_evals = stats.kernel_evals;
  return result;
}

}  // namespace cdrodeo
