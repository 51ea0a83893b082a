#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/kernels.hpp"
#include "cdrodeo/marginal.hpp"
#include "cdrodeo/rng.hpp"
#include "cdrodeo/rodeo.hpp"
#include "cdrodeo/theory.hpp"

namespace cdrodeo {

// The five-dimensional benchmark distribution (d1 = 4, d2 = 1):
//   X1 ~ Uniform[-1,1],  X2,X3,X4 ~ iid N(0,1),  Y | X2 ~ Exponential(mean X2^2),
// all independences as stated. The conditional density is
//   f(x, y) = 1_{[-1,1]}(x1) x2^{-2} exp(-y / x2^2).

struct ExampleSpec {
  long n = 200000;
  std::uint64_t seed = 1;
};

/// Replication r of a spec draws from stream r; sample_example itself is
/// stream 0. Observation i consumes counters 8i..8i+4 (x1..x4, y).
inline Dataset sample_example_stream(const ExampleSpec& spec, std::uint64_t stream) {
  if (spec.n < 1) throw input_error("sample_example: n must be >= 1");
  const std::uint64_t key = stream_key(spec.seed, stream);
  std::vector<double> values(static_cast<std::size_t>(spec.n) * 5);
  for (long i = 0; i < spec.n; ++i) {
    const std::uint64_t base = static_cast<std::uint64_t>(i) * 8;
    double* row = values.data() + static_cast<std::size_t>(i) * 5;
    row[0] = 2.0 * uniform01(key, base) - 1.0;
    row[1] = normal_draw(key, base + 1);
    row[2] = normal_draw(key, base + 2);
    row[3] = normal_draw(key, base + 3);
    row[4] = exponential_draw(key, base + 4, row[1] * row[1]);
  }
  return make_dataset(std::move(values), static_cast<int>(spec.n), 4, 1);
}

inline Dataset sample_example(const ExampleSpec& spec) {
  return sample_example_stream(spec, 0);
}

/// The target conditional density of the benchmark, evaluated at w = (x, y).
inline double true_f(const QueryPoint& w) {
  if (w.w.size() != 5) throw input_error("true_f expects a 5-dimensional point");
  const double x1 = w.w[0], x2 = w.w[1], y = w.w[4];
  if (x2 == 0.0) throw input_error("true_f: degenerate at x2 = 0");
  if (std::abs(x1) > 1.0 || y < 0.0) return 0.0;
  const double s = x2 * x2;
  return std::exp(-y / s) / s;
}

/// The covariate marginal: (1/2) 1_{[-1,1]}(x1) phi(x2) phi(x3) phi(x4).
inline double true_marginal(std::span<const double> x) {
  if (x.size() != 4) throw input_error("true_marginal expects a 4-dimensional point");
  if (std::abs(x[0]) > 1.0) return 0.0;
  double v = 0.5;
  for (int j = 1; j < 4; ++j) v *= detail::gauss_pdf(x[j]);
  return v;
}

inline MarginalModel benchmark_marginal(const Dataset& data) {
  return marginal_known([](std::span<const double> x) { return true_marginal(x); }, data);
}

/// Oracle for the benchmark density at w = (0,1,0,0,1): on the initial
/// neighbourhood (half-width h0 * support radius, h0 = 1/log n) the density
/// varies only in x2 and y, with second partials -4/e and 1/e there. The
/// local supremum and the covariate-density infimum follow from monotonicity
/// of the closed forms over that box.
inline OracleDensity make_benchmark_oracle(long n, double kernel_support_radius) {
  if (n < 3) throw input_error("benchmark oracle requires n >= 3");
  const double h0 = 1.0 / std::log(static_cast<double>(n));
  const double half = h0 * kernel_support_radius;
  if (!(half < 1.0))
    throw input_error("benchmark oracle: neighbourhood reaches the x1 jump");

  OracleDensity oracle;
  oracle.d = 5;
  oracle.f = [](std::span<const double> u) {
    return true_f(QueryPoint{std::vector<double>(u.begin(), u.end())});
  };
  oracle.relevant = {1, 4};
  oracle.p = 2;
  const double inv_e = std::exp(-1.0);
  oracle.partials = {-4.0 * inv_e, inv_e};
  oracle.sup_f_local = inv_e / (1.0 - half);
  oracle.delta = 0.5 * detail::gauss_pdf(1.0 + half) * detail::gauss_pdf(half) *
                 detail::gauss_pdf(half);
  return oracle;
}

enum class WhichMarginal { known_true, unit };

struct ReplicationReport {
  int m = 0;
  int d = 0;
  std::vector<double> bandwidths;      // m x d, row-major
  std::vector<int> thetas;             // m x d
  std::vector<double> estimates;       // m
  std::vector<double> wall_ms;         // m
  std::vector<StopReason> stop_reasons;
  std::vector<std::uint64_t> kernel_evals;
  // per-component summaries over the m runs
  std::vector<double> h_median, h_q25, h_q75, h_min, h_max;
};

namespace detail {

inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CDRODEO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace detail

/// m independent replications of the benchmark: dataset r comes from stream
/// r of the seed, runs are embarrassingly parallel, and the report is a
/// deterministic ordered merge regardless of the thread count.
inline ReplicationReport replicate_runs(int m, const ExampleSpec& spec,
                                        const RodeoConfig& cfg, const QueryPoint& w,
                                        const KernelProfile& kernel,
                                        WhichMarginal which = WhichMarginal::known_true,
                                        int threads = 0) {
  if (m < 1) throw input_error("replicate_runs: m must be >= 1");
  const int d = 5;
  ReplicationReport report;
  report.m = m;
  report.d = d;
  report.bandwidths.resize(static_cast<std::size_t>(m) * d);
  report.thetas.resize(static_cast<std::size_t>(m) * d);
  report.estimates.resize(m);
  report.wall_ms.resize(m);
  report.stop_reasons.resize(m);
  report.kernel_evals.resize(m);

  const int n_threads = std::min(detail::resolve_threads(threads), m);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    try {
      while (!failed.load()) {
        const int r = next.fetch_add(1);
        if (r >= m) return;
        const auto start = std::chrono::steady_clock::now();
        Dataset data = sample_example_stream(spec, static_cast<std::uint64_t>(r));
        MarginalModel marginal = which == WhichMarginal::known_true
                                     ? benchmark_marginal(data)
                                     : marginal_unit(data);
        RodeoResult run = run_cdrodeo(w, data, marginal, kernel, cfg);
        const auto end = std::chrono::steady_clock::now();
        for (int j = 0; j < d; ++j) {
          report.bandwidths[static_cast<std::size_t>(r) * d + j] = run.h_final.h[j];
          report.thetas[static_cast<std::size_t>(r) * d + j] = run.theta[j];
        }
        report.estimates[r] = run.estimate;
        report.wall_ms[r] =
            std::chrono::duration<double, std::milli>(end - start).count();
        report.stop_reasons[r] = run.stop_reason;
        report.kernel_evals[r] = run.kernel_evals;
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (int j = 0; j < d; ++j) {
    std::vector<double> column(m);
    for (int r = 0; r < m; ++r)
      column[r] = report.bandwidths[static_cast<std::size_t>(r) * d + j];
    std::sort(column.begin(), column.end());
    report.h_min.push_back(column.front());
    report.h_max.push_back(column.back());
    report.h_q25.push_back(detail::quantile_sorted(column, 0.25));
    report.h_median.push_back(detail::quantile_sorted(column, 0.5));
    report.h_q75.push_back(detail::quantile_sorted(column, 0.75));
  }
  return report;
}

struct SlicePoint {
  double coordinate;
  double estimate;
  std::optional<double> truth;  // omitted where the closed form degenerates
};

/// Estimator-versus-truth slice along one coordinate, every grid point run on
/// one shared n-sample with the other coordinates pinned at the base point.
/// Axis is 0-based.
inline std::vector<SlicePoint> slice_curves(const ExampleSpec& spec,
                                            const RodeoConfig& cfg,
                                            const QueryPoint& base_point, int axis,
                                            std::span<const double> grid,
                                            const KernelProfile& kernel) {
  if (grid.empty()) throw input_error("slice_curves: grid must be nonempty");
  if (axis < 0 || axis >= 5) throw input_error("slice_curves: axis out of range");
  Dataset data = sample_example(spec);
  MarginalModel marginal = benchmark_marginal(data);

  std::vector<SlicePoint> out;
  out.reserve(grid.size());
  for (double g : grid) {
    QueryPoint w = base_point;
    w.w[axis] = g;
    RodeoResult run = run_cdrodeo(w, data, marginal, kernel, cfg);
    SlicePoint pt{g, run.estimate, std::nullopt};
    if (!(axis == 1 && g == 0.0)) pt.truth = true_f(w);
    out.push_back(pt);
  }
  return out;
}

}  // namespace cdrodeo
