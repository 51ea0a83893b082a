#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cdrodeo/bench.hpp"
#include "cdrodeo/quadrature.hpp"
#include "test_util.hpp"

using namespace cdrodeo;

TEST(TrueDensity, ClosedFormValues) {
  EXPECT_NEAR(true_f(make_query_point({0, 1, 0, 0, 1})), std::exp(-1.0), 1e-15);
  EXPECT_EQ(true_f(make_query_point({2, 1, 0, 0, 1})), 0.0);
  EXPECT_NEAR(true_f(make_query_point({0, 2, 0, 0, 0})), 0.25, 1e-15);
  EXPECT_EQ(true_f(make_query_point({0, 1, 3, -2, -0.5})), 0.0);  // y < 0
  EXPECT_THROW(true_f(make_query_point({0, 0, 0, 0, 1})), input_error);
}

TEST(TrueDensity, IntegratesToOneOverY) {
  for (std::vector<double> x : {std::vector<double>{0, 1, 0, 0},
                                std::vector<double>{0.5, 1.7, 2.0, -1.0},
                                std::vector<double>{-0.9, 0.4, 0.0, 3.0}}) {
    const double s = x[1] * x[1];
    const double mass = integrate(
        [&](double y) {
          return true_f(make_query_point({x[0], x[1], x[2], x[3], y}));
        },
        0.0, 50.0 * s, 1e-8);
    EXPECT_NEAR(mass, 1.0, 1e-6);
  }
}

TEST(TrueMarginal, ClosedFormValues) {
  const std::vector<double> x{0, 1, 0, 0};
  EXPECT_NEAR(true_marginal(x), 0.0192554186, 1e-9);
  const std::vector<double> outside{1.5, 0, 0, 0};
  EXPECT_EQ(true_marginal(outside), 0.0);
}

TEST(TrueMarginal, MonteCarloNormalization) {
  // Uniform importance draws over [-1,1] x [-4,4]^3 (tail mass ~ 2e-4).
  const long N = 2000000;
  const std::uint64_t key = stream_key(123, 0);
  const double volume = 2.0 * 8.0 * 8.0 * 8.0;
  std::vector<double> vals;
  vals.reserve(N);
  for (long i = 0; i < N; ++i) {
    const std::uint64_t base = static_cast<std::uint64_t>(i) * 4;
    const std::vector<double> x{2.0 * uniform01(key, base) - 1.0,
                                8.0 * uniform01(key, base + 1) - 4.0,
                                8.0 * uniform01(key, base + 2) - 4.0,
                                8.0 * uniform01(key, base + 3) - 4.0};
    vals.push_back(true_marginal(x));
  }
  const double integral = volume * pairwise_sum(vals) / N;
  EXPECT_NEAR(integral, 1.0, 0.01);
}

TEST(SampleExample, DistributionalSanity) {
  Dataset data = sample_example(ExampleSpec{200000, 99});
  ASSERT_EQ(data.n, 200000);
  ASSERT_EQ(data.d1, 4);
  ASSERT_EQ(data.d2, 1);

  long positive_x3 = 0;
  double bin_sum = 0.0;
  long bin_count = 0;
  for (int i = 0; i < data.n; ++i) {
    EXPECT_LE(std::abs(data.at(i, 0)), 1.0);
    EXPECT_GE(data.at(i, 4), 0.0);
    if (data.at(i, 2) > 0.0) ++positive_x3;
    const double x2 = data.at(i, 1);
    if (x2 >= 0.95 && x2 <= 1.05) {
      bin_sum += data.at(i, 4);
      ++bin_count;
    }
  }
  const double frac = static_cast<double>(positive_x3) / data.n;
  EXPECT_GE(frac, 0.495);
  EXPECT_LE(frac, 0.505);
  ASSERT_GT(bin_count, 1000);
  const double bin_mean = bin_sum / bin_count;  // E[Y | X2 ~ 1] = X2^2 ~ 1
  EXPECT_GE(bin_mean, 0.9);
  EXPECT_LE(bin_mean, 1.1);
}

TEST(SampleExample, BitReproducible) {
  Dataset a = sample_example(ExampleSpec{5000, 7});
  Dataset b = sample_example(ExampleSpec{5000, 7});
  EXPECT_EQ(a.values, b.values);
  Dataset c = sample_example(ExampleSpec{5000, 8});
  EXPECT_NE(a.values, c.values);
  // Streams are distinct replications of the same spec.
  Dataset s1 = sample_example_stream(ExampleSpec{5000, 7}, 1);
  EXPECT_NE(a.values, s1.values);
}

TEST(ReplicateRuns, SingleRunWrapsRunCdrodeo) {
  const ExampleSpec spec{3000, 17};
  RodeoConfig cfg;
  const KernelProfile kernel = make_gaussian_kernel();
  QueryPoint w = make_query_point({0, 1, 0, 0, 1});
  ReplicationReport report = replicate_runs(1, spec, cfg, w, kernel);

  Dataset data = sample_example_stream(spec, 0);
  MarginalModel m = benchmark_marginal(data);
  RodeoResult single = run_cdrodeo(w, data, m, kernel, cfg);
  ASSERT_EQ(report.m, 1);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(report.bandwidths[j], single.h_final.h[j]);
    EXPECT_EQ(report.thetas[j], single.theta[j]);
  }
  EXPECT_EQ(report.estimates[0], single.estimate);
  EXPECT_EQ(report.stop_reasons[0], single.stop_reason);
}

TEST(ReplicateRuns, DeterministicAcrossThreadCounts) {
  const ExampleSpec spec{2000, 23};
  RodeoConfig cfg;
  const KernelProfile kernel = make_gaussian_kernel();
  QueryPoint w = make_query_point({0, 1, 0, 0, 1});
  ReplicationReport serial = replicate_runs(6, spec, cfg, w, kernel,
                                            WhichMarginal::known_true, 1);
  ReplicationReport parallel = replicate_runs(6, spec, cfg, w, kernel,
                                              WhichMarginal::known_true, 3);
  EXPECT_EQ(serial.bandwidths, parallel.bandwidths);
  EXPECT_EQ(serial.thetas, parallel.thetas);
  EXPECT_EQ(serial.estimates, parallel.estimates);
  for (int j = 0; j < 5; ++j) EXPECT_LE(serial.h_max[j], cfg.h0);
}

TEST(ReplicateRuns, PropagatesWorkerFailures) {
  // n = 2 trips the selection loop's n >= 3 precondition inside the workers.
  RodeoConfig cfg;
  QueryPoint w = make_query_point({0, 1, 0, 0, 1});
  EXPECT_THROW(replicate_runs(4, ExampleSpec{2, 1}, cfg, w, make_gaussian_kernel(),
                              WhichMarginal::known_true, 2),
               input_error);
}

TEST(SliceCurves, TruthColumnFollowsClosedForm) {
  const ExampleSpec spec{500, 31};
  RodeoConfig cfg;
  const KernelProfile kernel = make_gaussian_kernel();
  QueryPoint base = make_query_point({0, 1, 0, 0, 1});

  const std::vector<double> ygrid{0.5, 1.0, 2.0};
  std::vector<SlicePoint> along_y = slice_curves(spec, cfg, base, 4, ygrid, kernel);
  ASSERT_EQ(along_y.size(), 3u);
  EXPECT_NEAR(*along_y[0].truth, std::exp(-0.5), 1e-12);
  EXPECT_NEAR(*along_y[1].truth, std::exp(-1.0), 1e-12);
  EXPECT_NEAR(*along_y[2].truth, std::exp(-2.0), 1e-12);

  const std::vector<double> x1grid{-2.0, 0.0, 2.0};
  std::vector<SlicePoint> along_x1 = slice_curves(spec, cfg, base, 0, x1grid, kernel);
  EXPECT_EQ(*along_x1[0].truth, 0.0);
  EXPECT_NEAR(*along_x1[1].truth, std::exp(-1.0), 1e-12);
  EXPECT_EQ(*along_x1[2].truth, 0.0);

  // The closed form degenerates at x2 = 0: truth omitted, estimate kept.
  const std::vector<double> x2grid{0.0, 1.0};
  std::vector<SlicePoint> along_x2 = slice_curves(spec, cfg, base, 1, x2grid, kernel);
  EXPECT_FALSE(along_x2[0].truth.has_value());
  EXPECT_TRUE(std::isfinite(along_x2[0].estimate));
  EXPECT_TRUE(along_x2[1].truth.has_value());
}

TEST(SliceCurves, StableAlongIrrelevantAxis) {
  // f is constant in x3; estimates at neighbouring x3 values stay close.
  const ExampleSpec spec{200000, 41};
  RodeoConfig cfg;
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  std::vector<SlicePoint> pts =
      slice_curves(spec, cfg, make_query_point({0, 1, 0, 0, 1}), 2, grid,
                   make_gaussian_kernel());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      EXPECT_LT(std::abs(pts[i].estimate - pts[j].estimate), 0.1);
}

TEST(BenchmarkMarginalModel, MatchesTrueMarginal) {
  Dataset data = sample_example(ExampleSpec{100, 3});
  MarginalModel m = benchmark_marginal(data);
  for (int i = 0; i < data.n; ++i)
    EXPECT_EQ(m.cached_values[i], true_marginal(data.x_part(i)));
}
