#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "cdrodeo/bench.hpp"
#include "cdrodeo/csv.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace cdrodeo;
using nlohmann::json;
using testutil::run_cli;
using testutil::temp_path;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST(Csv, RoundTripIsBitExact) {
  Dataset original = sample_example(ExampleSpec{100, 12});
  const std::string path = temp_path("roundtrip.csv");
  write_dataset_csv(path, original);
  Dataset loaded = load_csv(path, 4);
  EXPECT_EQ(loaded.n, original.n);
  EXPECT_EQ(loaded.d1, 4);
  EXPECT_EQ(loaded.values, original.values);
  std::remove(path.c_str());
}

TEST(Csv, ThreeColumnsWithTwoCovariates) {
  const std::string path = temp_path("threecol.csv");
  write_file(path, "a,b,c\n1,2,3\n4,5,6\n");
  Dataset ds = load_csv(path, 2);
  EXPECT_EQ(ds.d, 3);
  EXPECT_EQ(ds.d2, 1);
  EXPECT_EQ(ds.n, 2);
  EXPECT_EQ(ds.at(1, 2), 6.0);
  std::remove(path.c_str());
}

TEST(Csv, NanCellRejectedWithLocation) {
  const std::string path = temp_path("nan.csv");
  write_file(path, "x1,x2,y\n1,2,3\n4,NaN,6\n");
  try {
    load_csv(path, 2);
    FAIL() << "expected rejection";
  } catch (const input_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x2"), std::string::npos) << msg;
  }
  std::remove(path.c_str());
}

TEST(Csv, MalformedCellsListedUpToTen) {
  std::string body = "x,y\n";
  for (int i = 0; i < 15; ++i) body += "bad,1\n";
  const std::string path = temp_path("bad.csv");
  write_file(path, body);
  try {
    load_csv(path, 1);
    FAIL() << "expected rejection";
  } catch (const input_error& e) {
    const std::string msg = e.what();
    size_t count = 0, pos = 0;
    while ((pos = msg.find("non-finite", pos)) != std::string::npos) {
      ++count;
      ++pos;
    }
    EXPECT_GE(count, 1u);
    EXPECT_LE(count, 10u);
  }
  std::remove(path.c_str());
}

TEST(Csv, TooManyCovariateColumnsRejected) {
  const std::string path = temp_path("wide.csv");
  write_file(path, "x1,x2\n1,2\n");
  EXPECT_THROW(load_csv(path, 2), input_error);
  EXPECT_THROW(load_csv(path, 5), input_error);
  std::remove(path.c_str());
}

TEST(Cli, SimulateMatchesLibraryGenerator) {
  const std::string path = temp_path("sim.csv");
  testutil::CliResult res = run_cli("simulate --n 50 --seed 3 --out " + path);
  ASSERT_EQ(res.exit_code, 0) << res.output;
  Dataset loaded = load_csv(path, 4);
  Dataset expected = sample_example(ExampleSpec{50, 3});
  EXPECT_EQ(loaded.values, expected.values);
  std::remove(path.c_str());
}

TEST(Cli, RodeoJsonSchemaAndGoldenValues) {
  const std::string data_path = temp_path("rodeo_data.csv");
  const std::string out_path = temp_path("rodeo_out.json");
  const std::string trace_path = temp_path("rodeo_trace.csv");
  ASSERT_EQ(run_cli("simulate --n 4000 --seed 21 --out " + data_path).exit_code, 0);
  testutil::CliResult res =
      run_cli("rodeo --data " + data_path + " --d1 4 --point 0,1,0,0,1 --preset paper-sim "
              "--trace " + trace_path + " --out " + out_path);
  ASSERT_EQ(res.exit_code, 0) << res.output;

  json out = json::parse(testutil::read_file(out_path));
  for (const char* key :
       {"h_final", "theta", "estimate", "stop_reason", "config", "kernel_evals"})
    EXPECT_TRUE(out.contains(key)) << key;
  EXPECT_EQ(out["h_final"].size(), 5u);
  EXPECT_EQ(out["theta"].size(), 5u);
  EXPECT_EQ(out["config"]["kernel"], "gaussian");
  EXPECT_EQ(out["config"]["h0"], 0.4);
  EXPECT_EQ(out["config"]["beta"], 0.95);
  EXPECT_EQ(out["config"]["a"], 1.1);

  // Golden comparison against an in-process run on the same data.
  Dataset data = sample_example(ExampleSpec{4000, 21});
  MarginalModel m = benchmark_marginal(data);
  RodeoResult expected = run_cdrodeo(make_query_point({0, 1, 0, 0, 1}), data, m,
                                     make_gaussian_kernel(), RodeoConfig{});
  EXPECT_EQ(out["estimate"].get<double>(), expected.estimate);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(out["h_final"][j].get<double>(), expected.h_final.h[j]);
    EXPECT_EQ(out["theta"][j].get<int>(), expected.theta[j]);
  }
  EXPECT_EQ(out["stop_reason"].get<std::string>(), to_string(expected.stop_reason));

  const std::string trace = testutil::read_file(trace_path);
  EXPECT_NE(trace.find("iter,j,h_j,Z,lambda,decision"), std::string::npos);
  EXPECT_TRUE(trace.find("shrink") != std::string::npos ||
              trace.find("deactivate") != std::string::npos);
  std::remove(data_path.c_str());
  std::remove(out_path.c_str());
  std::remove(trace_path.c_str());
}

TEST(Cli, EstimateBypassesRodeoAndClipsOnRequest) {
  const std::string data_path = temp_path("est_data.csv");
  write_file(data_path, "y\n2.3999999999999999\n");
  testutil::CliResult res = run_cli("estimate --data " + data_path +
                                    " --d1 0 --point 0 --h 1 --kernel gaussian4");
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json out = json::parse(res.output);
  EXPECT_LT(out["estimate"].get<double>(), 0.0);  // signed, not clipped

  testutil::CliResult clipped = run_cli("estimate --data " + data_path +
                                        " --d1 0 --point 0 --h 1 --kernel gaussian4 "
                                        "--clip-zero");
  json cout_ = json::parse(clipped.output);
  EXPECT_EQ(cout_["estimate"].get<double>(), 0.0);
  EXPECT_LT(cout_["estimate_raw"].get<double>(), 0.0);
  std::remove(data_path.c_str());
}

TEST(Cli, DiagEmitsFiniteTheoryFields) {
  testutil::CliResult res = run_cli("diag --preset paper-example --n 200000");
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json out = json::parse(res.output, nullptr, /*allow_exceptions=*/true,
                         /*ignore_comments=*/false);
  for (const char* key : {"tau_n", "T_n", "c_tau", "c_T"}) {
    ASSERT_TRUE(out.contains(key));
    EXPECT_TRUE(std::isfinite(out[key].get<double>())) << key;
  }
  EXPECT_EQ(out["config"]["kernel"], "biweight");
}

TEST(Cli, KdeMarginalViaSampleSplit) {
  const std::string data_path = temp_path("kde_data.csv");
  const std::string out_path = temp_path("kde_out.json");
  ASSERT_EQ(run_cli("simulate --n 3000 --seed 8 --out " + data_path).exit_code, 0);
  testutil::CliResult res =
      run_cli("rodeo --data " + data_path + " --d1 4 --point 0,1,0,0,1 "
              "--marginal kde --split-aux 2 --kernel gaussian --out " + out_path);
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json out = json::parse(testutil::read_file(out_path));
  EXPECT_EQ(out["config"]["marginal"]["marginal"], "kde");
  EXPECT_EQ(out["config"]["marginal"]["split_aux"].get<double>(), 2.0);
  EXPECT_LT(out["config"]["n"].get<int>(), 3000);  // main shrank by the split
  std::remove(data_path.c_str());
  std::remove(out_path.c_str());
}

TEST(Cli, PresetOverridesAndTheoryBandwidth) {
  const std::string data_path = temp_path("preset_data.csv");
  ASSERT_EQ(run_cli("simulate --n 4000 --seed 2 --out " + data_path).exit_code, 0);

  // Explicit flags win over the preset; the echo shows the resolved values.
  testutil::CliResult res =
      run_cli("rodeo --data " + data_path + " --d1 4 --point 0,1,0,0,1 "
              "--preset paper-sim --h0 0.3");
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json out = json::parse(res.output);
  EXPECT_EQ(out["config"]["h0"].get<double>(), 0.3);
  EXPECT_EQ(out["config"]["kernel"], "gaussian");

  // The theory preset resolves h0 = 1/log n from the data and swaps to the
  // compactly supported kernel.
  testutil::CliResult theory =
      run_cli("rodeo --data " + data_path + " --d1 4 --point 0,1,0,0,1 "
              "--preset paper-theory");
  ASSERT_EQ(theory.exit_code, 0) << theory.output;
  json tout = json::parse(theory.output);
  EXPECT_NEAR(tout["config"]["h0"].get<double>(), 1.0 / std::log(4000.0), 1e-15);
  EXPECT_EQ(tout["config"]["kernel"], "biweight");
  std::remove(data_path.c_str());
}

TEST(Cli, KdeMarginalViaAuxCsv) {
  const std::string data_path = temp_path("auxmain.csv");
  const std::string aux_path = temp_path("auxaux.csv");
  ASSERT_EQ(run_cli("simulate --n 500 --seed 4 --out " + data_path).exit_code, 0);
  // Auxiliary covariate sample: the x-part of an independent draw.
  Dataset big = sample_example(ExampleSpec{2000, 99});
  std::ofstream aux(aux_path);
  aux << "x1,x2,x3,x4\n";
  for (int i = 0; i < big.n; ++i)
    aux << big.at(i, 0) << "," << big.at(i, 1) << "," << big.at(i, 2) << ","
        << big.at(i, 3) << "\n";
  aux.close();
  testutil::CliResult res =
      run_cli("rodeo --data " + data_path + " --d1 4 --point 0,1,0,0,1 "
              "--marginal kde --aux-csv " + aux_path + " --c-exponent 1.5");
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json out = json::parse(res.output);
  EXPECT_EQ(out["config"]["marginal"]["aux_csv"], aux_path);
  EXPECT_EQ(out["config"]["marginal"]["c_exponent"].get<double>(), 1.5);
  std::remove(data_path.c_str());
  std::remove(aux_path.c_str());
}

TEST(Cli, Fig1SmallRun) {
  const std::string out_path = temp_path("fig1.csv");
  testutil::CliResult res =
      run_cli("reproduce-fig1 --n 2000 --m 3 --seed 5 --out " + out_path);
  ASSERT_EQ(res.exit_code, 0) << res.output;
  json summary = json::parse(res.output);
  EXPECT_TRUE(summary.contains("fraction_theta3_theta4_zero"));
  EXPECT_EQ(summary["median_h"].size(), 5u);

  const std::string csv = testutil::read_file(out_path);
  EXPECT_NE(csv.find("# config:"), std::string::npos);
  EXPECT_NE(csv.find("run,h1,h2,h3,h4,h5,theta1"), std::string::npos);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  EXPECT_EQ(lines, 5);  // comment + header + 3 runs
  std::remove(out_path.c_str());
}

TEST(Cli, Fig2SmallRun) {
  const std::string out_path = temp_path("fig2.csv");
  testutil::CliResult res = run_cli(
      "reproduce-fig2 --n 1000 --seed 5 --axis 5 --grid 0.5,1,2 --out " + out_path);
  ASSERT_EQ(res.exit_code, 0) << res.output;
  CsvTable table = load_csv_table(out_path, /*allow_empty_cells=*/true);
  ASSERT_EQ(table.columns.size(), 3u);
  EXPECT_EQ(table.columns[2], "truth");
  ASSERT_EQ(table.rows, 3);
  EXPECT_NEAR(table.values[2], std::exp(-0.5), 1e-12);
  EXPECT_NEAR(table.values[5], std::exp(-1.0), 1e-12);
  EXPECT_NEAR(table.values[8], std::exp(-2.0), 1e-12);
  std::remove(out_path.c_str());
}

TEST(Cli, BadInputsExitOne) {
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("rodeo --no-such-flag").exit_code, 1);
  EXPECT_EQ(run_cli("rodeo --data /nonexistent.csv --d1 4 --point 0,1,0,0,1 "
                    "--marginal known:one").exit_code, 1);
  EXPECT_EQ(run_cli("diag --preset bogus --n 1000").exit_code, 1);
  testutil::CliResult help = run_cli("--help");
  EXPECT_EQ(help.exit_code, 0);
}
