// cdrodeo command line: dataset ingestion, bandwidth selection, theory
// diagnostics and the figure-data emitters. JSON for single results, CSV for
// tabular outputs; every artifact embeds the fully resolved configuration.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdrodeo/cdrodeo.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace cdrodeo;

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || !std::isfinite(v))
      throw input_error(std::string(what) + ": cannot parse '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw input_error(std::string(what) + ": empty list");
  return out;
}

/// Grids are either comma lists or lo:hi:count ranges.
std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_number_list(text, "--grid");
  double lo, hi;
  int count;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1)
    throw input_error("--grid: expected lo:hi:count, got '" + text + "'");
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out << text << "\n";
}

struct MarginalChoice {
  std::string spec = "";  // known:benchmark | known:one | kde
  std::string aux_csv = "";
  double split_aux = 0.0;  // c' > 1 enables splitting the main sample
  double c_exponent = 2.0;
  std::string floor_rule = "paper";
};

json marginal_config_json(const MarginalChoice& mc) {
  json j{{"marginal", mc.spec}};
  if (mc.spec == "kde") {
    j["c_exponent"] = mc.c_exponent;
    j["floor"] = mc.floor_rule;
    if (!mc.aux_csv.empty()) j["aux_csv"] = mc.aux_csv;
    if (mc.split_aux > 0.0) j["split_aux"] = mc.split_aux;
  }
  return j;
}

/// Builds the covariate-marginal plug-in. The kde path either consumes an
/// explicit auxiliary CSV or splits the main sample, keeping the aux part
/// independent of the rows used for estimation; in the split case the split
/// exponent doubles as the bandwidth exponent c.
MarginalModel resolve_marginal(const MarginalChoice& mc, Dataset& data,
                               const std::string& kernel_name) {
  if (mc.spec == "known:benchmark") {
    if (data.d1 != 4 || data.d != 5)
      throw input_error("--marginal known:benchmark expects the 5-dimensional benchmark "
                        "layout (d1=4)");
    return benchmark_marginal(data);
  }
  if (mc.spec == "known:one") return marginal_unit(data);
  if (mc.spec != "kde")
    throw input_error("--marginal must be known:benchmark, known:one or kde");

  if (data.d1 < 1) throw input_error("--marginal kde requires d1 >= 1");
  MarginalConfig cfg;
  cfg.kernel_family = kernel_name.find("biweight") == 0 ? "biweight" : "gaussian";
  if (mc.floor_rule != "paper") {
    char* end = nullptr;
    const double v = std::strtod(mc.floor_rule.c_str(), &end);
    if (end != mc.floor_rule.c_str() + mc.floor_rule.size() || !(v > 0.0))
      throw input_error("--floor must be 'paper' or a positive number");
    cfg.fixed_floor = v;
  }

  std::vector<double> aux;
  int n_x = 0;
  if (!mc.aux_csv.empty()) {
    cfg.c_exponent = mc.c_exponent;
    CsvTable aux_table = load_csv_table(mc.aux_csv);
    if (static_cast<int>(aux_table.columns.size()) != data.d1)
      throw input_error("--aux-csv: expected " + std::to_string(data.d1) +
                        " columns, got " + std::to_string(aux_table.columns.size()));
    if (aux_table.rows < 1) throw input_error("--aux-csv: no data rows");
    n_x = aux_table.rows;
    aux = std::move(aux_table.values);
  } else if (mc.split_aux > 1.0) {
    cfg.c_exponent = mc.split_aux;
    const long total = data.n;
    long n_main = 0;
    for (long cand = 3; cand < total; ++cand) {
      const double need = std::ceil(std::pow(static_cast<double>(cand), mc.split_aux));
      if (cand + need <= static_cast<double>(total))
        n_main = cand;
      else
        break;
    }
    if (n_main < 3)
      throw input_error("--split-aux: dataset too small to split with c'=" +
                        std::to_string(mc.split_aux));
    const long n_aux = total - n_main;
    aux.reserve(static_cast<std::size_t>(n_aux) * data.d1);
    for (long i = 0; i < n_aux; ++i)
      for (int jcol = 0; jcol < data.d1; ++jcol) aux.push_back(data.at(i, jcol));
    std::vector<double> main_rows(data.values.begin() +
                                      static_cast<std::size_t>(n_aux) * data.d,
                                  data.values.end());
    data = make_dataset(std::move(main_rows), static_cast<int>(n_main), data.d1, data.d2);
    n_x = static_cast<int>(n_aux);
  } else {
    throw input_error("--marginal kde needs either --aux-csv or --split-aux <c'>");
  }

  MarginalModel model = fit_marginal_kde(std::move(aux), n_x, data.d1, data.n, cfg);
  attach_cache(model, data);
  return model;
}

json rodeo_config_json(const RodeoConfig& cfg, const std::string& kernel,
                       const std::string& preset) {
  return json{{"beta", cfg.beta},
              {"h0", cfg.h0},
              {"a", cfg.a},
              {"max_iterations", cfg.max_iterations},
              {"batch_tests", cfg.simultaneous_tests},
              {"kernel", kernel},
              {"preset", preset.empty() ? "none" : preset}};
}

void write_trace_csv(const std::string& path, const RodeoTrace& trace,
                     const std::string& config_comment) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write trace file: " + path);
  out << "# " << config_comment << "\n";
  out << "iter,j,h_j,Z,lambda,decision\n";
  for (const TraceRecord& rec : trace.records)
    out << rec.iteration << "," << (rec.component + 1) << ","
        << detail::format_double(rec.h_j) << "," << detail::format_double(rec.z) << ","
        << detail::format_double(rec.lambda) << ","
        << (rec.shrink ? "shrink" : "deactivate") << "\n";
}

// ---------------------------------------------------------------------------

struct CommonRodeoFlags {
  std::string data_path;
  int d1 = 0;
  std::string point_text;
  std::string kernel = "gaussian";
  std::string preset;
  RodeoConfig cfg;
  MarginalChoice marginal;
  bool clip_zero = false;
  std::string out;
  std::string trace_path;
};

void add_marginal_flags(CLI::App* cmd, MarginalChoice& mc) {
  cmd->add_option("--marginal", mc.spec, "known:benchmark | known:one | kde");
  cmd->add_option("--aux-csv", mc.aux_csv, "auxiliary sample CSV for the marginal KDE");
  cmd->add_option("--split-aux", mc.split_aux,
                  "split the main sample: first rows become the aux sample, "
                  "sized so that n_aux >= n_main^{c'}");
  cmd->add_option("--c-exponent", mc.c_exponent, "aux-sample exponent c (n_X = n^c)");
  cmd->add_option("--floor", mc.floor_rule, "'paper' ((log n)^(-1/4)) or a number");
}

bool user_set(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt && opt->count() > 0;
}

/// paper-sim: the simulation tunings. paper-theory: the theory tunings
/// (initial bandwidth 1/log n, compactly supported kernel). Explicit flags
/// always win over the preset; the resolved values are echoed in artifacts.
void apply_preset(const CLI::App* cmd, CommonRodeoFlags& flags, long n) {
  if (flags.preset.empty()) return;
  const bool sim = flags.preset == "paper-sim";
  const bool theory = flags.preset == "paper-theory";
  if (!sim && !theory)
    throw input_error("unknown preset '" + flags.preset +
                      "' (available: paper-sim, paper-theory)");
  if (!user_set(cmd, "--beta")) flags.cfg.beta = 0.95;
  if (!user_set(cmd, "--a")) flags.cfg.a = 1.1;
  if (!user_set(cmd, "--h0"))
    flags.cfg.h0 = sim ? 0.4 : 1.0 / std::log(static_cast<double>(n));
  if (!user_set(cmd, "--kernel")) flags.kernel = sim ? "gaussian" : "biweight";
  if (!user_set(cmd, "--marginal") && flags.marginal.spec.empty())
    flags.marginal.spec = "known:benchmark";
}

int run_estimate(const CommonRodeoFlags& flags, const std::string& h_text) {
  Dataset data = load_csv(flags.data_path, flags.d1);
  CommonRodeoFlags resolved = flags;
  if (resolved.marginal.spec.empty() && data.d1 == 0) resolved.marginal.spec = "known:one";
  if (resolved.marginal.spec.empty())
    throw input_error("--marginal is required when d1 > 0");
  KernelProfile kernel = kernel_by_name(resolved.kernel);
  MarginalModel marginal = resolve_marginal(resolved.marginal, data, kernel.name);
  QueryPoint w = make_query_point(parse_number_list(resolved.point_text, "--point"));
  Bandwidth h = make_bandwidth(parse_number_list(h_text, "--h"));
  if (static_cast<int>(w.w.size()) != data.d || static_cast<int>(h.h.size()) != data.d)
    throw input_error("--point and --h must have d = " + std::to_string(data.d) +
                      " entries");
  const double raw = estimate_density(w, h, data, marginal, kernel);
  json out{{"estimate", resolved.clip_zero ? std::max(0.0, raw) : raw},
           {"estimate_raw", raw},
           {"clipped", resolved.clip_zero},
           {"config", json{{"data", resolved.data_path},
                           {"d1", data.d1},
                           {"point", w.w},
                           {"h", h.h},
                           {"kernel", kernel.name},
                           {"marginal", marginal_config_json(resolved.marginal)}}}};
  write_text(resolved.out, out.dump(2));
  return 0;
}

int run_rodeo(CLI::App* cmd, CommonRodeoFlags flags) {
  Dataset data = load_csv(flags.data_path, flags.d1);
  apply_preset(cmd, flags, data.n);
  if (flags.marginal.spec.empty() && data.d1 == 0) flags.marginal.spec = "known:one";
  if (flags.marginal.spec.empty()) throw input_error("--marginal is required when d1 > 0");
  KernelProfile kernel = kernel_by_name(flags.kernel);
  MarginalModel marginal = resolve_marginal(flags.marginal, data, kernel.name);
  QueryPoint w = make_query_point(parse_number_list(flags.point_text, "--point"));
  if (static_cast<int>(w.w.size()) != data.d)
    throw input_error("--point must have d = " + std::to_string(data.d) + " entries");

  RodeoResult res = run_cdrodeo(w, data, marginal, kernel, flags.cfg);
  if (res.a_equals_one)
    std::cerr << "warning: a = 1 is outside the proved tuning regime\n";

  json config = rodeo_config_json(flags.cfg, kernel.name, flags.preset);
  config["data"] = flags.data_path;
  config["d1"] = data.d1;
  config["n"] = data.n;
  config["point"] = w.w;
  config["marginal"] = marginal_config_json(flags.marginal);
  json out{{"h_final", res.h_final.h},
           {"theta", res.theta},
           {"estimate", flags.clip_zero ? std::max(0.0, res.estimate) : res.estimate},
           {"estimate_raw", res.estimate},
           {"clipped", flags.clip_zero},
           {"stop_reason", to_string(res.stop_reason)},
           {"iterations", res.iterations_run},
           {"kernel_evals", res.kernel_evals},
           {"config", config}};
  if (!flags.trace_path.empty()) write_trace_csv(flags.trace_path, res.trace, config.dump());
  write_text(flags.out, out.dump(2));
  return 0;
}

int run_diag(const std::string& preset, long n, double beta, double a,
             const std::string& kernel_name, const std::string& out_path) {
  if (preset != "paper-example")
    throw input_error("diag supports --preset paper-example");
  KernelProfile kernel = kernel_by_name(kernel_name);
  OracleDensity oracle = make_benchmark_oracle(n, kernel.quad_halfwidth());
  TheoryDiagnostics diag = compute_bounds(oracle, n, beta, a, kernel.norms);
  std::vector<int> relevant_1based;
  for (int j : oracle.relevant) relevant_1based.push_back(j + 1);
  json out{{"tau_n", diag.tau_n},
           {"T_n", diag.T_n},
           {"c_tau", diag.c_tau},
           {"c_T", diag.c_T},
           {"theta_lo", diag.theta_lo},
           {"theta_hi", diag.theta_hi},
           {"interval_empty", diag.interval_empty},
           {"relevant", relevant_1based},
           {"p", oracle.p},
           {"config", json{{"preset", preset},
                           {"n", n},
                           {"beta", beta},
                           {"a", a},
                           {"kernel", kernel.name},
                           {"h0", 1.0 / std::log(static_cast<double>(n))}}}};
  if (diag.interval_empty)
    std::cerr << "warning: the admissible exponent interval is empty at this n\n";
  write_text(out_path, out.dump(2));
  return 0;
}

int run_simulate(long n, std::uint64_t seed, const std::string& out_path) {
  if (out_path.empty()) throw input_error("simulate requires --out");
  Dataset data = sample_example(ExampleSpec{n, seed});
  json config{{"subcommand", "simulate"}, {"n", n}, {"seed", seed}};
  write_dataset_csv(out_path, data, "config: " + config.dump());
  return 0;
}

int run_fig1(CLI::App* cmd, CommonRodeoFlags flags, long n, int m, std::uint64_t seed,
             int threads) {
  apply_preset(cmd, flags, n);
  if (flags.preset.empty()) {  // figure reproductions default to paper-sim
    flags.preset = "paper-sim";
    apply_preset(cmd, flags, n);
  }
  KernelProfile kernel = kernel_by_name(flags.kernel);
  QueryPoint w = make_query_point(parse_number_list(flags.point_text, "--point"));
  ReplicationReport report = replicate_runs(m, ExampleSpec{n, seed}, flags.cfg, w, kernel,
                                            WhichMarginal::known_true, threads);

  json config = rodeo_config_json(flags.cfg, kernel.name, flags.preset);
  config["n"] = n;
  config["m"] = m;
  config["seed"] = seed;
  config["point"] = w.w;

  if (flags.out.empty()) throw input_error("reproduce-fig1 requires --out <csv>");
  std::ofstream csv(flags.out);
  if (!csv) throw input_error("cannot write " + flags.out);
  csv << "# config: " << config.dump() << "\n";
  csv << "run";
  for (int j = 1; j <= report.d; ++j) csv << ",h" << j;
  for (int j = 1; j <= report.d; ++j) csv << ",theta" << j;
  csv << ",stop_reason,wall_ms\n";
  for (int r = 0; r < report.m; ++r) {
    csv << r;
    for (int j = 0; j < report.d; ++j)
      csv << "," << detail::format_double(report.bandwidths[r * report.d + j]);
    for (int j = 0; j < report.d; ++j) csv << "," << report.thetas[r * report.d + j];
    csv << "," << to_string(report.stop_reasons[r]) << "," << report.wall_ms[r] << "\n";
  }
  csv.close();

  int frac34 = 0;
  for (int r = 0; r < report.m; ++r)
    if (report.thetas[r * report.d + 2] == 0 && report.thetas[r * report.d + 3] == 0)
      ++frac34;
  json summary{{"median_h", report.h_median},
               {"q25_h", report.h_q25},
               {"q75_h", report.h_q75},
               {"fraction_theta3_theta4_zero", static_cast<double>(frac34) / report.m},
               {"out", flags.out},
               {"config", config}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_fig2(CLI::App* cmd, CommonRodeoFlags flags, long n, std::uint64_t seed, int axis,
             const std::string& grid_text) {
  apply_preset(cmd, flags, n);
  if (flags.preset.empty()) {
    flags.preset = "paper-sim";
    apply_preset(cmd, flags, n);
  }
  if (axis < 1 || axis > 5) throw input_error("--axis must be in 1..5");
  KernelProfile kernel = kernel_by_name(flags.kernel);
  QueryPoint base = make_query_point(parse_number_list(flags.point_text, "--point"));
  std::vector<double> grid = parse_grid(grid_text);
  std::vector<SlicePoint> curve =
      slice_curves(ExampleSpec{n, seed}, flags.cfg, base, axis - 1, grid, kernel);

  json config = rodeo_config_json(flags.cfg, kernel.name, flags.preset);
  config["n"] = n;
  config["seed"] = seed;
  config["axis"] = axis;
  config["base_point"] = base.w;

  if (flags.out.empty()) throw input_error("reproduce-fig2 requires --out <csv>");
  std::ofstream csv(flags.out);
  if (!csv) throw input_error("cannot write " + flags.out);
  csv << "# config: " << config.dump() << "\n";
  csv << "coordinate,estimate,truth\n";
  for (const SlicePoint& pt : curve) {
    csv << detail::format_double(pt.coordinate) << ","
        << detail::format_double(pt.estimate) << ",";
    if (pt.truth) csv << detail::format_double(*pt.truth);
    csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CDRodeo: greedy per-point bandwidth selection for kernel "
               "conditional density estimation"};
  app.require_subcommand(1);

  CommonRodeoFlags flags;
  std::string h_text, grid_text = "0:4:41";
  long n = 200000;
  int m = 200, axis = 5, threads = 0;
  std::uint64_t seed = 1;
  double diag_beta = 0.95, diag_a = 1.1;
  std::string diag_kernel = "biweight", diag_preset = "paper-example";

  CLI::App* estimate = app.add_subcommand("estimate", "density estimate at a fixed bandwidth");
  estimate->set_help_flag("--help", "print help");  // frees -h for the bandwidth list
  estimate->add_option("--data", flags.data_path)->required();
  estimate->add_option("--d1", flags.d1)->required();
  estimate->add_option("--point", flags.point_text)->required();
  estimate->add_option("--h", h_text, "comma list of bandwidths")->required();
  estimate->add_option("--kernel", flags.kernel);
  estimate->add_flag("--clip-zero", flags.clip_zero, "clip negative estimates to 0");
  estimate->add_option("--out", flags.out);
  add_marginal_flags(estimate, flags.marginal);

  CLI::App* rodeo = app.add_subcommand("rodeo", "greedy bandwidth selection at a point");
  rodeo->add_option("--data", flags.data_path)->required();
  rodeo->add_option("--d1", flags.d1)->required();
  rodeo->add_option("--point", flags.point_text)->required();
  rodeo->add_option("--beta", flags.cfg.beta);
  rodeo->add_option("--h0", flags.cfg.h0);
  rodeo->add_option("--a", flags.cfg.a);
  rodeo->add_option("--kernel", flags.kernel);
  rodeo->add_option("--max-iter", flags.cfg.max_iterations);
  rodeo->add_flag("--batch", flags.cfg.simultaneous_tests,
                  "test all components against the iteration-start bandwidth");
  rodeo->add_flag("--clip-zero", flags.clip_zero);
  rodeo->add_option("--preset", flags.preset, "paper-sim | paper-theory");
  rodeo->add_option("--trace", flags.trace_path, "per-decision trace CSV");
  rodeo->add_option("--out", flags.out);
  add_marginal_flags(rodeo, flags.marginal);

  CLI::App* diag = app.add_subcommand("diag", "theory diagnostics (tau_n, T_n, ...)");
  diag->add_option("--preset", diag_preset);
  diag->add_option("--n", n)->required();
  diag->add_option("--beta", diag_beta);
  diag->add_option("--a", diag_a);
  diag->add_option("--kernel", diag_kernel);
  diag->add_option("--out", flags.out);

  CLI::App* simulate = app.add_subcommand("simulate", "draw the benchmark sample to CSV");
  simulate->add_option("--n", n)->required();
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", flags.out)->required();

  CLI::App* fig1 = app.add_subcommand("reproduce-fig1", "selected-bandwidth replications");
  fig1->add_option("--n", n);
  fig1->add_option("--m", m);
  fig1->add_option("--seed", seed);
  fig1->add_option("--point", flags.point_text)->default_val("0,1,0,0,1");
  fig1->add_option("--beta", flags.cfg.beta);
  fig1->add_option("--h0", flags.cfg.h0);
  fig1->add_option("--a", flags.cfg.a);
  fig1->add_option("--kernel", flags.kernel);
  fig1->add_option("--preset", flags.preset);
  fig1->add_option("--threads", threads, "0 = CDRODEO_THREADS env or hardware");
  fig1->add_option("--out", flags.out)->required();

  CLI::App* fig2 = app.add_subcommand("reproduce-fig2", "estimate-vs-truth slice curves");
  fig2->add_option("--n", n);
  fig2->add_option("--seed", seed);
  fig2->add_option("--axis", axis, "1..5: coordinate swept along the grid");
  fig2->add_option("--grid", grid_text, "comma list or lo:hi:count");
  fig2->add_option("--point", flags.point_text)->default_val("0,1,0,0,1");
  fig2->add_option("--beta", flags.cfg.beta);
  fig2->add_option("--h0", flags.cfg.h0);
  fig2->add_option("--a", flags.cfg.a);
  fig2->add_option("--kernel", flags.kernel);
  fig2->add_option("--preset", flags.preset);
  fig2->add_option("--out", flags.out)->required();

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return run_estimate(flags, h_text);
    if (rodeo->parsed()) return run_rodeo(rodeo, flags);
    if (diag->parsed()) return run_diag(diag_preset, n, diag_beta, diag_a, diag_kernel, flags.out);
    if (simulate->parsed()) return run_simulate(n, seed, flags.out);
    if (fig1->parsed()) return run_fig1(fig1, flags, n, m, seed, threads);
    if (fig2->parsed()) return run_fig2(fig2, flags, n, seed, axis, grid_text);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
