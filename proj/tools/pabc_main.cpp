#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pabc/data_io.hpp"
#include "pabc/experiments.hpp"
#include "pabc/parallel.hpp"
#include "pabc/version.hpp"

namespace fs = std::filesystem;
using namespace pabc;

namespace {

struct CommonOptions {
  RunConfig config;
  std::string data_dir;      // JHU-layout directory
  std::string series_file;   // TSV written by `synth`
  std::string start_date = "1/22/20";
  std::string out_dir = "out";
  std::vector<int> levels;
  std::string kernels = "mcmc,bdss";
};

void add_run_options(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--data-dir", opt.data_dir,
                  "Directory with confirmed.csv/recovered.csv/deaths.csv "
                  "(JHU global layout)");
  cmd->add_option("--series", opt.series_file,
                  "Observed case series TSV (day/A/R/D)");
  cmd->add_option("--country", opt.config.country, "Country/Region name");
  cmd->add_option("--start-date", opt.start_date,
                  "First date column of the window, e.g. 1/22/20");
  cmd->add_option("--population", opt.config.population, "Total population P");
  cmd->add_option("--train-days", opt.config.train_days, "Training window");
  cmd->add_option("--test-days", opt.config.test_days, "Held-out window");
  cmd->add_option("-N,--samples", opt.config.target_count,
                  "Accepted samples per stage");
  cmd->add_option("-B,--batch", opt.config.batch_size,
                  "Simulations per parallel batch");
  cmd->add_option("--budget", opt.config.run_budget,
                  "Total simulation budget");
  cmd->add_option("--survival-ratio", opt.config.survival_ratio,
                  "Quantile for the next tolerance");
  cmd->add_option("--seed", opt.config.seed, "Master seed");
  cmd->add_option("--trials", opt.config.trials, "Independent trials");
  cmd->add_option("--s0", opt.config.initial_step,
                  "Initial MCMC step size (unit cube)");
  cmd->add_option("--target-tolerance", opt.config.target_tolerance,
                  "Stop once the tolerance reaches this value");
  cmd->add_flag("--step-as-variance", opt.config.step_as_variance,
                "Treat the step size as a variance instead of a std dev");
  cmd->add_flag("--literal-variance", opt.config.literal_variance,
                "Tau-leaping noise with variance sqrt(h) instead of h");
  cmd->add_option("--workers", opt.config.num_workers,
                  "Simulation worker threads");
  cmd->add_option("--levels", opt.levels,
                  "Parallelism sweep levels (default: batch size only)");
  cmd->add_option("--kernels", opt.kernels,
                  "Comma-separated kernel list (mcmc,bdss)");
  cmd->add_option("--out", opt.out_dir, "Output directory");
}

CaseDataSeries load_observed(const CommonOptions& opt, int days) {
  if (!opt.data_dir.empty()) {
    if (opt.config.population <= 0) {
      throw std::runtime_error("--population is required with --data-dir");
    }
    return load_case_data(opt.data_dir, opt.config.country, opt.start_date,
                          days, opt.config.population);
  }
  if (opt.series_file.empty()) {
    throw std::runtime_error("provide --data-dir or --series");
  }
  std::int64_t population = opt.config.population;
  const fs::path manifest_path = opt.series_file + ".manifest.json";
  if (population <= 0 && fs::exists(manifest_path)) {
    population = read_manifest(manifest_path).value<std::int64_t>(
        "population", 0);
  }
  if (population <= 0) {
    throw std::runtime_error("--population is required (not in manifest)");
  }
  auto series = load_case_series(opt.series_file, population);
  if (series.days() < days) {
    throw std::runtime_error("series has " + std::to_string(series.days()) +
                             " days, need " + std::to_string(days));
  }
  series.A.resize(days);
  series.R.resize(days);
  series.D.resize(days);
  return series;
}

ExperimentSpec make_spec(const CommonOptions& opt) {
  ExperimentSpec spec;
  spec.base = opt.config;
  spec.trials = opt.config.trials;
  spec.parallelism_levels =
      opt.levels.empty() ? std::vector<int>{opt.config.batch_size} : opt.levels;
  spec.kernels.clear();
  std::stringstream names(opt.kernels);
  std::string name;
  while (std::getline(names, name, ',')) {
    if (!name.empty()) spec.kernels.push_back(kernel_from_string(name));
  }
  return spec;
}

int run_synth(const CommonOptions& opt, const std::vector<double>& theta,
              const std::string& out_file) {
  if (theta.size() != 8) {
    throw std::runtime_error("--theta needs exactly 8 values");
  }
  std::array<double, 8> natural;
  std::copy(theta.begin(), theta.end(), natural.begin());
  const auto theta_true = ParameterVector::from_array(natural);

  SimConfig sim;
  sim.population = opt.config.population;
  sim.days = opt.config.train_days + opt.config.test_days - 1;
  sim.initial_observed = {10, 0, 0};
  auto series = generate_synthetic(theta_true, sim, opt.config.seed);
  save_case_series(out_file, series);

  nlohmann::json manifest = {
      {"population", sim.population},
      {"days", series.days()},
      {"seed", opt.config.seed},
      {"theta_true", theta},
      {"version", kVersion},
  };
  write_manifest(out_file + ".manifest.json", manifest);
  std::printf("wrote %s (%d days, P=%lld)\n", out_file.c_str(), series.days(),
              static_cast<long long>(series.population));
  return 0;
}

int run_infer(const CommonOptions& opt) {
  const auto observed = load_observed(opt, opt.config.train_days);
  const auto spec = make_spec(opt);
  const auto summaries = cmd_infer(spec, observed, opt.out_dir);
  for (const auto& s : summaries) {
    if (s.failed) {
      std::printf("%s B=%d trial=%d FAILED: %s\n",
                  to_string(s.kernel).c_str(), s.level, s.trial,
                  s.error.c_str());
    } else {
      std::printf("%s B=%d trial=%d%s final_epsilon=%.6g runs=%lld\n",
                  to_string(s.kernel).c_str(), s.level, s.trial,
                  s.skipped ? " (cached)" : "", s.final_epsilon,
                  static_cast<long long>(s.runs_used));
    }
  }
  return 0;
}

int run_predict(const CommonOptions& opt, const std::string& pop_file,
                int horizon, const std::string& out_file) {
  const auto observed = load_observed(opt, opt.config.train_days);
  const auto population = load_population(pop_file);
  SimConfig sim;
  sim.population = observed.population;
  sim.days = observed.days() - 1;
  sim.initial_observed = {observed.A[0], observed.R[0], observed.D[0]};
  sim.variance_mode = opt.config.literal_variance ? VarianceMode::literal
                                                  : VarianceMode::poisson;
  const auto band = cmd_predict(population, sim, horizon, opt.config.seed,
                                opt.config.num_workers);
  persist_prediction(out_file, band);
  std::printf("wrote %s (%d days, %zu particles)\n", out_file.c_str(),
              band.days(), population.particles.size());
  return 0;
}

int run_report(const std::vector<std::string>& trace_files, double threshold,
               bool exclude_outliers) {
  std::vector<fs::path> paths(trace_files.begin(), trace_files.end());
  const auto summary = cmd_report(paths, threshold, exclude_outliers);
  std::printf("%-6s %-8s %-7s %-14s %-14s %s\n", "kernel", "B", "trials",
              "mean_final_eps", "var_final_eps", "mean_runs_to_T");
  for (const auto& s : summary.stats) {
    double mean_runs = 0;
    int reached = 0;
    for (const auto& r : s.runs_to_threshold) {
      if (r) {
        mean_runs += static_cast<double>(*r);
        ++reached;
      }
    }
    std::printf("%-6s %-8d %-7d %-14.6g %-14s %s\n",
                to_string(s.kernel).c_str(), s.level, s.trials,
                s.mean_final_epsilon,
                s.var_final_epsilon
                    ? std::to_string(*s.var_final_epsilon).c_str()
                    : "undefined",
                reached ? std::to_string(mean_runs / reached).c_str()
                        : "never");
  }
  for (const auto& c : summary.comparisons) {
    std::printf("B=%d mcmc/bdss runs_ratio=%.3g variance_ratio=%.3g\n",
                c.level, c.runs_ratio, c.variance_ratio);
  }
  return 0;
}

int run_bench(const CommonOptions& opt, const std::string& out_file) {
  const auto observed = load_observed(opt, opt.config.train_days);
  const auto spec = make_spec(opt);
  const auto cells = cmd_bench(spec, observed);
  FILE* out = std::fopen(out_file.c_str(), "w");
  if (!out) throw std::runtime_error("cannot write " + out_file);
  std::fprintf(out,
               "kernel\tB\ttrial\ttotal_seconds\tsim_seconds\tsim_fraction\n");
  for (const auto& c : cells) {
    std::fprintf(out, "%s\t%d\t%d\t%.17g\t%.17g\t%.17g\n",
                 to_string(c.kernel).c_str(), c.level, c.trial,
                 c.total_seconds, c.sim_seconds, c.sim_fraction);
    std::printf("%s B=%d trial=%d total=%.3fs sim=%.3fs fraction=%.2f\n",
                to_string(c.kernel).c_str(), c.level, c.trial, c.total_seconds,
                c.sim_seconds, c.sim_fraction);
  }
  std::fclose(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch-parallel ABC / ABC-SMC inference for the stochastic "
               "COVID-19 compartmental model"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Read options from a config file");
  app.require_subcommand(1);

  CommonOptions opt;
  opt.config.num_workers = default_workers();

  std::vector<double> theta{0.2, 30.0, 1.0, 0.1, 0.1, 0.01, 0.5, 1.0};
  std::string synth_out = "synthetic.tsv";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic case series");
  add_run_options(synth, opt);
  synth->add_option("--theta", theta, "Ground-truth parameters (8 values)")
      ->expected(8);
  synth->add_option("--out-file", synth_out, "Output series TSV");

  auto* infer = app.add_subcommand(
      "infer", "Run the (kernel x parallelism x trial) inference sweep");
  add_run_options(infer, opt);

  std::string pop_file;
  std::string predict_out = "prediction.tsv";
  int horizon = 30;
  auto* predict = app.add_subcommand(
      "predict", "Predictive bands from a persisted population");
  add_run_options(predict, opt);
  predict->add_option("--pop", pop_file, "Population TSV from infer")
      ->required();
  predict->add_option("--horizon", horizon, "Extra days past the window");
  predict->add_option("--out-file", predict_out, "Output band TSV");

  std::vector<std::string> trace_files;
  double threshold = 1.0;
  bool exclude_outliers = false;
  auto* report = app.add_subcommand("report", "Compare kernels from traces");
  report->add_option("traces", trace_files, "Trace TSV files")->required();
  report->add_option("--threshold", threshold,
                     "Tolerance for runs-to-reach accounting");
  report->add_flag("--exclude-outliers", exclude_outliers,
                   "Drop the worst trial per (kernel, B)");

  std::string bench_out = "bench.tsv";
  auto* bench = app.add_subcommand("bench", "Time simulation vs other phases");
  add_run_options(bench, opt);
  bench->add_option("--out-file", bench_out, "Output timing TSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(opt, theta, synth_out);
    if (infer->parsed()) return run_infer(opt);
    if (predict->parsed())
      return run_predict(opt, pop_file, horizon, predict_out);
    if (report->parsed())
      return run_report(trace_files, threshold, exclude_outliers);
    if (bench->parsed()) return run_bench(opt, bench_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
