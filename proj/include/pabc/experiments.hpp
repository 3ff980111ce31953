#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pabc/data_io.hpp"
#include "pabc/smc.hpp"

namespace pabc {

struct ExperimentSpec {
  RunConfig base;
  std::vector<int> parallelism_levels{10, 100, 1000, 10000, 100000};
  int trials = 10;
  std::vector<KernelKind> kernels{KernelKind::mcmc, KernelKind::bdss};
};

// Per-cell seed for the (kernel, level, trial) sweep, derived from the
// master seed so trials are independent yet reproducible.
std::uint64_t derive_seed(std::uint64_t master_seed, KernelKind kernel,
                          int level, int trial);

struct RunSummary {
  KernelKind kernel = KernelKind::bdss;
  int level = 0;
  int trial = 0;
  double final_epsilon = kInfiniteDistance;
  std::int64_t runs_used = 0;
  bool complete = true;
  bool skipped = false;  // resumed sweep found a finished cell
  bool failed = false;
  std::string error;
};

// One trace + population + manifest per sweep cell; cells whose manifest
// already matches the config hash are skipped.
std::vector<RunSummary> cmd_infer(const ExperimentSpec& spec,
                                  const CaseDataSeries& observed,
                                  const std::filesystem::path& out_dir);

// Simulates one stochastic trajectory per particle over
// train_days + horizon_days from day zero and reduces to per-day median and
// central 99% band for each of A, R, D.
PredictionBand cmd_predict(const ParticlePopulation& population,
                           const SimConfig& sim_config, int horizon_days,
                           std::uint64_t seed, int num_workers = 1);

struct KernelLevelStats {
  KernelKind kernel = KernelKind::bdss;
  int level = 0;
  int trials = 0;
  double mean_final_epsilon = 0.0;
  std::optional<double> var_final_epsilon;  // undefined for a single trial
  // first cumulative-run count at which epsilon <= threshold, per trial;
  // empty optional when never reached
  std::vector<std::optional<std::int64_t>> runs_to_threshold;
};

struct ReportSummary {
  std::vector<KernelLevelStats> stats;
  // cross-kernel ratios at matching levels (mcmc / bdss)
  struct Comparison {
    int level = 0;
    double runs_ratio = 0.0;      // mean runs-to-threshold ratio
    double variance_ratio = 0.0;  // final-epsilon variance ratio
  };
  std::vector<Comparison> comparisons;
};

// threshold: the target tolerance for runs-to-reach accounting.
// exclude_outliers drops, per (kernel, level), the single worst final
// tolerance before computing mean/variance.
ReportSummary cmd_report(const std::vector<std::filesystem::path>& traces,
                         double threshold, bool exclude_outliers = false);

struct BenchCell {
  KernelKind kernel = KernelKind::bdss;
  int level = 0;
  int trial = 0;
  double total_seconds = 0.0;
  double sim_seconds = 0.0;
  double sim_fraction = 0.0;
};

std::vector<BenchCell> cmd_bench(const ExperimentSpec& spec,
                                 const CaseDataSeries& observed);

}  // namespace pabc
