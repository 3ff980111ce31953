#include "pabc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pabc/parallel.hpp"
#include "pabc/version.hpp"

namespace pabc {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t master_seed, KernelKind kernel,
                          int level, int trial) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ (kernel == KernelKind::mcmc ? 0x6D636D63ULL : 0x62647373ULL));
  h = mix64(h ^ static_cast<std::uint64_t>(level));
  h = mix64(h ^ static_cast<std::uint64_t>(trial));
  return h;
}

namespace {

std::string cell_stem(KernelKind kernel, int level, int trial) {
  return to_string(kernel) + "_B" + std::to_string(level) + "_t" +
         std::to_string(trial);
}

// Config identity shared by every cell of one sweep: everything except the
// kernel, per-cell seed, and trial count.
std::string base_hash(const RunConfig& config) {
  auto j = config.to_json();
  j.erase("kernel");
  j.erase("seed");
  j.erase("trials");
  return config_hash(j);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

std::vector<RunSummary> cmd_infer(const ExperimentSpec& spec,
                                  const CaseDataSeries& observed,
                                  const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<RunSummary> summaries;
  for (KernelKind kernel : spec.kernels) {
    for (int level : spec.parallelism_levels) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        RunSummary summary;
        summary.kernel = kernel;
        summary.level = level;
        summary.trial = trial;

        RunConfig cell = spec.base;
        cell.kernel = kernel;
        cell.batch_size = level;
        cell.seed = derive_seed(spec.base.seed, kernel, level, trial);
        const auto cell_hash = config_hash(cell.to_json());

        const auto stem = cell_stem(kernel, level, trial);
        const auto trace_path = out_dir / (stem + "_trace.tsv");
        const auto pop_path = out_dir / (stem + "_pop.tsv");
        const auto manifest_path = out_dir / (stem + "_manifest.json");

        if (fs::exists(manifest_path)) {
          try {
            const auto manifest = read_manifest(manifest_path);
            if (manifest.value("config_hash", "") == cell_hash) {
              summary.skipped = true;
              summary.final_epsilon = manifest.value("final_epsilon", 0.0);
              summary.runs_used = manifest.value<std::int64_t>("runs_used", 0);
              summaries.push_back(summary);
              continue;
            }
          } catch (const std::exception&) {
            // unreadable manifest: redo the cell
          }
        }

        try {
          fs::remove(trace_path);
          append_trace_header(trace_path);
          TraceSink sink = [&](const StageRecord& record) {
            append_trace_row(trace_path, trial, record);
          };
          auto result = run_abc_smc(cell.smc_config(), observed, sink);
          persist_population(pop_path, result.population);

          nlohmann::json manifest = {
              {"config", cell.to_json()},
              {"config_hash", cell_hash},
              {"base_hash", base_hash(spec.base)},
              {"kernel", to_string(kernel)},
              {"level", level},
              {"trial", trial},
              {"seed", cell.seed},
              {"version", kVersion},
              {"final_epsilon", result.population.epsilon},
              {"runs_used", result.stages.back().simulation_runs_used},
              {"complete", result.complete},
          };
          write_manifest(manifest_path, manifest);

          summary.final_epsilon = result.population.epsilon;
          summary.runs_used = result.stages.back().simulation_runs_used;
          summary.complete = result.complete;
        } catch (const std::exception& e) {
          summary.failed = true;
          summary.error = e.what();
        }
        summaries.push_back(summary);
      }
    }
  }
  return summaries;
}

PredictionBand cmd_predict(const ParticlePopulation& population,
                           const SimConfig& sim_config, int horizon_days,
                           std::uint64_t seed, int num_workers) {
  const std::size_t n = population.particles.size();
  if (n < 2) {
    throw std::invalid_argument("cmd_predict: need at least 2 particles");
  }
  SimConfig sim = sim_config;
  sim.days += horizon_days;

  std::vector<RngStream> streams;
  std::vector<ParameterVector> thetas;
  streams.reserve(n);
  thetas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    streams.push_back(make_stream(seed, StreamPurpose::predictive, i));
    thetas.push_back(population.particles[i].theta_natural);
  }
  const auto trajectories = simulate_batch(streams, thetas, sim, num_workers);

  const int days = sim.days + 1;
  PredictionBand band;
  band.A.resize(days);
  band.R.resize(days);
  band.D.resize(days);
  std::vector<double> values(n);
  for (int d = 0; d < days; ++d) {
    auto reduce = [&](auto member) -> std::array<double, 3> {
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = static_cast<double>(trajectories[i].observed[d].*member);
      }
      return {quantile(values, 0.5), quantile(values, 0.005),
              quantile(values, 0.995)};
    };
    band.A[d] = reduce(&ObservedDay::A);
    band.R[d] = reduce(&ObservedDay::R);
    band.D[d] = reduce(&ObservedDay::D);
  }
  return band;
}

ReportSummary cmd_report(const std::vector<fs::path>& traces, double threshold,
                         bool exclude_outliers) {
  struct TrialOutcome {
    double final_epsilon = kInfiniteDistance;
    std::optional<std::int64_t> runs_to_threshold;
  };
  std::map<std::pair<std::string, int>, std::vector<TrialOutcome>> groups;
  std::string expected_base_hash;

  for (const auto& trace_path : traces) {
    const auto rows = load_trace(trace_path);
    if (rows.empty()) {
      throw std::runtime_error("empty trace: " + trace_path.string());
    }
    int level = 0;
    auto manifest_path = trace_path.string();
    const std::string suffix = "_trace.tsv";
    if (manifest_path.ends_with(suffix)) {
      manifest_path.replace(manifest_path.size() - suffix.size(),
                            suffix.size(), "_manifest.json");
    }
    if (fs::exists(manifest_path)) {
      const auto manifest = read_manifest(manifest_path);
      level = manifest.value("level", 0);
      const auto bh = manifest.value("base_hash", "");
      if (expected_base_hash.empty()) {
        expected_base_hash = bh;
      } else if (bh != expected_base_hash) {
        throw std::runtime_error(
            "refusing to compare traces from different configs: " +
            trace_path.string());
      }
    }
    const auto kernel = to_string(rows.back().record.step_state.kind);

    std::map<int, TrialOutcome> trials;
    for (const auto& row : rows) {
      auto& outcome = trials[row.trial];
      outcome.final_epsilon = row.record.epsilon;
      if (!outcome.runs_to_threshold && row.record.epsilon <= threshold) {
        outcome.runs_to_threshold = row.record.simulation_runs_used;
      }
    }
    auto& group = groups[{kernel, level}];
    for (auto& [trial, outcome] : trials) group.push_back(outcome);
  }

  ReportSummary summary;
  for (auto& [key, outcomes] : groups) {
    if (exclude_outliers && outcomes.size() >= 3) {
      auto worst = std::max_element(outcomes.begin(), outcomes.end(),
                                    [](const auto& a, const auto& b) {
                                      return a.final_epsilon < b.final_epsilon;
                                    });
      outcomes.erase(worst);
    }
    KernelLevelStats stats;
    stats.kernel = kernel_from_string(key.first);
    stats.level = key.second;
    stats.trials = static_cast<int>(outcomes.size());
    double sum = 0.0;
    for (const auto& o : outcomes) {
      sum += o.final_epsilon;
      stats.runs_to_threshold.push_back(o.runs_to_threshold);
    }
    stats.mean_final_epsilon = sum / static_cast<double>(outcomes.size());
    if (outcomes.size() >= 2) {
      double ss = 0.0;
      for (const auto& o : outcomes) {
        const double d = o.final_epsilon - stats.mean_final_epsilon;
        ss += d * d;
      }
      stats.var_final_epsilon = ss / static_cast<double>(outcomes.size() - 1);
    }
    summary.stats.push_back(stats);
  }

  auto find_stats = [&](KernelKind kernel, int level) -> KernelLevelStats* {
    for (auto& s : summary.stats) {
      if (s.kernel == kernel && s.level == level) return &s;
    }
    return nullptr;
  };
  auto mean_runs = [](const KernelLevelStats& s) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : s.runs_to_threshold) {
      if (r) {
        sum += static_cast<double>(*r);
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  for (auto& s : summary.stats) {
    if (s.kernel != KernelKind::mcmc) continue;
    const auto* bdss = find_stats(KernelKind::bdss, s.level);
    if (!bdss) continue;
    ReportSummary::Comparison cmp;
    cmp.level = s.level;
    const auto rm = mean_runs(s);
    const auto rb = mean_runs(*bdss);
    cmp.runs_ratio = (rm && rb && *rb > 0) ? *rm / *rb : 0.0;
    cmp.variance_ratio =
        (s.var_final_epsilon && bdss->var_final_epsilon &&
         *bdss->var_final_epsilon > 0)
            ? *s.var_final_epsilon / *bdss->var_final_epsilon
            : 0.0;
    summary.comparisons.push_back(cmp);
  }
  return summary;
}

std::vector<BenchCell> cmd_bench(const ExperimentSpec& spec,
                                 const CaseDataSeries& observed) {
  std::vector<BenchCell> cells;
  for (KernelKind kernel : spec.kernels) {
    for (int level : spec.parallelism_levels) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        RunConfig cell = spec.base;
        cell.kernel = kernel;
        cell.batch_size = level;
        cell.seed = derive_seed(spec.base.seed, kernel, level, trial);
        const auto result = run_abc_smc(cell.smc_config(), observed);
        BenchCell bench;
        bench.kernel = kernel;
        bench.level = level;
        bench.trial = trial;
        bench.total_seconds = result.total_seconds;
        bench.sim_seconds = result.sim_seconds;
        bench.sim_fraction = result.total_seconds > 0
                                 ? result.sim_seconds / result.total_seconds
                                 : 0.0;
        cells.push_back(bench);
      }
    }
  }
  return cells;
}

}  // namespace pabc
