#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pabc/abc.hpp"
#include "pabc/smc.hpp"

#include "json.hpp"

namespace pabc {

struct RunConfig {
  std::string country = "synthetic";
  std::int64_t population = 0;
  int train_days = 120;
  int test_days = 30;
  int target_count = 1000;   // N
  int batch_size = 100;      // B
  std::int64_t run_budget = 0;
  double survival_ratio = 0.5;
  KernelKind kernel = KernelKind::bdss;
  std::uint64_t seed = 0;
  int trials = 1;
  double initial_step = 0.1;
  double target_tolerance = -1;
  bool step_as_variance = false;
  bool literal_variance = false;  // tau-leaping variance sqrt(h) reading
  int num_workers = 1;

  SmcConfig smc_config() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// FNV-1a over the canonical JSON dump, as a hex string.
std::string config_hash(const nlohmann::json& j);

// JHU global time-series layout: a directory holding confirmed.csv,
// recovered.csv and deaths.csv (one row per region, one column per date,
// cumulative counts). Active cases are derived as confirmed - R - D.
CaseDataSeries load_case_data(const std::filesystem::path& dir,
                              const std::string& country,
                              const std::string& start_date, int days,
                              std::int64_t population);

// One stochastic trajectory's observed series, usable as ground truth.
CaseDataSeries generate_synthetic(const ParameterVector& theta_true,
                                  const SimConfig& config, std::uint64_t seed);

// Tab-separated, header row, round-trip float precision throughout.
void save_case_series(const std::filesystem::path& path,
                      const CaseDataSeries& series);
CaseDataSeries load_case_series(const std::filesystem::path& path,
                                std::int64_t population);

void persist_population(const std::filesystem::path& path,
                        const ParticlePopulation& population);
ParticlePopulation load_population(const std::filesystem::path& path);

// One row per stage; appendable mid-run, so interrupted runs keep a
// parseable prefix.
void append_trace_header(const std::filesystem::path& path);
void append_trace_row(const std::filesystem::path& path, int trial,
                      const StageRecord& record);
struct TraceRow {
  int trial = 0;
  StageRecord record;
};
std::vector<TraceRow> load_trace(const std::filesystem::path& path);

struct PredictionBand {
  // per day, one triple of (median, lower, upper) for each of A, R, D
  std::vector<std::array<double, 3>> A;
  std::vector<std::array<double, 3>> R;
  std::vector<std::array<double, 3>> D;
  int days() const { return static_cast<int>(A.size()); }
};

void persist_prediction(const std::filesystem::path& path,
                        const PredictionBand& band);

void write_manifest(const std::filesystem::path& path,
                    const nlohmann::json& manifest);
nlohmann::json read_manifest(const std::filesystem::path& path);

}  // namespace pabc
