#include "pabc/data_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pabc {

namespace fs = std::filesystem;

SmcConfig RunConfig::smc_config() const {
  SmcConfig cfg;
  cfg.kind = kernel;
  cfg.target_count = target_count;
  cfg.batch_size = batch_size;
  cfg.survival_ratio = survival_ratio;
  cfg.run_budget = run_budget;
  cfg.seed = seed;
  cfg.initial_step = initial_step;
  cfg.target_tolerance = target_tolerance;
  cfg.step_as_variance = step_as_variance;
  cfg.variance_mode =
      literal_variance ? VarianceMode::literal : VarianceMode::poisson;
  cfg.num_workers = num_workers;
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  return {{"country", country},
          {"population", population},
          {"train_days", train_days},
          {"test_days", test_days},
          {"target_count", target_count},
          {"batch_size", batch_size},
          {"run_budget", run_budget},
          {"survival_ratio", survival_ratio},
          {"kernel", to_string(kernel)},
          {"seed", seed},
          {"trials", trials},
          {"initial_step", initial_step},
          {"target_tolerance", target_tolerance},
          {"step_as_variance", step_as_variance},
          {"literal_variance", literal_variance}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.country = j.value("country", c.country);
  c.population = j.value("population", c.population);
  c.train_days = j.value("train_days", c.train_days);
  c.test_days = j.value("test_days", c.test_days);
  c.target_count = j.value("target_count", c.target_count);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.run_budget = j.value("run_budget", c.run_budget);
  c.survival_ratio = j.value("survival_ratio", c.survival_ratio);
  if (j.contains("kernel")) c.kernel = kernel_from_string(j.at("kernel"));
  c.seed = j.value("seed", c.seed);
  c.trials = j.value("trials", c.trials);
  c.initial_step = j.value("initial_step", c.initial_step);
  c.target_tolerance = j.value("target_tolerance", c.target_tolerance);
  c.step_as_variance = j.value("step_as_variance", c.step_as_variance);
  c.literal_variance = j.value("literal_variance", c.literal_variance);
  return c;
}

std::string config_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// One CSV line, handling quoted fields with embedded commas.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

// Per-day country totals keyed by date header, in header order.
struct JhuTable {
  std::vector<std::string> dates;
  std::vector<std::int64_t> totals;
};

JhuTable load_jhu_file(const fs::path& path, const std::string& country) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open case-data file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty case-data file: " + path.string());
  }
  const auto header = split_csv(line);
  if (header.size() < 5 || header[1] != "Country/Region") {
    throw std::runtime_error("not a JHU-layout file (expected Country/Region "
                             "in column 2): " + path.string());
  }
  JhuTable table;
  table.dates.assign(header.begin() + 4, header.end());
  table.totals.assign(table.dates.size(), 0);
  std::vector<std::string> available;
  bool found = false;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(header.size()));
    }
    available.push_back(fields[1]);
    if (fields[1] != country) continue;
    found = true;
    for (std::size_t d = 0; d < table.dates.size(); ++d) {
      try {
        table.totals[d] += std::stoll(fields[4 + d]);
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ": row " +
                                 std::to_string(row) + ", column '" +
                                 table.dates[d] + "': not an integer");
      }
    }
  }
  if (!found) {
    std::sort(available.begin(), available.end());
    available.erase(std::unique(available.begin(), available.end()),
                    available.end());
    std::string msg = "country '" + country + "' not found in " +
                      path.string() + "; available:";
    for (const auto& c : available) msg += " " + c;
    throw std::runtime_error(msg);
  }
  return table;
}

}  // namespace

CaseDataSeries load_case_data(const fs::path& dir, const std::string& country,
                              const std::string& start_date, int days,
                              std::int64_t population) {
  if (days < 1) throw std::invalid_argument("load_case_data: days must be >= 1");
  const auto confirmed = load_jhu_file(dir / "confirmed.csv", country);
  const auto recovered = load_jhu_file(dir / "recovered.csv", country);
  const auto deaths = load_jhu_file(dir / "deaths.csv", country);

  const auto it = std::find(confirmed.dates.begin(), confirmed.dates.end(),
                            start_date);
  if (it == confirmed.dates.end()) {
    throw std::runtime_error("start date '" + start_date +
                             "' not found in confirmed.csv");
  }
  const auto start = static_cast<std::size_t>(it - confirmed.dates.begin());
  if (start + days > confirmed.dates.size() ||
      start + days > recovered.dates.size() ||
      start + days > deaths.dates.size()) {
    throw std::runtime_error("requested window of " + std::to_string(days) +
                             " days from " + start_date +
                             " runs past the end of the data");
  }

  CaseDataSeries series;
  series.population = population;
  for (int d = 0; d < days; ++d) {
    const auto& date = confirmed.dates[start + d];
    const std::int64_t c = confirmed.totals[start + d];
    const std::int64_t r = recovered.totals[start + d];
    const std::int64_t dd = deaths.totals[start + d];
    const std::int64_t a = c - r - dd;
    if (a < 0) {
      throw std::runtime_error("derived active cases negative on " + date +
                               " (confirmed " + std::to_string(c) +
                               " < recovered+deaths)");
    }
    if (d > 0 && (r < series.R.back() || dd < series.D.back())) {
      throw std::runtime_error("cumulative series decreases on " + date);
    }
    series.A.push_back(a);
    series.R.push_back(r);
    series.D.push_back(dd);
  }
  series.validate();
  return series;
}

CaseDataSeries generate_synthetic(const ParameterVector& theta_true,
                                  const SimConfig& config, std::uint64_t seed) {
  auto stream = make_stream(seed, StreamPurpose::synthetic, 0);
  const auto traj = simulate(stream, theta_true, config);
  if (!traj.valid) {
    throw std::invalid_argument(
        "generate_synthetic: invalid initial configuration");
  }
  CaseDataSeries series;
  series.population = config.population;
  for (const auto& day : traj.observed) {
    series.A.push_back(day.A);
    series.R.push_back(day.R);
    series.D.push_back(day.D);
  }
  series.validate();
  return series;
}

void save_case_series(const fs::path& path, const CaseDataSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "day\tA\tR\tD\n";
  for (int d = 0; d < series.days(); ++d) {
    out << d << '\t' << series.A[d] << '\t' << series.R[d] << '\t'
        << series.D[d] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CaseDataSeries load_case_series(const fs::path& path,
                                std::int64_t population) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "day\tA\tR\tD") {
    throw std::runtime_error("bad case-series header in " + path.string());
  }
  CaseDataSeries series;
  series.population = population;
  int day;
  std::int64_t a, r, d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    if (!(row >> day >> a >> r >> d)) {
      throw std::runtime_error("bad case-series row in " + path.string() +
                               ": " + line);
    }
    series.A.push_back(a);
    series.R.push_back(r);
    series.D.push_back(d);
  }
  series.validate();
  return series;
}

void persist_population(const fs::path& path,
                        const ParticlePopulation& population) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "stage\tepsilon";
  for (int k = 0; k < 8; ++k) out << "\tu" << k;
  out << "\talpha0\talpha\tn\tbeta\tgamma\tdelta\teta\tkappa"
      << "\tdistance\tweight\n";
  for (std::size_t i = 0; i < population.particles.size(); ++i) {
    const auto& p = population.particles[i];
    out << population.stage_index << '\t' << fmt_double(population.epsilon);
    for (double u : p.theta_unit) out << '\t' << fmt_double(u);
    for (double x : p.theta_natural.to_array()) out << '\t' << fmt_double(x);
    out << '\t' << fmt_double(p.distance) << '\t'
        << fmt_double(population.weights[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ParticlePopulation load_population(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty population file " + path.string());
  }
  ParticlePopulation population;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Particle p;
    double weight;
    std::array<double, 8> natural;
    row >> population.stage_index >> population.epsilon;
    for (auto& u : p.theta_unit) row >> u;
    for (auto& x : natural) row >> x;
    row >> p.distance >> weight;
    if (!row) {
      throw std::runtime_error("bad population row in " + path.string());
    }
    p.theta_natural = ParameterVector::from_array(natural);
    population.particles.push_back(p);
    population.weights.push_back(weight);
  }
  return population;
}

namespace {
constexpr const char* kTraceHeader =
    "trial\tstage\tcumulative_runs\tepsilon\tacceptance_ratio\tkernel\t"
    "scalar_s\tbeta_alpha\tbeta_beta\tfrozen";
}

void append_trace_header(const fs::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kTraceHeader << '\n';
}

void append_trace_row(const fs::path& path, int trial,
                      const StageRecord& record) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& s = record.step_state;
  out << trial << '\t' << record.stage_index << '\t'
      << record.simulation_runs_used << '\t' << fmt_double(record.epsilon)
      << '\t' << fmt_double(record.acceptance_ratio) << '\t'
      << to_string(s.kind) << '\t' << fmt_double(s.scalar_s) << '\t'
      << fmt_double(s.beta_alpha) << '\t' << fmt_double(s.beta_beta) << '\t'
      << (s.adaptation_frozen ? 1 : 0) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<TraceRow> load_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::runtime_error("bad trace header in " + path.string());
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceRow tr;
    std::string epsilon;  // operator>> rejects "inf", stod accepts it
    std::string kernel;
    int frozen;
    row >> tr.trial >> tr.record.stage_index >>
        tr.record.simulation_runs_used >> epsilon >>
        tr.record.acceptance_ratio >> kernel >> tr.record.step_state.scalar_s >>
        tr.record.step_state.beta_alpha >> tr.record.step_state.beta_beta >>
        frozen;
    if (row) {
      try {
        tr.record.epsilon = std::stod(epsilon);
      } catch (const std::exception&) {
        row.setstate(std::ios::failbit);
      }
    }
    if (!row) {
      throw std::runtime_error("bad trace row in " + path.string() + ": " +
                               line);
    }
    tr.record.step_state.kind = kernel_from_string(kernel);
    tr.record.step_state.adaptation_frozen = frozen != 0;
    rows.push_back(tr);
  }
  return rows;
}

void persist_prediction(const fs::path& path, const PredictionBand& band) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "day\tA_median\tA_lower\tA_upper\tR_median\tR_lower\tR_upper\t"
         "D_median\tD_lower\tD_upper\n";
  for (int d = 0; d < band.days(); ++d) {
    out << d;
    for (const auto* series : {&band.A, &band.R, &band.D}) {
      for (double x : (*series)[d]) out << '\t' << fmt_double(x);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_manifest(const fs::path& path, const nlohmann::json& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

nlohmann::json read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace pabc
