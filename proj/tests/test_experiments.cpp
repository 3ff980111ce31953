#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "pabc/experiments.hpp"

using namespace pabc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pabc_exp_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

CaseDataSeries observed_fixture() {
  ParameterVector theta;
  theta.alpha0 = 0.2;
  theta.alpha = 20.0;
  theta.n = 1.0;
  theta.beta = 0.1;
  theta.gamma = 0.1;
  theta.delta = 0.01;
  theta.eta = 0.5;
  theta.kappa = 1.0;
  SimConfig sim;
  sim.population = 50000;
  sim.days = 19;
  sim.initial_observed = {20, 0, 0};
  return generate_synthetic(theta, sim, 5);
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.base.population = 50000;
  spec.base.train_days = 20;
  spec.base.target_count = 40;
  spec.base.run_budget = 1500;
  spec.base.seed = 77;
  spec.trials = 1;
  spec.parallelism_levels = {20};
  spec.kernels = {KernelKind::bdss};
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("derive_seed separates kernels, levels and trials") {
  const auto s = derive_seed(1, KernelKind::mcmc, 10, 0);
  CHECK(s != derive_seed(1, KernelKind::bdss, 10, 0));
  CHECK(s != derive_seed(1, KernelKind::mcmc, 100, 0));
  CHECK(s != derive_seed(1, KernelKind::mcmc, 10, 1));
  CHECK(s != derive_seed(2, KernelKind::mcmc, 10, 0));
  CHECK(s == derive_seed(1, KernelKind::mcmc, 10, 0));
}

TEST_CASE("cmd_infer writes one trace per cell and is byte-reproducible") {
  const auto observed = observed_fixture();
  const auto spec = small_spec();

  TempDir a, b;
  const auto first = cmd_infer(spec, observed, a.path);
  REQUIRE(first.size() == 1);
  CHECK_FALSE(first[0].failed);
  CHECK_FALSE(first[0].skipped);

  const auto trace_name = "bdss_B20_t0_trace.tsv";
  REQUIRE(fs::exists(a.path / trace_name));
  REQUIRE(fs::exists(a.path / "bdss_B20_t0_pop.tsv"));
  REQUIRE(fs::exists(a.path / "bdss_B20_t0_manifest.json"));

  const auto second = cmd_infer(spec, observed, b.path);
  CHECK(slurp(a.path / trace_name) == slurp(b.path / trace_name));
  CHECK(slurp(a.path / "bdss_B20_t0_pop.tsv") ==
        slurp(b.path / "bdss_B20_t0_pop.tsv"));

  // summary projects the last trace row
  const auto rows = load_trace(a.path / trace_name);
  CHECK(first[0].final_epsilon == rows.back().record.epsilon);
  CHECK(first[0].runs_used == rows.back().record.simulation_runs_used);
}

TEST_CASE("cmd_infer resumes a finished sweep from manifests") {
  const auto observed = observed_fixture();
  const auto spec = small_spec();
  TempDir tmp;
  const auto first = cmd_infer(spec, observed, tmp.path);
  const auto again = cmd_infer(spec, observed, tmp.path);
  REQUIRE(again.size() == 1);
  CHECK(again[0].skipped);
  CHECK(again[0].final_epsilon == doctest::Approx(first[0].final_epsilon));

  // a changed config invalidates the cache
  auto changed = spec;
  changed.base.seed = 78;
  const auto redo = cmd_infer(changed, observed, tmp.path);
  CHECK_FALSE(redo[0].skipped);
}

TEST_CASE("cmd_predict: degenerate population has zero-width bands") {
  Particle p;
  p.theta_unit.fill(0.25);
  p.theta_natural = ParameterVector::from_unit(p.theta_unit);
  ParticlePopulation pop;
  for (int i = 0; i < 5; ++i) {
    pop.particles.push_back(p);
    pop.weights.push_back(0.2);
  }
  SimConfig sim;
  sim.population = 10000;
  sim.days = 10;
  sim.initial_observed = {10, 0, 0};
  sim.noise_mode = NoiseMode::deterministic;
  const auto band = cmd_predict(pop, sim, 5, 3);
  REQUIRE(band.days() == 16);
  for (int d = 0; d < band.days(); ++d) {
    CHECK(band.A[d][1] == band.A[d][2]);
    CHECK(band.R[d][1] == band.R[d][2]);
    CHECK(band.D[d][1] == band.D[d][2]);
  }
}

TEST_CASE("cmd_predict: median lies inside the band") {
  RngStream stream(12, 0);
  ParticlePopulation pop;
  for (int i = 0; i < 50; ++i) {
    Particle p;
    for (auto& u : p.theta_unit) u = uniform(stream);
    p.theta_natural = ParameterVector::from_unit(p.theta_unit);
    pop.particles.push_back(p);
    pop.weights.push_back(0.02);
  }
  SimConfig sim;
  sim.population = 10000;
  sim.days = 15;
  sim.initial_observed = {10, 0, 0};
  const auto band = cmd_predict(pop, sim, 5, 4);
  for (int d = 0; d < band.days(); ++d) {
    for (const auto* series : {&band.A, &band.R, &band.D}) {
      CHECK((*series)[d][0] >= (*series)[d][1]);
      CHECK((*series)[d][0] <= (*series)[d][2]);
    }
  }
}

TEST_CASE("cmd_predict rejects tiny populations") {
  ParticlePopulation pop;
  pop.particles.emplace_back();
  pop.weights.push_back(1.0);
  SimConfig sim;
  sim.population = 100;
  sim.days = 3;
  CHECK_THROWS_AS(cmd_predict(pop, sim, 1, 0), std::invalid_argument);
}

TEST_CASE("cmd_report on hand-built traces") {
  TempDir tmp;
  auto write_trace = [&](const std::string& name, KernelKind kind,
                         const std::vector<std::array<double, 2>>& rows) {
    const auto path = tmp.path / name;
    append_trace_header(path);
    int stage = 0;
    for (const auto& [runs, eps] : rows) {
      StageRecord r;
      r.stage_index = stage++;
      r.epsilon = eps;
      r.simulation_runs_used = static_cast<std::int64_t>(runs);
      r.step_state.kind = kind;
      append_trace_row(path, 0, r);
    }
    return path;
  };

  const auto mcmc = write_trace("m_trace.tsv", KernelKind::mcmc,
                                {{100, 8.0}, {200, 4.0}, {300, 2.0}});
  const auto bdss = write_trace("b_trace.tsv", KernelKind::bdss,
                                {{100, 3.5}, {200, 2.5}, {300, 2.0}});

  SUBCASE("runs-to-threshold picks the first row at or under T") {
    const auto summary = cmd_report({mcmc, bdss}, 4.0);
    REQUIRE(summary.stats.size() == 2);
    for (const auto& s : summary.stats) {
      REQUIRE(s.runs_to_threshold.size() == 1);
      REQUIRE(s.runs_to_threshold[0].has_value());
      if (s.kernel == KernelKind::mcmc) {
        CHECK(*s.runs_to_threshold[0] == 200);
      } else {
        CHECK(*s.runs_to_threshold[0] == 100);
      }
    }
  }
  SUBCASE("identical traces give unit ratios") {
    const auto bdss_copy = write_trace("b2_trace.tsv", KernelKind::bdss,
                                       {{100, 8.0}, {200, 4.0}, {300, 2.0}});
    const auto summary = cmd_report({mcmc, bdss_copy}, 4.0);
    REQUIRE(summary.comparisons.size() == 1);
    CHECK(summary.comparisons[0].runs_ratio == doctest::Approx(1.0));
  }
  SUBCASE("single-trial variance is undefined, not zero") {
    const auto summary = cmd_report({mcmc}, 4.0);
    REQUIRE(summary.stats.size() == 1);
    CHECK_FALSE(summary.stats[0].var_final_epsilon.has_value());
  }
  SUBCASE("unreached threshold is reported as absent") {
    const auto summary = cmd_report({mcmc}, 0.5);
    CHECK_FALSE(summary.stats[0].runs_to_threshold[0].has_value());
  }
}

TEST_CASE("cmd_report refuses mismatched configs") {
  const auto observed = observed_fixture();
  TempDir tmp;
  auto spec = small_spec();
  cmd_infer(spec, observed, tmp.path);
  auto other = spec;
  other.base.run_budget = 999;
  TempDir tmp2;
  cmd_infer(other, observed, tmp2.path);
  CHECK_THROWS_WITH_AS(
      cmd_report({tmp.path / "bdss_B20_t0_trace.tsv",
                  tmp2.path / "bdss_B20_t0_trace.tsv"},
                 1.0),
      doctest::Contains("refusing"), std::runtime_error);
}

TEST_CASE("cmd_bench accounts simulation time within the total") {
  const auto observed = observed_fixture();
  auto spec = small_spec();
  const auto cells = cmd_bench(spec, observed);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].sim_seconds > 0.0);
  CHECK(cells[0].sim_seconds <= cells[0].total_seconds);
  CHECK(cells[0].sim_fraction > 0.0);
  CHECK(cells[0].sim_fraction <= 1.0);
}
