#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pabc/abc.hpp"
#include "pabc/epi_model.hpp"
#include "pabc/rng.hpp"

namespace pabc {

enum class KernelKind { mcmc, bdss };

std::string to_string(KernelKind kind);
KernelKind kernel_from_string(const std::string& name);

struct ParticlePopulation {
  std::vector<Particle> particles;
  std::vector<double> weights;  // normalized; uniform when epsilon is +inf
  int stage_index = 0;
  double epsilon = kInfiniteDistance;
};

struct StepSizeState {
  KernelKind kind = KernelKind::mcmc;
  double scalar_s = 0.1;          // MCMC only, unit-cube scale
  double beta_alpha = 1.0;        // BDSS only
  double beta_beta = 2.0;         // BDSS only
  bool adaptation_frozen = false; // MCMC only
  std::int64_t accept_count = 0;
  std::int64_t attempt_count = 0;
};

struct StageRecord {
  int stage_index = 0;
  double epsilon = kInfiniteDistance;
  std::int64_t simulation_runs_used = 0;  // cumulative over the whole run
  double acceptance_ratio = 0.0;
  StepSizeState step_state;
  double wall_seconds = 0.0;
  double sim_seconds = 0.0;
};

struct DegenerateStageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// survival_ratio-quantile (linear interpolation) of the distances.
double next_tolerance(std::span<const double> distances, double survival_ratio);

// Survivors with distance strictly below epsilon_next, weighted by
// epsilon_next - distance. Throws DegenerateStageError on zero survivors.
ParticlePopulation build_stage_prior(const ParticlePopulation& prev,
                                     double epsilon_next);

// count weighted categorical draws; returns parent indices.
std::vector<std::size_t> resample(RngStream& stream,
                                  const ParticlePopulation& population,
                                  int count);

struct McmcProposal {
  std::array<double, 8> theta_unit{};
  bool accepted = false;  // Metropolis outcome; false iff outside the cube
};

// Gaussian random walk with scalar step (std dev in unit-cube space).
// Uniform prior + symmetric proposal collapse the Metropolis ratio to the
// in-cube indicator.
McmcProposal perturb_mcmc(RngStream& stream,
                          const std::array<double, 8>& parent, double step);

// BDSS walk: same Gaussian move, no Metropolis test. Cube membership is
// checked by the caller.
std::array<double, 8> perturb_bdss(RngStream& stream,
                                   const std::array<double, 8>& parent,
                                   double step);

bool in_unit_cube(const std::array<double, 8>& theta_unit);

// s_new = s_old * exp((A - A_T) / ((1 - A_T)(accepted + 1))), A_T = 0.234,
// active only while progress < 0.10; after that the step is frozen.
StepSizeState tune_step_mcmc(const StepSizeState& state, std::int64_t accepted,
                             std::int64_t attempts, double progress);

inline constexpr double kTargetAcceptance = 0.234;
inline constexpr double kAdaptationWindow = 0.10;
inline constexpr double kBdssAlphaFloor = 1e-3;

// Beta(alpha = eps_i/eps_1, beta = 2i); alpha floored at kBdssAlphaFloor.
BetaShape bdss_shape(int stage_index, double epsilon_i, double epsilon_1);

std::vector<double> sample_bdss_steps(std::uint64_t seed,
                                      std::uint64_t slot_base, int stage_index,
                                      double epsilon_i, double epsilon_1,
                                      int count);

struct SmcConfig {
  KernelKind kind = KernelKind::bdss;
  int target_count = 1000;      // N
  int batch_size = 100;         // B, degree of parallelism
  double survival_ratio = 0.5;
  std::int64_t run_budget = 0;  // individual simulations
  std::uint64_t seed = 0;
  double initial_step = 0.1;    // s0, MCMC kernel
  double target_tolerance = -1; // stop rule when > 0
  bool step_as_variance = false;
  VarianceMode variance_mode = VarianceMode::poisson;
  int num_workers = 1;
};

struct SmcResult {
  ParticlePopulation population;
  std::vector<StageRecord> stages;
  bool complete = true;
  double total_seconds = 0.0;
  double sim_seconds = 0.0;
};

using TraceSink = std::function<void(const StageRecord&)>;

// Full staged driver: stage 0 is accept-all rejection; later stages shrink
// the tolerance via the survival-ratio quantile until the simulation budget
// is spent (the in-flight stage still finishes) or the target tolerance is
// reached.
SmcResult run_abc_smc(const SmcConfig& config, const CaseDataSeries& observed,
                      const TraceSink& sink = {});

}  // namespace pabc
