#include "pabc/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "pabc/parallel.hpp"

namespace pabc {

std::string to_string(KernelKind kind) {
  return kind == KernelKind::mcmc ? "mcmc" : "bdss";
}

KernelKind kernel_from_string(const std::string& name) {
  if (name == "mcmc") return KernelKind::mcmc;
  if (name == "bdss") return KernelKind::bdss;
  throw std::invalid_argument("unknown kernel: " + name);
}

double next_tolerance(std::span<const double> distances,
                      double survival_ratio) {
  if (distances.empty()) {
    throw std::invalid_argument("next_tolerance: empty distance list");
  }
  if (!(survival_ratio > 0.0) || !(survival_ratio < 1.0)) {
    throw std::invalid_argument("next_tolerance: survival ratio not in (0,1)");
  }
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = survival_ratio * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<double> population_weights(const std::vector<Particle>& particles,
                                       double epsilon) {
  const std::size_t n = particles.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (!std::isfinite(epsilon)) return w;  // accept-all stage: uniform
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = epsilon - particles[k].distance;
    total += w[k];
  }
  if (total > 0.0) {
    for (auto& x : w) x /= total;
  } else {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
  }
  return w;
}

}  // namespace

ParticlePopulation build_stage_prior(const ParticlePopulation& prev,
                                     double epsilon_next) {
  ParticlePopulation prior;
  prior.stage_index = prev.stage_index + 1;
  prior.epsilon = epsilon_next;
  for (const auto& p : prev.particles) {
    if (p.distance < epsilon_next) prior.particles.push_back(p);
  }
  if (prior.particles.empty()) {
    throw DegenerateStageError("build_stage_prior: no surviving particles");
  }
  prior.weights = population_weights(prior.particles, epsilon_next);
  return prior;
}

std::vector<std::size_t> resample(RngStream& stream,
                                  const ParticlePopulation& population,
                                  int count) {
  std::vector<std::size_t> parents(count);
  for (int b = 0; b < count; ++b) {
    parents[b] = categorical(stream, population.weights);
  }
  return parents;
}

bool in_unit_cube(const std::array<double, 8>& theta_unit) {
  for (double x : theta_unit) {
    if (x < 0.0 || x > 1.0) return false;
  }
  return true;
}

McmcProposal perturb_mcmc(RngStream& stream,
                          const std::array<double, 8>& parent, double step) {
  McmcProposal proposal;
  proposal.theta_unit = perturb_bdss(stream, parent, step);
  // Uniform prior, symmetric Gaussian: A_M is 1 inside the cube, 0 outside.
  proposal.accepted = in_unit_cube(proposal.theta_unit);
  return proposal;
}

std::array<double, 8> perturb_bdss(RngStream& stream,
                                   const std::array<double, 8>& parent,
                                   double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("perturb: step must be > 0");
  }
  std::array<double, 8> proposal;
  for (int k = 0; k < 8; ++k) {
    proposal[k] = parent[k] + normal(stream, 0.0, step);
  }
  return proposal;
}

StepSizeState tune_step_mcmc(const StepSizeState& state, std::int64_t accepted,
                             std::int64_t attempts, double progress) {
  if (attempts < 1) {
    throw std::invalid_argument("tune_step_mcmc: attempts must be >= 1");
  }
  StepSizeState next = state;
  next.accept_count += accepted;
  next.attempt_count += attempts;
  if (next.adaptation_frozen) return next;
  if (progress >= kAdaptationWindow) {
    next.adaptation_frozen = true;
    return next;
  }
  const double ratio =
      static_cast<double>(accepted) / static_cast<double>(attempts);
  next.scalar_s =
      state.scalar_s *
      std::exp((ratio - kTargetAcceptance) /
               ((1.0 - kTargetAcceptance) * static_cast<double>(accepted + 1)));
  return next;
}

BetaShape bdss_shape(int stage_index, double epsilon_i, double epsilon_1) {
  if (stage_index < 1) {
    throw std::invalid_argument("bdss_shape: stage index must be >= 1");
  }
  if (!(epsilon_1 > 0.0)) {
    throw DegenerateStageError("bdss_shape: reference tolerance is zero");
  }
  const double alpha = std::max(epsilon_i / epsilon_1, kBdssAlphaFloor);
  return BetaShape(alpha, 2.0 * stage_index);
}

std::vector<double> sample_bdss_steps(std::uint64_t seed,
                                      std::uint64_t slot_base, int stage_index,
                                      double epsilon_i, double epsilon_1,
                                      int count) {
  const BetaShape shape = bdss_shape(stage_index, epsilon_i, epsilon_1);
  std::vector<double> steps(count);
  for (int b = 0; b < count; ++b) {
    auto stream = make_stream(seed, StreamPurpose::step_size, slot_base + b);
    steps[b] = beta_variate(stream, shape);
  }
  return steps;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

ParticlePopulation make_population(std::vector<Particle> particles,
                                   int stage_index, double epsilon) {
  ParticlePopulation pop;
  pop.particles = std::move(particles);
  pop.stage_index = stage_index;
  pop.epsilon = epsilon;
  pop.weights = population_weights(pop.particles, epsilon);
  return pop;
}

}  // namespace

SmcResult run_abc_smc(const SmcConfig& config, const CaseDataSeries& observed,
                      const TraceSink& sink) {
  observed.validate();
  if (observed.days() < 2) {
    throw std::invalid_argument("run_abc_smc: need at least 2 observed days");
  }
  if (config.run_budget < 1) {
    throw std::invalid_argument("run_abc_smc: run budget must be >= 1");
  }
  SimConfig sim;
  sim.population = observed.population;
  sim.days = observed.days() - 1;
  sim.initial_observed = {observed.A[0], observed.R[0], observed.D[0]};
  sim.noise_mode = NoiseMode::stochastic;
  sim.variance_mode = config.variance_mode;

  const auto t_run = std::chrono::steady_clock::now();
  SmcResult result;

  StepSizeState step_state;
  step_state.kind = config.kind;
  step_state.scalar_s = config.initial_step;

  // Stage 0: plain rejection with an infinite tolerance.
  auto rejection = abc_rejection(config.seed, observed, sim, kInfiniteDistance,
                                 config.target_count, config.batch_size,
                                 config.run_budget, config.num_workers, 0);
  result.sim_seconds += rejection.sim_seconds;
  std::int64_t cumulative_runs = rejection.simulation_runs;
  std::uint64_t slot_base = static_cast<std::uint64_t>(cumulative_runs);

  result.population = make_population(std::move(rejection.particles), 0,
                                      kInfiniteDistance);
  {
    StageRecord record;
    record.stage_index = 0;
    record.epsilon = kInfiniteDistance;
    record.simulation_runs_used = cumulative_runs;
    record.acceptance_ratio = 1.0;
    record.step_state = step_state;
    record.wall_seconds = rejection.wall_seconds;
    record.sim_seconds = rejection.sim_seconds;
    if (sink) sink(record);
    result.stages.push_back(record);
  }
  if (!rejection.complete) {
    result.complete = false;
    result.total_seconds = seconds_since(t_run);
    return result;
  }

  auto resample_stream = make_stream(config.seed, StreamPurpose::resample, 0);
  double epsilon_first = -1.0;  // stage-1 tolerance, the BDSS reference point
  const std::int64_t stage_guard =
      std::max<std::int64_t>(2 * config.run_budget,
                             100LL * config.target_count);

  for (int stage = 1; cumulative_runs < config.run_budget; ++stage) {
    if (config.target_tolerance > 0.0 &&
        result.population.epsilon <= config.target_tolerance) {
      break;
    }
    std::vector<double> dists;
    dists.reserve(result.population.particles.size());
    for (const auto& p : result.population.particles) {
      dists.push_back(p.distance);
    }
    const double epsilon = next_tolerance(dists, config.survival_ratio);

    ParticlePopulation prior;
    try {
      prior = build_stage_prior(result.population, epsilon);
      if (config.kind == KernelKind::bdss && epsilon_first < 0.0) {
        epsilon_first = epsilon;
        bdss_shape(stage, epsilon, epsilon_first);  // throws if degenerate
      }
    } catch (const DegenerateStageError&) {
      result.complete = false;
      break;
    }
    if (config.kind == KernelKind::bdss) {
      const auto shape = bdss_shape(stage, epsilon, epsilon_first);
      step_state.beta_alpha = shape.alpha;
      step_state.beta_beta = shape.beta;
    }

    const auto t_stage = std::chrono::steady_clock::now();
    double stage_sim_seconds = 0.0;
    std::int64_t stage_runs = 0;
    std::int64_t stage_attempts = 0;
    std::int64_t stage_accepted = 0;
    std::vector<Particle> accepted;
    bool aborted = false;

    while (static_cast<int>(accepted.size()) < config.target_count) {
      if (stage_runs > stage_guard) {  // acceptance collapsed; bail out
        aborted = true;
        break;
      }
      const int B = config.batch_size;
      const auto parents = resample(resample_stream, prior, B);

      std::vector<double> steps(B, step_state.scalar_s);
      if (config.kind == KernelKind::bdss) {
        steps = sample_bdss_steps(config.seed, slot_base, prior.stage_index,
                                  epsilon, epsilon_first, B);
      }

      std::vector<Particle> batch(B);
      std::vector<char> survives(B, 0);
      for (int b = 0; b < B; ++b) {
        const auto& parent = prior.particles[parents[b]].theta_unit;
        const double sd = config.step_as_variance ? std::sqrt(steps[b])
                                                  : steps[b];
        auto perturb_stream =
            make_stream(config.seed, StreamPurpose::perturb, slot_base + b);
        if (config.kind == KernelKind::mcmc) {
          const auto proposal = perturb_mcmc(perturb_stream, parent, sd);
          batch[b].theta_unit = proposal.theta_unit;
          survives[b] = proposal.accepted;
        } else {
          batch[b].theta_unit = perturb_bdss(perturb_stream, parent, sd);
          survives[b] = in_unit_cube(batch[b].theta_unit);
        }
      }

      std::vector<RngStream> streams;
      std::vector<ParameterVector> thetas;
      std::vector<int> slots;
      for (int b = 0; b < B; ++b) {
        if (!survives[b]) continue;
        batch[b].theta_natural =
            ParameterVector::from_unit(batch[b].theta_unit);
        streams.push_back(
            make_stream(config.seed, StreamPurpose::trajectory, slot_base + b));
        thetas.push_back(batch[b].theta_natural);
        slots.push_back(b);
      }
      const auto t_sim = std::chrono::steady_clock::now();
      auto trajectories =
          simulate_batch(streams, thetas, sim, config.num_workers);
      stage_sim_seconds += seconds_since(t_sim);

      std::int64_t batch_accepted = 0;
      for (std::size_t j = 0; j < slots.size(); ++j) {
        auto& particle = batch[slots[j]];
        particle.distance = distance(trajectories[j], observed);
        if (particle.distance <= epsilon) {
          ++batch_accepted;
          accepted.push_back(particle);
        }
      }

      // A whole batch counts as B simulation runs even when out-of-cube
      // proposals were skipped; this keeps run accounting exact.
      stage_runs += B;
      cumulative_runs += B;
      slot_base += static_cast<std::uint64_t>(B);
      stage_attempts += B;
      stage_accepted += batch_accepted;

      if (config.kind == KernelKind::mcmc) {
        const double progress = static_cast<double>(cumulative_runs) /
                                static_cast<double>(config.run_budget);
        step_state = tune_step_mcmc(step_state, batch_accepted, B, progress);
      }
    }

    if (aborted) {
      result.complete = false;
      break;
    }
    if (static_cast<int>(accepted.size()) > config.target_count) {
      std::stable_sort(accepted.begin(), accepted.end(),
                       [](const Particle& a, const Particle& b) {
                         return a.distance < b.distance;
                       });
      accepted.resize(config.target_count);
    }
    result.population = make_population(std::move(accepted), stage, epsilon);

    StageRecord record;
    record.stage_index = stage;
    record.epsilon = epsilon;
    record.simulation_runs_used = cumulative_runs;
    record.acceptance_ratio = static_cast<double>(stage_accepted) /
                              static_cast<double>(stage_attempts);
    record.step_state = step_state;
    record.wall_seconds = seconds_since(t_stage);
    record.sim_seconds = stage_sim_seconds;
    result.sim_seconds += stage_sim_seconds;
    if (sink) sink(record);
    result.stages.push_back(record);
  }

  result.total_seconds = seconds_since(t_run);
  return result;
}

}  // namespace pabc
