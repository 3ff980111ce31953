#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "pabc/epi_model.hpp"
#include "pabc/rng.hpp"

namespace pabc {

struct CaseDataSeries {
  std::int64_t population = 0;
  std::vector<std::int64_t> A;
  std::vector<std::int64_t> R;
  std::vector<std::int64_t> D;

  int days() const { return static_cast<int>(A.size()); }
  // Throws std::invalid_argument on ragged series, negative entries,
  // entries above population, or non-monotone R/D.
  void validate() const;
};

struct Particle {
  std::array<double, 8> theta_unit{};
  ParameterVector theta_natural;
  double distance = std::numeric_limits<double>::infinity();
};

constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

// Normalized Euclidean distance: each of A/R/D scaled by its observed
// maximum, the norm divided by sqrt(3*days). Requires the trajectory's
// per-day count (including day 0) to equal observed.days(). Invalid
// trajectories map to +infinity.
double distance(const EpiTrajectory& simulated, const CaseDataSeries& observed);

struct RejectionResult {
  std::vector<Particle> particles;
  std::int64_t simulation_runs = 0;
  std::vector<int> batch_accept_counts;
  bool complete = true;  // false when the budget ran out before N accepted
  double wall_seconds = 0.0;
  double sim_seconds = 0.0;  // time spent inside simulate_batch
};

// Plain ABC rejection: uniform unit-cube draws, batch simulation, accept
// distance <= epsilon until N accepted or run_budget simulations spent.
// stream_offset shifts the per-run stream indices so successive phases of
// one inference run never reuse a stream.
RejectionResult abc_rejection(std::uint64_t seed,
                              const CaseDataSeries& observed,
                              const SimConfig& sim_config, double epsilon,
                              int target_count, int batch_size,
                              std::int64_t run_budget, int num_workers = 1,
                              std::uint64_t stream_offset = 0);

}  // namespace pabc
