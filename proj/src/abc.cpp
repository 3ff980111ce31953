#include "pabc/abc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "pabc/parallel.hpp"

namespace pabc {

void CaseDataSeries::validate() const {
  const std::size_t n = A.size();
  if (R.size() != n || D.size() != n) {
    throw std::invalid_argument("CaseDataSeries: ragged series");
  }
  for (std::size_t d = 0; d < n; ++d) {
    if (A[d] < 0 || R[d] < 0 || D[d] < 0) {
      throw std::invalid_argument("CaseDataSeries: negative count at day " +
                                  std::to_string(d));
    }
    if (A[d] > population || R[d] > population || D[d] > population) {
      throw std::invalid_argument(
          "CaseDataSeries: count exceeds population at day " +
          std::to_string(d));
    }
    if (d > 0 && (R[d] < R[d - 1] || D[d] < D[d - 1])) {
      throw std::invalid_argument(
          "CaseDataSeries: cumulative series decreases at day " +
          std::to_string(d));
    }
  }
}

namespace {

double series_scale(const std::vector<std::int64_t>& xs) {
  std::int64_t m = 0;
  for (auto x : xs) m = std::max(m, x);
  return m > 0 ? static_cast<double>(m) : 1.0;
}

}  // namespace

double distance(const EpiTrajectory& simulated,
                const CaseDataSeries& observed) {
  if (!simulated.valid) return kInfiniteDistance;
  const int days = observed.days();
  if (static_cast<int>(simulated.observed.size()) != days) {
    throw std::invalid_argument("distance: day-count mismatch");
  }
  const double sa = series_scale(observed.A);
  const double sr = series_scale(observed.R);
  const double sd = series_scale(observed.D);
  double sum = 0.0;
  for (int d = 0; d < days; ++d) {
    const auto& sim = simulated.observed[d];
    const double da = static_cast<double>(sim.A - observed.A[d]) / sa;
    const double dr = static_cast<double>(sim.R - observed.R[d]) / sr;
    const double dd = static_cast<double>(sim.D - observed.D[d]) / sd;
    sum += da * da + dr * dr + dd * dd;
  }
  return std::sqrt(sum) / std::sqrt(3.0 * days);
}

RejectionResult abc_rejection(std::uint64_t seed,
                              const CaseDataSeries& observed,
                              const SimConfig& sim_config, double epsilon,
                              int target_count, int batch_size,
                              std::int64_t run_budget, int num_workers,
                              std::uint64_t stream_offset) {
  if (target_count < 1 || batch_size < 1) {
    throw std::invalid_argument("abc_rejection: N and B must be >= 1");
  }
  RejectionResult result;
  std::vector<Particle> accepted;
  std::uint64_t slot_base = stream_offset;
  const auto t_start = std::chrono::steady_clock::now();
  while (static_cast<int>(accepted.size()) < target_count &&
         result.simulation_runs < run_budget) {
    const int B = batch_size;
    std::vector<ParameterVector> thetas(B);
    std::vector<Particle> batch(B);
    std::vector<RngStream> streams(B);
    for (int b = 0; b < B; ++b) {
      auto draw = make_stream(seed, StreamPurpose::prior_draw, slot_base + b);
      for (int k = 0; k < 8; ++k) batch[b].theta_unit[k] = uniform(draw);
      batch[b].theta_natural = ParameterVector::from_unit(batch[b].theta_unit);
      thetas[b] = batch[b].theta_natural;
      streams[b] = make_stream(seed, StreamPurpose::trajectory, slot_base + b);
    }
    const auto t_sim = std::chrono::steady_clock::now();
    auto trajectories = simulate_batch(streams, thetas, sim_config, num_workers);
    result.sim_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_sim)
            .count();
    int batch_accepts = 0;
    for (int b = 0; b < B; ++b) {
      batch[b].distance = distance(trajectories[b], observed);
      if (batch[b].distance <= epsilon) {
        ++batch_accepts;
        accepted.push_back(batch[b]);
      }
    }
    result.batch_accept_counts.push_back(batch_accepts);
    result.simulation_runs += B;
    slot_base += B;
  }
  // Whole batches always run; when the last batch overshoots, keep the
  // lowest-distance particles.
  if (static_cast<int>(accepted.size()) > target_count) {
    std::stable_sort(accepted.begin(), accepted.end(),
                     [](const Particle& a, const Particle& b) {
                       return a.distance < b.distance;
                     });
    accepted.resize(target_count);
  }
  result.complete = static_cast<int>(accepted.size()) == target_count;
  result.particles = std::move(accepted);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace pabc
