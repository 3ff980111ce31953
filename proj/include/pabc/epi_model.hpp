#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pabc/rng.hpp"

namespace pabc {

// [alpha0, alpha, n, beta, gamma, delta, eta, kappa]
struct ParameterVector {
  double alpha0 = 0;  // base infection rate
  double alpha = 0;   // infection-rate feedback coefficient
  double n = 0;       // feedback exponent
  double beta = 0;    // recovery rate of confirmed
  double gamma = 0;   // positive-test rate
  double delta = 0;   // fatality rate of confirmed
  double eta = 0;     // testing-effectiveness factor
  double kappa = 0;   // initial unobserved-infected fraction of A0

  static constexpr std::array<double, 8> kLower{0, 0, 0, 0, 0, 0, 0, 0};
  static constexpr std::array<double, 8> kUpper{1, 100, 2, 1, 1, 1, 1, 2};

  static ParameterVector from_unit(const std::array<double, 8>& unit);
  std::array<double, 8> to_unit() const;
  std::array<double, 8> to_array() const;
  static ParameterVector from_array(const std::array<double, 8>& natural);
};

struct EpiState {
  std::int64_t S = 0;   // susceptible
  std::int64_t I = 0;   // undocumented infected
  std::int64_t A = 0;   // active confirmed
  std::int64_t R = 0;   // confirmed recovered
  std::int64_t D = 0;   // confirmed deaths
  std::int64_t Ru = 0;  // unconfirmed removed

  std::int64_t total() const { return S + I + A + R + D + Ru; }
  bool operator==(const EpiState&) const = default;
};

enum class NoiseMode { stochastic, deterministic };

// The tau-leaping count sampler: Poisson(h) approximated by a normal with
// mean h. `poisson` uses variance h; `literal` uses variance sqrt(h).
enum class VarianceMode { poisson, literal };

struct ObservedDay {
  std::int64_t A = 0;
  std::int64_t R = 0;
  std::int64_t D = 0;
  bool operator==(const ObservedDay&) const = default;
};

struct SimConfig {
  std::int64_t population = 0;
  int days = 0;
  ObservedDay initial_observed;
  NoiseMode noise_mode = NoiseMode::stochastic;
  VarianceMode variance_mode = VarianceMode::poisson;
  bool record_full = false;
};

struct EpiTrajectory {
  bool valid = true;
  std::vector<ObservedDay> observed;        // day 0 .. days
  std::vector<EpiState> full;               // only when record_full
  int days() const { return static_cast<int>(observed.size()) - 1; }
};

double infection_rate(const ParameterVector& theta, std::int64_t A,
                      std::int64_t R, std::int64_t D);

// Expected daily flows (S->I, I->A, A->R, A->D, I->Ru).
std::array<double, 5> hazard(const ParameterVector& theta,
                             const EpiState& state, std::int64_t population);

// One tau-leaping day: sample flow_k = floor(N(h_k, sqrt(h_k))), clamp to
// [0, source balance], apply in hazard order.
EpiState step_day(RngStream& stream, const ParameterVector& theta,
                  const EpiState& state, std::int64_t population,
                  NoiseMode noise_mode,
                  VarianceMode variance_mode = VarianceMode::poisson);

// Ru=0, I=floor(kappa*A0), S=P-(A0+R0+D0+I). Throws std::invalid_argument
// if S would be negative.
EpiState init_state(const SimConfig& config, const ParameterVector& theta);

EpiTrajectory simulate(RngStream& stream, const ParameterVector& theta,
                       const SimConfig& config);

// Slot b depends only on (thetas[b], streams[b], config); any partition
// across workers yields identical results. An init_state failure marks
// that slot's trajectory invalid instead of throwing.
std::vector<EpiTrajectory> simulate_batch(std::span<RngStream> streams,
                                          std::span<const ParameterVector> thetas,
                                          const SimConfig& config,
                                          int num_workers = 1);

}  // namespace pabc
