#include "pabc/epi_model.hpp"

#include <cmath>
#include <stdexcept>

#include "pabc/parallel.hpp"

namespace pabc {

ParameterVector ParameterVector::from_unit(const std::array<double, 8>& unit) {
  std::array<double, 8> natural;
  for (int i = 0; i < 8; ++i) {
    natural[i] = kLower[i] + unit[i] * (kUpper[i] - kLower[i]);
  }
  return from_array(natural);
}

std::array<double, 8> ParameterVector::to_unit() const {
  const auto natural = to_array();
  std::array<double, 8> unit;
  for (int i = 0; i < 8; ++i) {
    unit[i] = (natural[i] - kLower[i]) / (kUpper[i] - kLower[i]);
  }
  return unit;
}

std::array<double, 8> ParameterVector::to_array() const {
  return {alpha0, alpha, n, beta, gamma, delta, eta, kappa};
}

ParameterVector ParameterVector::from_array(const std::array<double, 8>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

double infection_rate(const ParameterVector& theta, std::int64_t A,
                      std::int64_t R, std::int64_t D) {
  const double cases = static_cast<double>(A + R + D);
  return theta.alpha0 + theta.alpha / (1.0 + std::pow(cases, theta.n));
}

std::array<double, 5> hazard(const ParameterVector& theta,
                             const EpiState& state, std::int64_t population) {
  const double g = infection_rate(theta, state.A, state.R, state.D);
  const double S = static_cast<double>(state.S);
  const double I = static_cast<double>(state.I);
  const double A = static_cast<double>(state.A);
  const double P = static_cast<double>(population);
  return {
      g * S * I / P,           // S -> I
      theta.gamma * I,         // I -> A
      theta.beta * A,          // A -> R
      theta.delta * A,         // A -> D
      theta.beta * theta.eta * I,  // I -> Ru
  };
}

namespace {

std::int64_t floor_flow(double x) {
  const double f = std::floor(x);
  return f <= 0.0 ? 0 : static_cast<std::int64_t>(f);
}

std::int64_t take(std::int64_t& source, std::int64_t flow) {
  const std::int64_t moved = std::min(flow, source);
  source -= moved;
  return moved;
}

}  // namespace

EpiState step_day(RngStream& stream, const ParameterVector& theta,
                  const EpiState& state, std::int64_t population,
                  NoiseMode noise_mode, VarianceMode variance_mode) {
  const auto h = hazard(theta, state, population);
  std::array<std::int64_t, 5> flow{};
  if (noise_mode == NoiseMode::deterministic) {
    for (int k = 0; k < 5; ++k) {
      if (h[k] > 0.0) flow[k] = floor_flow(h[k]);
    }
  } else {
    // flow_k = floor(N(h_k, sd_k)); zero hazards consume no draws, the rest
    // share Box-Muller pairs
    int need[5];
    int m = 0;
    for (int k = 0; k < 5; ++k) {
      if (h[k] > 0.0) need[m++] = k;
    }
    double z[5];
    for (int j = 0; j < m; j += 2) {
      const auto pair = normal_pair(stream);
      z[j] = pair[0];
      if (j + 1 < m) z[j + 1] = pair[1];
    }
    for (int j = 0; j < m; ++j) {
      const int k = need[j];
      const double sd = variance_mode == VarianceMode::poisson
                            ? std::sqrt(h[k])
                            : std::sqrt(std::sqrt(h[k]));
      flow[k] = floor_flow(h[k] + sd * z[j]);
    }
  }
  // Apply in hazard order, clamping to the source's remaining balance.
  EpiState next = state;
  next.I += take(next.S, flow[0]);
  next.A += take(next.I, flow[1]);
  next.R += take(next.A, flow[2]);
  next.D += take(next.A, flow[3]);
  next.Ru += take(next.I, flow[4]);
  return next;
}

EpiState init_state(const SimConfig& config, const ParameterVector& theta) {
  const auto& obs = config.initial_observed;
  EpiState state;
  state.A = obs.A;
  state.R = obs.R;
  state.D = obs.D;
  state.Ru = 0;
  state.I = static_cast<std::int64_t>(
      std::floor(theta.kappa * static_cast<double>(obs.A)));
  state.S = config.population - (obs.A + obs.R + obs.D + state.I);
  if (state.S < 0) {
    throw std::invalid_argument(
        "init_state: initial compartments exceed population");
  }
  return state;
}

EpiTrajectory simulate(RngStream& stream, const ParameterVector& theta,
                       const SimConfig& config) {
  EpiTrajectory traj;
  EpiState state;
  try {
    state = init_state(config, theta);
  } catch (const std::invalid_argument&) {
    traj.valid = false;
    return traj;
  }
  traj.observed.reserve(config.days + 1);
  auto record = [&](const EpiState& s) {
    traj.observed.push_back({s.A, s.R, s.D});
    if (config.record_full) traj.full.push_back(s);
  };
  record(state);
  for (int day = 0; day < config.days; ++day) {
    state = step_day(stream, theta, state, config.population,
                     config.noise_mode, config.variance_mode);
    record(state);
  }
  return traj;
}

std::vector<EpiTrajectory> simulate_batch(std::span<RngStream> streams,
                                          std::span<const ParameterVector> thetas,
                                          const SimConfig& config,
                                          int num_workers) {
  const std::size_t n = thetas.size();
  if (streams.size() != n) {
    throw std::invalid_argument("simulate_batch: streams/thetas size mismatch");
  }
  std::vector<EpiTrajectory> out(n);
  parallel_for(n, num_workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      out[b] = simulate(streams[b], thetas[b], config);
    }
  });
  return out;
}

}  // namespace pabc
