#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace pabc {

// Counter-based stream: every draw is a hash of (seed, stream_id, counter),
// so per-slot streams give identical sequences no matter how slots are
// partitioned across worker threads.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
  std::uint64_t base_;  // cached mix of (seed, stream_id)
};

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x);

struct BetaShape {
  double alpha;
  double beta;
  BetaShape(double alpha, double beta);
};

// Uniform on [0,1); consumes one counter tick.
double uniform(RngStream& stream);

// mean + std * Z via Box-Muller; std == 0 returns mean exactly and
// consumes nothing. Throws std::invalid_argument for std < 0.
double normal(RngStream& stream, double mean, double std_dev);

// Both Box-Muller variates from one pair of uniforms; first element matches
// normal(stream, 0, 1) on the same two draws (up to libm sincos rounding).
// For hot loops that need several standard normals per call site.
std::array<double, 2> normal_pair(RngStream& stream);

// Gamma(shape, 1) by Marsaglia-Tsang, with the power boost for shape < 1.
double gamma_variate(RngStream& stream, double shape);

// Beta(alpha, beta) as X/(X+Y) of two Gammas; result strictly in (0,1).
double beta_variate(RngStream& stream, const BetaShape& shape);

// Index i with probability weights[i]/sum(weights). Cumulative sum +
// binary search. Throws on empty or all-zero weights.
std::size_t categorical(RngStream& stream, std::span<const double> weights);

// Distinct stream_id spaces per purpose so a simulation slot and the
// proposal that fed it never share draws.
enum class StreamPurpose : std::uint64_t {
  prior_draw = 1,
  trajectory = 2,
  resample = 3,
  perturb = 4,
  step_size = 5,
  synthetic = 6,
  predictive = 7,
};

RngStream make_stream(std::uint64_t seed, StreamPurpose purpose,
                      std::uint64_t index);

}  // namespace pabc
