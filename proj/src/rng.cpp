#include "pabc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pabc {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), counter_(0) {
  base_ = mix64(mix64(seed + kGolden) ^ mix64(stream_id + kStreamSalt));
}

std::uint64_t RngStream::next_u64() {
  return mix64(base_ + (counter_++) * kGolden);
}

BetaShape::BetaShape(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("BetaShape: shape parameters must be > 0");
  }
}

double uniform(RngStream& stream) {
  return static_cast<double>(stream.next_u64() >> 11) * 0x1.0p-53;
}

double normal(RngStream& stream, double mean, double std_dev) {
  if (std_dev < 0.0) {
    throw std::invalid_argument("normal: negative standard deviation");
  }
  if (std_dev == 0.0) return mean;
  // u1 shifted into (0,1] so the log is finite
  double u1 = static_cast<double>((stream.next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform(stream);
  double z = std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * std::numbers::pi * u2);
  return mean + std_dev * z;
}

std::array<double, 2> normal_pair(RngStream& stream) {
  double u1 = static_cast<double>((stream.next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform(stream);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double gamma_variate(RngStream& stream, double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma_variate: shape must be > 0");
  }
  if (shape < 1.0) {
    double u = uniform(stream);
    u = std::max(u, std::numeric_limits<double>::min());
    return gamma_variate(stream, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal(stream, 0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform(stream);
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (std::log(std::max(u, std::numeric_limits<double>::min())) <
        0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double beta_variate(RngStream& stream, const BetaShape& shape) {
  const double x = gamma_variate(stream, shape.alpha);
  const double y = gamma_variate(stream, shape.beta);
  double r = x / (x + y);
  // keep strictly inside (0,1) even for extreme shapes
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return std::clamp(r, lo, hi);
}

std::size_t categorical(RngStream& stream, std::span<const double> weights) {
  if (weights.empty()) {
    throw std::invalid_argument("categorical: empty weight vector");
  }
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) {
      throw std::invalid_argument("categorical: negative weight");
    }
    total += weights[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("categorical: weights sum to zero");
  }
  const double target = uniform(stream) * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

RngStream make_stream(std::uint64_t seed, StreamPurpose purpose,
                      std::uint64_t index) {
  const auto tag = static_cast<std::uint64_t>(purpose);
  return RngStream(seed, mix64(tag * kGolden + 1) ^ index);
}

}  // namespace pabc
