#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pdsim/params.hpp"

namespace pdsim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream tags. Every random quantity in the simulator is drawn from a
/// stream keyed by (seed, tag, substream), so any stream can be replayed
/// independently of the others.
enum class StreamTag : std::uint64_t {
  synapse_source = 1,
  synapse_attributes = 2,
  initial_potential = 3,
  thalamic = 4,
  stats_sample = 5,
  test = 99,
};

/// Counter-based 64-bit generator: output k is mix64(key + k * golden).
__extension__ typedef unsigned __int128 uint128_t;

class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  Rng(std::uint64_t seed, StreamTag tag, std::uint64_t substream = 0) noexcept
      : key_(mix64(mix64(seed ^ 0x6a09e667f3bcc908ULL) +
                   static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL +
                   mix64(substream + 0x3c6ef372fe94f82bULL))) {}

  std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// 53-bit uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// 53-bit uniform in (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n) (Lemire's multiply-and-reject). n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    uint128_t m = static_cast<uint128_t>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128_t>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(const Gaussian& g) noexcept { return g.mean + g.sd * normal(); }

  /// Poisson variate. Inversion for lambda < 10, rounded normal otherwise.
  /// `exp_neg_lambda` must equal exp(-lambda).
  std::uint32_t poisson(double lambda, double exp_neg_lambda) noexcept {
    if (lambda <= 0.0) return 0;
    if (lambda >= 10.0) {
      const double x = std::round(lambda + std::sqrt(lambda) * normal());
      return x <= 0.0 ? 0u : static_cast<std::uint32_t>(x);
    }
    const double u = uniform();
    std::uint32_t k = 0;
    double p = exp_neg_lambda;
    double cdf = p;
    // The cap bounds the loop when cdf saturates below u through rounding.
    const auto cap = static_cast<std::uint32_t>(12.0 * lambda + 40.0);
    while (u >= cdf && k < cap) {
      ++k;
      p *= lambda / k;
      cdf += p;
    }
    return k;
  }

  std::uint32_t poisson(double lambda) noexcept { return poisson(lambda, std::exp(-lambda)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pdsim
