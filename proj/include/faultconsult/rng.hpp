#pragma once

#include <cstdint>
#include <optional>

namespace faultconsult {

// SplitMix64 finalizer (Steele, Lea & Flood): a bijective 64-bit mixer.
std::uint64_t splitmix64_mix(std::uint64_t z);

// Sub-seed for item `index` of a batch seeded with `seed`; independent of the
// order in which items are generated.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Counter-based uniform generator: draw k (k = 1, 2, ...) is
// splitmix64_mix(key + k * 0x9E3779B97F4A7C15) with key = splitmix64_mix(seed ^ stream).
// Gaussians use the Marsaglia polar method; both variates of an accepted
// pair are used, the second on the following call.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, bound); bound > 0. Rejection-sampled, unbiased.
  std::uint64_t below(std::uint64_t bound);
  double normal(double mean, double stddev);

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

}  // namespace faultconsult
