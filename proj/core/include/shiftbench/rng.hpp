#pragma once

#include <cstdint>
#include <limits>

namespace shiftbench {

/// Counter-based 64-bit generator, "shiftbench-ctr64 v1": output n is the
/// SplitMix64 finalizer applied to key + (n + 1) * golden_gamma, with the key
/// itself a finalized seed. Draws depend only on (seed, counter), so streams
/// are reproducible across platforms and can be skipped ahead freely.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* kName = "shiftbench-ctr64";
  static constexpr int kVersion = 1;

  explicit CounterRng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;
  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1); safe to take the log of.
  double uniform_open() noexcept;
  /// Uniform integer in [0, bound), bias-free.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;
  /// log of a Gamma(shape, 1) draw (Marsaglia-Tsang; boosted for shape < 1).
  double log_gamma_draw(double shape) noexcept;
  double gamma(double shape) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of seed components into one seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

}  // namespace shiftbench
