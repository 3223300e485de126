#pragma once

#include <cstdint>
#include <initializer_list>

namespace gradshare::util {

/// SplitMix64 finalizer. Used both as the stream generator and for key derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a list of integers into one 64-bit stream key.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept;

// Counter-based generator: the i-th draw is mix64(key + i * golden). Two streams
// with different keys are independent, and any draw can be reproduced from
// (key, counter) alone, which keeps parallel sampling reproducible.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : key_(key) {}
  Stream(std::initializer_list<std::uint64_t> parts) noexcept : key_(derive_key(parts)) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; no cached second value so draws stay counter-addressable.
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gradshare::util
