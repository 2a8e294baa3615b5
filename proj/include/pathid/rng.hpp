#pragma once

#include <cstdint>
#include <limits>

namespace pathid::rng {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream key from a user seed and two counters
/// (e.g. resample index and record index).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Counter-based generator: the n-th output is mix64(key + n * golden).
/// Streams with different keys are independent, so draws do not depend on
/// the order (or thread) in which records are processed.
class CounterEngine {
public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Poisson(mean) draw from the stream identified by key.
std::int64_t poisson(std::uint64_t key, double mean);

} // namespace pathid::rng
