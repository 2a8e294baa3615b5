#include "pathid/rng.hpp"

#include <random>

namespace pathid::rng {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ (a + 0x632be59bd9b4e019ULL));
  return mix64(k ^ (b + 0x8cb92ba72f3d8dd7ULL));
}

CounterEngine::result_type CounterEngine::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

std::int64_t poisson(std::uint64_t key, double mean) {
  if (!(mean > 0.0)) return 0;
  CounterEngine engine(key);
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(engine);
}

} // namespace pathid::rng
