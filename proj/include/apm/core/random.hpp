#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace apm::core {

// Seeding scheme: every sampled object carries one explicit 64-bit seed.
// Child seeds derive from a run-level root as
//   derive_seed(root, tag, index) = splitmix64(splitmix64(root ^ fnv1a64(tag)) ^ index)
// where `tag` names the object kind ("mapping", "user", ...) and `index` is a
// per-kind counter. The chain is stable across platforms and runs.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a64(tag)) ^ index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  // Inclusive bounds.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  bool bernoulli(double p = 0.5) { return std::bernoulli_distribution(p)(engine_); }

  int sign() { return bernoulli(0.5) ? 1 : -1; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace apm::core
