#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace stcis {

// Seed-stream split: a stream's seed is splitmix64(seed ^ stream).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ stream);
}

// Stream tags for the named seed streams; session streams use the session
// index itself (1..T).
namespace streams {
inline constexpr std::uint64_t kAuxPool = 0xA0000001ULL;
inline constexpr std::uint64_t kTestSet = 0xA0000002ULL;
inline constexpr std::uint64_t kInit = 0xA0000003ULL;
inline constexpr std::uint64_t kTrainOrder = 0xA0000004ULL;
inline constexpr std::uint64_t kProbe = 0xA0000005ULL;
}  // namespace streams

// Thin wrapper over mt19937_64 with distribution code written out so that
// sequences do not depend on the standard library's distribution choices.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(engine_() % i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stcis
