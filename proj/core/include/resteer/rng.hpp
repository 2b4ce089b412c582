#pragma once

#include <cmath>
#include <cstdint>

namespace resteer {

// Stream ids keep independent consumers replayable under one experiment seed.
namespace streams {
inline constexpr uint64_t kInit = 1;
inline constexpr uint64_t kDiffusionNoise = 2;
inline constexpr uint64_t kSampling = 3;
inline constexpr uint64_t kCorpus = 4;
inline constexpr uint64_t kInversion = 5;
inline constexpr uint64_t kForget = 6;
inline constexpr uint64_t kTrain = 7;
inline constexpr uint64_t kMetrics = 8;
}  // namespace streams

// Counter-based generator (splitmix64 over seed+stream derived base).
// Draw i depends only on (seed, stream, i), so any consumer can be replayed
// in isolation and child streams never collide with the parent.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream)
      : base_(mix(mix(seed + 0x9e3779b97f4a7c15ull) ^ mix(stream))) {}

  uint64_t next_u64() { return mix(base_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // [0, n)
  int64_t uniform_index(int64_t n) { return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Independent derived stream; children with distinct keys never overlap.
  Rng child(uint64_t key) const { return Rng(mix(base_ ^ mix(key + 0x632be59bd9b4e019ull))); }

 private:
  explicit Rng(uint64_t base) : base_(base) {}

  static uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  uint64_t base_;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace resteer
