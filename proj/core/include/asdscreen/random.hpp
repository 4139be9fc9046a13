#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace asdscreen {

// splitmix64 finalizer over (seed, stream); derives independent stream seeds
// such as the per-epoch shuffle seed from (cfg.seed, epoch).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic RNG used for every seeded behaviour in the pipeline.
// Draws are defined right here instead of via std::*_distribution, whose
// sequences differ between standard libraries; this keeps shuffles, head
// initialization and dropout masks replayable bit-for-bit.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). n must be nonzero.
  size_t index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  // Fisher-Yates; the reference shuffle that split and epoch-order oracles
  // replay.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace asdscreen
