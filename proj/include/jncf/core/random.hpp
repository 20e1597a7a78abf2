#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace jncf {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x5851F42D4C957F2DULL));
}

// Stream tags so that e.g. init and shuffling never share a generator.
enum class SeedStream : std::uint64_t {
  init = 1,
  shuffle = 2,
  train_negatives = 3,
  eval_negatives = 4,
  validation_negatives = 5,
  sparsify = 6,
  bpr = 7,
};

inline Rng make_rng(std::uint64_t seed, SeedStream stream, std::uint64_t sub = 0) {
  return Rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(stream)), sub));
}

inline void fill_normal(std::span<double> out, double mean, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  for (double& x : out) x = dist(rng);
}

}  // namespace jncf
