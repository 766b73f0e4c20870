#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace chunkbench {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::string_view data);
std::string sha256_hex(std::string_view data);
std::string to_hex(const Sha256Digest& digest);

/// FNV-1a over the bytes, finalized with a splitmix round so that the
/// seed affects every output bit. Stable across platforms.
std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for one named stage of a run ("kmeans", "bootstrap", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

/// Minimal counter-friendly generator satisfying UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
template <class Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) by rejection.
template <class Gen>
std::uint64_t uniform_index(Gen& gen, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

}  // namespace chunkbench
