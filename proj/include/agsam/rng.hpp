#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace agsam {

// SplitMix64 (Steele/Lea/Flood finalizer). Every random draw in this project
// goes through this generator so that index sequences, datasets and
// trajectories are bit-exact across platforms and languages. The stateless
// finalizer doubles as the stream-derivation hash:
//
//   child_seed = splitmix64_mix(splitmix64_mix(parent_seed) + stream_tag)
//
// Derivation paths are fixed by the Stream tags below (e.g. run seed ->
// kLabelNoise -> noise index draws).
constexpr std::uint64_t splitmix64_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  kTrainData = 1,
  kTestData = 2,
  kLabelNoise = 3,
  kModelInit = 4,
  kEpochShuffle = 5,
  kValidBatch = 6,
  kSliceDirections = 7,
  kSpectrum = 8,
  kPartition = 9,
  kEvalBatch = 10,
};

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53 mantissa bits
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0,1], safe as a log() argument
  double next_unit_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Box-Muller, cosine branch only; consumes exactly two draws per call so
  // the stream position stays predictable.
  double next_gaussian() {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // uniform integer in [0,n), Lemire multiply-shift
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64_mix(splitmix64_mix(seed) + stream);
  }
  static std::uint64_t derive(std::uint64_t seed, Stream stream) {
    return derive(seed, static_cast<std::uint64_t>(stream));
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates over indices [0,n)
inline std::vector<std::size_t> shuffled_indices(std::size_t n,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace agsam
