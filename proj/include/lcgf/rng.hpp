#pragma once

// Counter-based seeding. Every Gaussian draw in the library is identified by
// (seed, stream tag, a, b) and a position inside that stream, so results do
// not depend on thread scheduling.
//
// Streams are std::mt19937_64 engines seeded with a splitmix64 hash of the
// identifiers; normals come from Boost's ziggurat normal_distribution. Both are
// fully specified algorithms, so a given build produces bit-identical fields
// on every platform with IEEE doubles.

#include <cstdint>
#include <random>
#include <span>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace lcgf {

enum class StreamTag : std::uint64_t {
  kBrwLevel = 1,
  kMbrwLevel = 2,
  kDense = 3,
  kPerturbSmall = 4,
  kPerturbLarge = 5,
  kXiCoarse = 6,
  kXiBottom = 7,
  kXiMbrw = 8,
  kXiCorrection = 9,
  kGStarBernoulli = 10,
  kGStarY = 11,
  kGStarZ = 12,
  kScalar = 13,
  kPerturbation = 14,
  kMixture = 15,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive combination of two words.
std::uint64_t hash64(std::uint64_t a, std::uint64_t b);

/// Seed of the stream identified by (seed, tag, a, b).
std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                          std::uint64_t b = 0);

/// Seed of replica `index` under `master`.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
  return hash64(master, index);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0)
      : engine_(stream_seed(seed, tag, a, b)) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace lcgf
