#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lcgf/covariance.hpp"
#include "lcgf/field_spec.hpp"

namespace lcgf {

/// One realization of a field on V_N.
struct SampledField {
  FieldSpec spec;
  /// Row-major values, length N^d.
  std::vector<double> values;
  std::uint64_t seed = 0;
  /// MBRW only, when requested: levels[j][v] is the level-j contribution at v.
  std::vector<std::vector<double>> levels;

  Shape shape() const { return spec.shape(); }
  double at(const LatticePoint& p) const { return values[shape().index(p)]; }
};

/// Upper bound on N^d for the lattice samplers.
inline constexpr std::size_t kMaxSampleVolume = std::size_t{1} << 22;

SampledField sample_brw(const FieldSpec& spec, std::uint64_t seed);
SampledField sample_mbrw(const FieldSpec& spec, std::uint64_t seed, bool retain_levels = false);
/// x = L g with g i.i.d. standard normal.
std::vector<double> sample_dense(const CholeskyFactor& factor, std::uint64_t seed);

/// In-place periodic moving sum along every axis of a d-dimensional cube of
/// side `side`: out(z) = sum over c in z - [0, window)^d (mod side) of in(c).
void periodic_box_sum(std::span<double> data, int dim, int side, int window);

/// Prepared sampler for one FieldSpec. Immutable after construction, so one
/// instance can be shared by many threads.
class FieldSampler {
 public:
  explicit FieldSampler(FieldSpec spec);
  ~FieldSampler();
  FieldSampler(FieldSampler&&) noexcept;
  FieldSampler& operator=(FieldSampler&&) noexcept;

  SampledField sample(std::uint64_t seed, bool retain_levels = false) const;
  const FieldSpec& spec() const { return spec_; }

 private:
  FieldSpec spec_;
  std::shared_ptr<const CholeskyFactor> factor_;
  struct XiState;
  std::shared_ptr<const XiState> xi_;
};

/// R replicas of one field description with per-replica seeds hash64(master, index).
struct ReplicaPlan {
  FieldSpec spec;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;

  std::uint64_t seed_of(std::size_t index) const;
};

}  // namespace lcgf
