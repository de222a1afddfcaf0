#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lcgf/field_spec.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf {

/// Two-scale box noise: sigma1 g_{B_{v,r1}} + sigma2 g_{B_{v,N/r2}}.
struct BoxPerturbation {
  int r1 = 1;
  int r2 = 1;
  double sigma1 = 0.0;
  double sigma2 = 0.0;

  double norm_sq() const { return sigma1 * sigma1 + sigma2 * sigma2; }
  /// Side of the large boxes, floor(N / r2).
  int large_side(int side) const { return side / r2; }
  void validate(int side) const;
};

/// Adds one N(0,1) per box of each scale. Boxes of side s partition
/// V_{floor(N/s) s} from the origin; sites outside keep their value at that scale.
SampledField perturbed_field(const SampledField& field, const BoxPerturbation& p, std::uint64_t seed);

/// field + sqrt(||sigma||^2 / log N) field_prime.
SampledField scaled_mix_field(const SampledField& field, const SampledField& field_prime,
                              const BoxPerturbation& sigma);

/// a_N = sqrt(1 + ||sigma||^2 / log N).
double mix_scale(const BoxPerturbation& sigma, int side);

/// ||sigma||^2 sqrt(d/2).
double predicted_shift(const BoxPerturbation& p, int dim);

struct ShiftResult {
  int side = 0;
  int r1 = 0;
  int r2 = 0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double base_mean = 0.0;
  double perturbed_mean = 0.0;
  double mean_gap = 0.0;
  double predicted = 0.0;
  /// Standard error of the paired mean gap.
  double stderr_gap = 0.0;
  std::size_t replicas = 0;

  double error() const;
};

/// Mean max of the perturbed field minus mean max of the base field, over
/// replicas with seeds hash64(master, i). Needs replicas >= 100.
ShiftResult shift_check(const FieldSpec& spec, const BoxPerturbation& p, std::size_t replicas,
                        std::uint64_t master_seed, int workers = 1);

/// Several perturbations against the same base fields.
std::vector<ShiftResult> shift_check(const FieldSpec& spec, std::span<const BoxPerturbation> ps,
                                     std::size_t replicas, std::uint64_t master_seed, int workers = 1);

/// N, r1, r2, sigma1, sigma2, mean_gap, predicted, stderr.
void write_shift_csv(std::ostream& os, std::span<const ShiftResult> rows);

}  // namespace lcgf
