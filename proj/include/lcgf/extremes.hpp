#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lcgf/field_spec.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf {

/// sqrt(2d) log N - 3/(2 sqrt(2d)) log log N. Needs N >= 3.
double m_n(double side, int dim);

struct MaxStat {
  double max_value = 0.0;
  LatticePoint argmax;
  /// max_value - m_N; NaN when N < 3.
  double centered = 0.0;
};

/// Ties go to the lowest row-major index.
MaxStat max_stat(std::span<const double> values, const Shape& shape);
MaxStat max_stat(const SampledField& field);

struct PairMaxStat {
  double value = 0.0;
  LatticePoint u;
  LatticePoint v;
  int r = 0;
};

/// Squared Euclidean distance between two lattice points.
long long distance_sq(const LatticePoint& u, const LatticePoint& v);

/// r <= |u - v| <= N / r.
bool in_closed_annulus(long long dist_sq, int r, int side);
/// r < |u - v| < N / r.
bool in_open_annulus(long long dist_sq, int r, int side);

/// max of phi_u + phi_v over pairs with r <= |u - v| <= N / r.
/// Throws DomainError when no pair of V_N qualifies.
PairMaxStat restricted_pair_max(std::span<const double> values, const Shape& shape, int r);
PairMaxStat restricted_pair_max(const SampledField& field, int r);

struct NearMaxReport {
  int r = 0;
  double c = 0.0;
  double threshold = 0.0;
  std::size_t pair_count = 0;
  /// At most `example_cap` pairs, in scan order.
  std::vector<std::pair<LatticePoint, LatticePoint>> examples;
};

/// Unordered pairs with r < |u - v| < N / r and both values >= m_N - c log log r.
NearMaxReport near_max_pairs(std::span<const double> values, const Shape& shape, int r, double c,
                             std::size_t example_cap = 16);
NearMaxReport near_max_pairs(const SampledField& field, int r, double c, std::size_t example_cap = 16);

/// Half-open box lo <= p < hi.
struct Region {
  LatticePoint lo;
  LatticePoint hi;

  bool contains(const LatticePoint& p) const;
};

struct DerivativeMartingaleValue {
  double z = 0.0;
  std::optional<Region> subset;
};

/// Z_{N,A} = sum over A of (sqrt(2d) log N - phi_v) e^{-sqrt(2d)(sqrt(2d) log N - phi_v)},
/// Neumaier-compensated. A defaults to V_N.
DerivativeMartingaleValue derivative_martingale(std::span<const double> values, const Shape& shape,
                                                const std::optional<Region>& subset = std::nullopt);
DerivativeMartingaleValue derivative_martingale(const SampledField& field,
                                                const std::optional<Region>& subset = std::nullopt);

/// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace lcgf
