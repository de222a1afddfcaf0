#include "lcgf/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lcgf/error.hpp"

namespace lcgf {

double m_n(double side, int dim) {
  if (!(side > 2.0)) throw DomainError("m_N needs N >= 3, got N = " + std::to_string(side));
  if (dim < 1) throw InputError("dimension must be positive");
  const double s = std::sqrt(2.0 * dim);
  const double log_n = std::log(side);
  return s * log_n - 3.0 / (2.0 * s) * std::log(log_n);
}

MaxStat max_stat(std::span<const double> values, const Shape& shape) {
  if (values.empty()) throw InputError("max_stat: empty field");
  if (values.size() != shape.volume()) throw InputError("max_stat: size mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  MaxStat out;
  out.max_value = values[best];
  out.argmax = shape.point(best);
  out.centered = shape.side() >= 3 ? out.max_value - m_n(shape.side(), shape.dim())
                                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

MaxStat max_stat(const SampledField& field) { return max_stat(field.values, field.shape()); }

long long distance_sq(const LatticePoint& u, const LatticePoint& v) {
  long long s = 0;
  for (int i = 0; i < u.dim(); ++i) {
    const long long t = u[i] - v[i];
    s += t * t;
  }
  return s;
}

bool in_closed_annulus(long long dist_sq, int r, int side) {
  const long long r2 = static_cast<long long>(r) * r;
  const long long n2 = static_cast<long long>(side) * side;
  return r2 <= dist_sq && r2 * dist_sq <= n2;
}

bool in_open_annulus(long long dist_sq, int r, int side) {
  const long long r2 = static_cast<long long>(r) * r;
  const long long n2 = static_cast<long long>(side) * side;
  return r2 < dist_sq && r2 * dist_sq < n2;
}

namespace {

// Some difference vector of V_N satisfies the predicate.
template <typename Pred>
bool annulus_nonempty(const Shape& shape, Pred pred) {
  const LatticePoint origin{std::vector<int>(static_cast<std::size_t>(shape.dim()), 0)};
  for (std::size_t i = 0; i < shape.volume(); ++i) {
    if (pred(distance_sq(shape.point(i), origin))) return true;
  }
  return false;
}

std::vector<std::size_t> descending_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

PairMaxStat restricted_pair_max(std::span<const double> values, const Shape& shape, int r) {
  if (r < 1) throw DomainError("restricted_pair_max needs r >= 1");
  if (values.size() != shape.volume()) throw InputError("restricted_pair_max: size mismatch");
  const int side = shape.side();
  if (!annulus_nonempty(shape, [&](long long d2) { return in_closed_annulus(d2, r, side); })) {
    throw DomainError("no pair satisfies r <= |u-v| <= N/r for r = " + std::to_string(r));
  }
  const std::vector<std::size_t> order = descending_order(values);
  std::vector<LatticePoint> points(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) points[i] = shape.point(order[i]);

  double best = -std::numeric_limits<double>::infinity();
  std::size_t bu = 0;
  std::size_t bv = 0;
  const double top = values[order[0]];
  for (std::size_t i = 1; i < order.size(); ++i) {
    const double vi = values[order[i]];
    // Every pair not yet seen has its lower value at or below vi.
    if (top + vi <= best) break;
    for (std::size_t j = 0; j < i; ++j) {
      const double s = values[order[j]] + vi;
      if (s <= best) break;
      if (in_closed_annulus(distance_sq(points[i], points[j]), r, side)) {
        best = s;
        bu = std::min(order[i], order[j]);
        bv = std::max(order[i], order[j]);
      }
    }
  }
  PairMaxStat out;
  out.value = best;
  out.u = shape.point(bu);
  out.v = shape.point(bv);
  out.r = r;
  return out;
}

PairMaxStat restricted_pair_max(const SampledField& field, int r) {
  return restricted_pair_max(field.values, field.shape(), r);
}

NearMaxReport near_max_pairs(std::span<const double> values, const Shape& shape, int r, double c,
                             std::size_t example_cap) {
  if (r < 3) throw DomainError("near_max_pairs needs r >= 3");
  if (values.size() != shape.volume()) throw InputError("near_max_pairs: size mismatch");
  const int side = shape.side();
  if (!annulus_nonempty(shape, [&](long long d2) { return in_open_annulus(d2, r, side); })) {
    throw DomainError("no pair satisfies r < |u-v| < N/r for r = " + std::to_string(r));
  }
  NearMaxReport out;
  out.r = r;
  out.c = c;
  out.threshold = m_n(side, shape.dim()) - c * std::log(std::log(static_cast<double>(r)));
  std::vector<std::size_t> high;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= out.threshold) high.push_back(i);
  }
  std::vector<LatticePoint> points(high.size());
  for (std::size_t i = 0; i < high.size(); ++i) points[i] = shape.point(high[i]);
  for (std::size_t i = 0; i < high.size(); ++i) {
    for (std::size_t j = i + 1; j < high.size(); ++j) {
      if (!in_open_annulus(distance_sq(points[i], points[j]), r, side)) continue;
      ++out.pair_count;
      if (out.examples.size() < example_cap) out.examples.emplace_back(points[i], points[j]);
    }
  }
  return out;
}

NearMaxReport near_max_pairs(const SampledField& field, int r, double c, std::size_t example_cap) {
  return near_max_pairs(field.values, field.shape(), r, c, example_cap);
}

bool Region::contains(const LatticePoint& p) const {
  for (int i = 0; i < p.dim(); ++i) {
    if (p[i] < lo[i] || p[i] >= hi[i]) return false;
  }
  return true;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

DerivativeMartingaleValue derivative_martingale(std::span<const double> values, const Shape& shape,
                                                const std::optional<Region>& subset) {
  if (values.size() != shape.volume()) throw InputError("derivative_martingale: size mismatch");
  if (subset && (subset->lo.dim() != shape.dim() || subset->hi.dim() != shape.dim())) {
    throw InputError("derivative_martingale: region dimension mismatch");
  }
  const double s = std::sqrt(2.0 * shape.dim());
  const double top = s * std::log(static_cast<double>(shape.side()));
  CompensatedSum sum;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (subset && !subset->contains(shape.point(i))) continue;
    const double a = top - values[i];
    sum.add(a * std::exp(-s * a));
  }
  return DerivativeMartingaleValue{sum.value(), subset};
}

DerivativeMartingaleValue derivative_martingale(const SampledField& field,
                                                const std::optional<Region>& subset) {
  return derivative_martingale(field.values, field.shape(), subset);
}

}  // namespace lcgf
