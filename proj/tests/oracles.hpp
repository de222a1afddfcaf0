#pragma once

// Brute-force reference implementations. Each one follows the definition
// directly and shares no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "lcgf/approx.hpp"
#include "lcgf/field_spec.hpp"

namespace oracle {

inline constexpr double kLn2 = 0.693147180559945309417;

inline long long ipow(long long b, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

/// Odometer over {0..side-1}^d.
inline bool next_index(std::vector<int>& idx, int side) {
  for (std::size_t i = idx.size(); i-- > 0;) {
    if (++idx[i] < side) return true;
    idx[i] = 0;
  }
  return false;
}

/// BRW: walk every aligned box at every level and test membership of both points.
inline double brw(int d, int n, const lcgf::LatticePoint& x, const lcgf::LatticePoint& y) {
  const int side = 1 << n;
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const int s = 1 << j;
    std::vector<int> box(static_cast<std::size_t>(d), 0);
    do {
      bool has_x = true;
      bool has_y = true;
      for (int i = 0; i < d; ++i) {
        const int lo = box[static_cast<std::size_t>(i)] * s;
        has_x = has_x && x[i] >= lo && x[i] < lo + s;
        has_y = has_y && y[i] >= lo && y[i] < lo + s;
      }
      if (has_x && has_y) total += kLn2;
    } while (next_index(box, side / s));
  }
  return total;
}

/// MBRW: at level j, count pairs (B containing x, B' containing y) of side-2^j
/// boxes whose lower corners agree modulo N, each weighted by Var b = log 2 / 2^{dj}.
inline double mbrw(int d, int n, const lcgf::LatticePoint& x, const lcgf::LatticePoint& y) {
  const long long side = 1LL << n;
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const int s = 1 << j;
    long long pairs = 0;
    std::vector<int> o(static_cast<std::size_t>(2 * d), 0);
    do {
      bool same = true;
      for (int i = 0; i < d && same; ++i) {
        const long long a = x[i] - o[static_cast<std::size_t>(i)];
        const long long b = y[i] - o[static_cast<std::size_t>(d + i)];
        same = ((a - b) % side + side) % side == 0;
      }
      if (same) ++pairs;
    } while (next_index(o, s));
    total += kLn2 * static_cast<double>(pairs) / static_cast<double>(ipow(s, d));
  }
  return total;
}

/// All pairs with r <= |u - v| <= N / r.
inline double pair_max(const std::vector<double>& values, int d, int side, int r) {
  const lcgf::Shape shape(d, side);
  double best = -std::numeric_limits<double>::infinity();
  const double lo = r;
  const double hi = static_cast<double>(side) / r;
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto u = shape.point(a);
    for (std::size_t b = a + 1; b < values.size(); ++b) {
      const auto v = shape.point(b);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += static_cast<double>(u[i] - v[i]) * (u[i] - v[i]);
      const double dist = std::sqrt(s);
      if (dist >= lo && dist <= hi) best = std::max(best, values[a] + values[b]);
    }
  }
  return best;
}

inline double centering(double side, int d) {
  const double a = std::sqrt(2.0 * d);
  return a * std::log(side) - 3.0 / (2.0 * a) * std::log(std::log(side));
}

struct Counts {
  std::size_t lambda = 0;
  std::size_t gamma = 0;
  bool g = false;
};

/// Barrier events recomputed from the raw components of a realization.
inline Counts barrier_counts(const lcgf::XiField& xi, double z, std::size_t coarse_box) {
  const auto& p = xi.params;
  const int d = p.dim;
  const int side = p.side();
  const int box = side >> (p.k + p.l);
  const int local = 1 << (p.kp + p.lp);
  const int nbar = p.n - p.k - p.l;
  const int nstar = nbar - (p.kp + p.lp) + 1;
  const double m_bar = centering(box, d);
  const lcgf::Shape full(d, side);
  const lcgf::Shape boxes(d, 1 << (p.k + p.l));
  const lcgf::Shape corners_per_box(d, box / local);
  const lcgf::Shape all_corners(d, side / local);
  const auto origin = boxes.point(coarse_box);

  Counts out;
  std::vector<int> c(static_cast<std::size_t>(d), 0);
  do {
    lcgf::LatticePoint corner;
    lcgf::LatticePoint corner_idx;
    for (int i = 0; i < d; ++i) {
      const int q = origin[i] * (box / local) + c[static_cast<std::size_t>(i)];
      corner_idx.coords.push_back(q);
      corner.coords.push_back(q * local);
    }
    const std::size_t b = all_corners.index(corner_idx);
    std::vector<double> x(static_cast<std::size_t>(nstar) + 1, 0.0);
    for (int t = 0; t < nstar; ++t) x[t + 1] = x[t] + xi.mbrw_levels[static_cast<std::size_t>(t)][b];

    double local_max = -std::numeric_limits<double>::infinity();
    std::vector<int> o(static_cast<std::size_t>(d), 0);
    do {
      lcgf::LatticePoint v = corner;
      for (int i = 0; i < d; ++i) v.coords[static_cast<std::size_t>(i)] += o[static_cast<std::size_t>(i)];
      const std::size_t idx = full.index(v);
      local_max = std::max(local_max, xi.total[idx] - xi.coarse[idx]);
    } while (next_index(o, local));

    bool straight = true;
    bool bent = true;
    for (int t = 0; t <= nstar; ++t) {
      const double line = z + m_bar * t / nbar;
      const int m = std::min(t, nstar - t);
      const double slack = std::max(0.0, m >= 1 ? 10.0 * std::log(static_cast<double>(m)) : 0.0);
      if (x[t] > line) straight = false;
      if (x[t] > line + slack + std::pow(z, 0.05)) bent = false;
    }
    const bool high = local_max >= m_bar + z;
    if (straight && high) ++out.lambda;
    if (bent && high) ++out.gamma;
    if (!bent) out.g = true;
  } while (next_index(c, box / local));
  return out;
}

}  // namespace oracle
