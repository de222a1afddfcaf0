#include "lcgf/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <string>

#include "lcgf/approx.hpp"
#include "lcgf/binary_io.hpp"
#include "lcgf/error.hpp"

namespace lcgf {

DenseCovariance::DenseCovariance(std::size_t m, std::vector<double> entries)
    : m_(m), entries_(std::move(entries)) {
  if (entries_.size() != m_ * m_) throw InputError("dense covariance: wrong number of entries");
  for (std::size_t i = 0; i < m_; ++i) {
    const double dii = entries_[i * m_ + i];
    if (!(dii > 0.0)) {
      throw InputError("dense covariance: diagonal entry " + std::to_string(i) + " not positive");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const double a = entries_[i * m_ + j];
      const double b = entries_[j * m_ + i];
      const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
      if (std::abs(a - b) > 1e-12 * scale) {
        throw InputError("dense covariance: not symmetric at (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
      }
    }
  }
}

double DenseCovariance::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < m_; ++i) t += entries_[i * m_ + i];
  return t;
}

void CholeskyFactor::apply(std::span<const double> g, std::span<double> out) const {
  for (std::size_t i = 0; i < m_; ++i) {
    const double* row = lower_.data() + i * m_;
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += row[j] * g[j];
    out[i] = s;
  }
}

CholeskyFactor CholeskyFactor::identity(std::size_t m) {
  std::vector<double> l(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) l[i * m + i] = 1.0;
  return CholeskyFactor(m, std::move(l));
}

namespace {

void check_pair(const FieldSpec& spec, const LatticePoint& x, const LatticePoint& y) {
  const Shape shape = spec.shape();
  if (x.dim() != spec.dim || y.dim() != spec.dim) {
    throw InputError("point dimension does not match the field dimension " +
                     std::to_string(spec.dim));
  }
  if (!shape.contains(x) || !shape.contains(y)) throw InputError("point outside V_N");
}

double torus_distance(int a, int b, int side) {
  const int t = std::abs(a - b) % side;
  return static_cast<double>(std::min(t, side - t));
}

}  // namespace

double brw_covariance(const FieldSpec& spec, const LatticePoint& x, const LatticePoint& y) {
  check_pair(spec, x, y);
  const int n = spec.levels();
  int shared = 0;
  for (int j = 0; j <= n; ++j) {
    bool same = true;
    for (int i = 0; i < spec.dim && same; ++i) same = (x[i] >> j) == (y[i] >> j);
    if (same) ++shared;
  }
  return kLog2 * shared;
}

double mbrw_level_covariance(int dim, int torus_side, int jlo, int jhi, const LatticePoint& x,
                             const LatticePoint& y) {
  if (x.dim() != dim || y.dim() != dim) throw InputError("point dimension mismatch");
  const double side = torus_side;
  double cov = 0.0;
  for (int j = jlo; j <= jhi; ++j) {
    const double w = std::ldexp(1.0, j);
    double overlap = 1.0;
    for (int i = 0; i < dim && overlap > 0.0; ++i) {
      const double t = torus_distance(x[i], y[i], torus_side);
      overlap *= std::max(w - t, 0.0) + std::max(w - (side - t), 0.0);
    }
    cov += kLog2 * std::ldexp(overlap, -dim * j);
  }
  return cov;
}

double mbrw_covariance(const FieldSpec& spec, const LatticePoint& x, const LatticePoint& y) {
  check_pair(spec, x, y);
  return mbrw_level_covariance(spec.dim, spec.side, 0, spec.levels(), x, y);
}

double clrem_covariance(const FieldSpec& spec, int k, int l) {
  const int n = spec.side;
  if (k < 0 || l < 0 || k >= n || l >= n) throw InputError("CLREM index out of range");
  if (k == l) return std::log(static_cast<double>(n)) + spec.w;
  const double half_angle = std::numbers::pi * static_cast<double>(k - l) / n;
  const double s = std::sin(half_angle);
  return -0.5 * std::log(4.0 * s * s);
}

CovarianceOracle CovarianceOracle::from_spec(const FieldSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::BRW:
      return CovarianceOracle(spec, [spec](const LatticePoint& x, const LatticePoint& y) {
        return brw_covariance(spec, x, y);
      });
    case Family::MBRW:
      return CovarianceOracle(spec, [spec](const LatticePoint& x, const LatticePoint& y) {
        return mbrw_covariance(spec, x, y);
      });
    case Family::CLREM:
      return CovarianceOracle(spec, [spec](const LatticePoint& x, const LatticePoint& y) {
        check_pair(spec, x, y);
        return clrem_covariance(spec, x[0], y[0]);
      });
    case Family::Dense:
      return CovarianceOracle(spec, [spec](const LatticePoint& x, const LatticePoint& y) {
        const Shape shape = spec.shape();
        return (*spec.dense)(shape.index(x), shape.index(y));
      });
    case Family::Xi: {
      auto model = std::make_shared<const XiModel>(*spec.xi);
      return CovarianceOracle(spec, [model](const LatticePoint& x, const LatticePoint& y) {
        return model->covariance(x, y);
      });
    }
  }
  throw InputError("unsupported family");
}

DenseCovariance build_dense(const CovarianceOracle& oracle, std::span<const LatticePoint> points,
                            std::size_t cap) {
  const std::size_t m = points.size();
  if (m == 0) throw InputError("build_dense: empty point list");
  if (m > cap) {
    throw CapacityError("build_dense: " + std::to_string(m) + " points exceed the cap of " +
                        std::to_string(cap));
  }
  std::set<std::vector<int>> seen;
  for (const auto& p : points) {
    if (!seen.insert(p.coords).second) throw InputError("build_dense: duplicate point");
  }
  std::vector<double> entries(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = oracle(points[i], points[j]);
      entries[i * m + j] = c;
      entries[j * m + i] = c;
    }
  }
  return DenseCovariance(m, std::move(entries));
}

DenseCovariance build_dense(const CovarianceOracle& oracle, std::size_t cap) {
  const Shape shape = oracle.spec().shape();
  if (shape.volume() > cap) {
    throw CapacityError("build_dense: " + std::to_string(shape.volume()) +
                        " points exceed the cap of " + std::to_string(cap));
  }
  std::vector<LatticePoint> points;
  points.reserve(shape.volume());
  for (std::size_t i = 0; i < shape.volume(); ++i) points.push_back(shape.point(i));
  return build_dense(oracle, points, cap);
}

CholeskyFactor cholesky(const DenseCovariance& a) {
  const std::size_t m = a.size();
  const double floor = kPivotFloor * a.trace() / static_cast<double>(m);
  std::vector<double> l(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* li = l.data() + i * m;
    for (std::size_t j = 0; j < i; ++j) {
      const double* lj = l.data() + j * m;
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / lj[j];
    }
    double pivot = a(i, i);
    for (std::size_t k = 0; k < i; ++k) pivot -= li[k] * li[k];
    if (!(pivot > floor)) throw NotPDError(i, pivot);
    li[i] = std::sqrt(pivot);
  }
  return CholeskyFactor(m, std::move(l));
}

DenseCovariance clrem_matrix(int side, double w) {
  const FieldSpec spec = FieldSpec::clrem(side, w);
  const auto m = static_cast<std::size_t>(side);
  std::vector<double> entries(m * m);
  // Circulant: entry depends on (k - l) mod N only.
  std::vector<double> row(m);
  for (int k = 0; k < side; ++k) row[static_cast<std::size_t>(k)] = clrem_covariance(spec, k, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) entries[i * m + j] = row[(i + m - j) % m];
  }
  // Symmetrize exactly; sin^2 of +-theta agree only to rounding.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) entries[j * m + i] = entries[i * m + j];
  }
  return DenseCovariance(m, std::move(entries));
}

double find_minimal_w(int side, double tol) {
  if (side < 2) throw InputError("find_minimal_w: N must be at least 2");
  if (!(tol > 0.0)) throw InputError("find_minimal_w: tol must be positive");
  const double log_n = std::log(static_cast<double>(side));
  auto passes = [side](double w) {
    try {
      (void)cholesky(clrem_matrix(side, w));
      return true;
    } catch (const NotPDError&) {
      return false;
    } catch (const InputError&) {
      return false;  // non-positive diagonal
    }
  };
  double lo = -log_n;
  double hi = 10.0 * log_n;
  if (!passes(hi)) throw DomainError("find_minimal_w: bracket upper end is not positive definite");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

void write_dense_binary(std::ostream& os, const DenseCovariance& m, std::uint32_t dim) {
  os.write("LCGFCOV1", 8);
  detail::write_le(os, static_cast<std::uint32_t>(m.size()));
  detail::write_le(os, dim);
  for (double x : m.entries()) detail::write_f64(os, x);
}

DenseCovariance read_dense_binary(std::istream& is, std::uint32_t* dim) {
  detail::expect_magic(is, "LCGFCOV1");
  const auto m = detail::read_le<std::uint32_t>(is);
  const auto d = detail::read_le<std::uint32_t>(is);
  if (dim) *dim = d;
  std::vector<double> entries(static_cast<std::size_t>(m) * m);
  for (double& x : entries) x = detail::read_f64(is);
  return DenseCovariance(m, std::move(entries));
}

void write_dense_csv(std::ostream& os, const DenseCovariance& m) {
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace lcgf
