#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "lcgf/field_spec.hpp"

namespace lcgf {

inline constexpr double kLog2 = 0.69314718055994530942;

/// Symmetric m x m covariance matrix, stored row-major.
class DenseCovariance {
 public:
  DenseCovariance() = default;
  /// Validates symmetry (1e-12 relative) and a strictly positive diagonal.
  DenseCovariance(std::size_t m, std::vector<double> entries);

  std::size_t size() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * m_ + j]; }
  std::span<const double> entries() const { return entries_; }
  double trace() const;

 private:
  std::size_t m_ = 0;
  std::vector<double> entries_;
};

/// Lower-triangular Cholesky factor, stored row-major (upper part is zero).
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  CholeskyFactor(std::size_t m, std::vector<double> lower) : m_(m), lower_(std::move(lower)) {}

  std::size_t size() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return lower_[i * m_ + j]; }
  std::span<const double> entries() const { return lower_; }
  /// out = L * g.
  void apply(std::span<const double> g, std::span<double> out) const;
  static CholeskyFactor identity(std::size_t m);

 private:
  std::size_t m_ = 0;
  std::vector<double> lower_;
};

// Closed-form oracles. Each throws InputError on dimension or range mismatch.

/// (log 2) times the number of levels j in [0, n] at which x and y share an aligned dyadic box.
double brw_covariance(const FieldSpec& spec, const LatticePoint& x, const LatticePoint& y);

/// Covariance of the modified branching random walk (boxes at every offset,
/// identified modulo N).
double mbrw_covariance(const FieldSpec& spec, const LatticePoint& x, const LatticePoint& y);

/// MBRW covariance restricted to levels jlo..jhi on the torus of side `torus_side`.
///
/// Level j contributes (log 2) 2^{-dj} prod_i c_j(t_i), where t_i is the torus
/// distance in coordinate i and c_j(t) = (2^j - t)_+ + (2^j - (N - t))_+ counts
/// the pairs (B containing x, B' containing y) with B ~_N B'. The second term
/// only matters at 2^j > N/2; it is what makes the top level a common shift.
double mbrw_level_covariance(int dim, int torus_side, int jlo, int jhi, const LatticePoint& x,
                             const LatticePoint& y);

/// CLREM entry R_{k,l}.
double clrem_covariance(const FieldSpec& spec, int k, int l);

/// Exact pairwise covariance of a FieldSpec, independent of any sample.
class CovarianceOracle {
 public:
  using Fn = std::function<double(const LatticePoint&, const LatticePoint&)>;

  CovarianceOracle(FieldSpec spec, Fn fn) : spec_(std::move(spec)), fn_(std::move(fn)) {}
  /// Oracle for any built-in family.
  static CovarianceOracle from_spec(const FieldSpec& spec);

  double operator()(const LatticePoint& x, const LatticePoint& y) const { return fn_(x, y); }
  double variance(const LatticePoint& x) const { return fn_(x, x); }
  const FieldSpec& spec() const { return spec_; }

 private:
  FieldSpec spec_;
  Fn fn_;
};

inline constexpr std::size_t kDefaultDenseCap = 20000;

DenseCovariance build_dense(const CovarianceOracle& oracle, std::span<const LatticePoint> points,
                            std::size_t cap = kDefaultDenseCap);
/// Dense matrix over every point of V_N in row-major order.
DenseCovariance build_dense(const CovarianceOracle& oracle, std::size_t cap = kDefaultDenseCap);

/// Relative pivot floor: a pivot <= kPivotFloor * trace / m is reported as NotPD.
inline constexpr double kPivotFloor = 1e-10;

/// Plain Cholesky. No jitter is ever added; a pivot at or below the floor throws NotPDError.
CholeskyFactor cholesky(const DenseCovariance& m);

/// Full CLREM matrix for N points.
DenseCovariance clrem_matrix(int side, double w);

/// Smallest W (to within tol) at which the CLREM matrix passes cholesky().
/// Bisection over [-log N, 10 log N].
double find_minimal_w(int side, double tol = 1e-6);

// Serialization: 16-byte header "LCGFCOV1", u32 m, u32 d, then m*m little-endian f64.
void write_dense_binary(std::ostream& os, const DenseCovariance& m, std::uint32_t dim);
DenseCovariance read_dense_binary(std::istream& is, std::uint32_t* dim = nullptr);
void write_dense_csv(std::ostream& os, const DenseCovariance& m);

}  // namespace lcgf
