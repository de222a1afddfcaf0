#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lcgf/approx.hpp"
#include "lcgf/covariance.hpp"
#include "lcgf/field_spec.hpp"

namespace lcgf {

/// Sorted sample with a right-continuous ECDF.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution() = default;
  explicit EmpiricalDistribution(std::vector<double> samples);

  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }
  std::span<const double> samples() const { return x_; }
  /// #{x_i <= t} / n.
  double cdf(double t) const;
  /// #{x_i < t} / n.
  double cdf_left(double t) const;
  /// Linear interpolation between order statistics (p in [0, 1]).
  double quantile(double p) const;
  double min() const { return x_.front(); }
  double max() const { return x_.back(); }
  EmpiricalDistribution shifted(double s) const;

 private:
  std::vector<double> x_;
};

/// inf{delta : F_a(x - delta) - delta <= F_b(x) <= F_a(x + delta) + delta for all x}.
/// Bisection to 1e-12 with exact breakpoint evaluation at every trial delta.
double levy_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// inf{delta : P_a((x, inf)) <= P_b((x - delta, inf)) + delta for all x}.
double one_sided_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Non-decreasing CDF sampled on a uniform grid, linearly interpolated, 0
/// below and 1 above the grid.
class GriddedCdf {
 public:
  GriddedCdf(double lo, double hi, std::vector<double> values);
  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  /// Smallest grid-interpolated x with F(x) >= p.
  double quantile(double p) const;

 private:
  double lo_;
  double hi_;
  double step_;
  std::vector<double> values_;
};

/// Levy distance between an ECDF and a continuous non-decreasing CDF.
double levy_distance(const EmpiricalDistribution& a, const std::function<double(double)>& cdf);

/// P(Y >= x) = ((gamma + x) / gamma) e^{-sqrt(2d) x} for x >= 0.
double y_survival(double x, double gamma, int dim);
/// The x >= 0 with y_survival(x) = u, u in (0, 1], by bisection.
double y_quantile(double u, double gamma, int dim);
/// Needs gamma > 1/sqrt(2d) so that the survival function is strictly decreasing.
double sample_y(double gamma, int dim, std::uint64_t seed);

struct GStarParams {
  int k = 1;
  int l = 1;
  int dim = 2;
  double beta_star = 1.0;
  double gamma = 1.0;
  /// Law of Z on V_{KL}; MBRW at size KL when left as a default FieldSpec.
  Family coarse_family = Family::MBRW;
  double coarse_w = 0.0;

  int kl_side() const { return 1 << (k + l); }
  /// R = (KL)^d.
  std::size_t points() const;
  /// P(rho = 1) = beta_star gamma e^{-sqrt(2d) gamma}.
  double p() const;
  FieldSpec coarse_spec() const;
  void validate() const;
};

/// max(1/sqrt(2d) + 0.1, log log log(KL)).
double default_gamma(int dim, int kl_side);

struct GStarDraw {
  double value = 0.0;
  bool empty = true;
  std::size_t active = 0;
  /// sum_i S_i e^{-sqrt(2d) S_i} with S_i = sqrt(2d) log(KL) - Z_i.
  double zeta = 0.0;
};

/// max over active i of (Y_i + gamma) + Z_i - sqrt(2d) log(KL); 0 when no i is active.
GStarDraw gstar_from_components(const GStarParams& params, std::span<const std::uint8_t> rho,
                                std::span<const double> y, std::span<const double> z);

class GStarSampler {
 public:
  explicit GStarSampler(GStarParams params);
  GStarDraw sample(std::uint64_t seed) const;
  /// The components used by sample(seed).
  void components(std::uint64_t seed, std::vector<std::uint8_t>& rho, std::vector<double>& y,
                  std::vector<double>& z) const;
  const GStarParams& params() const { return params_; }
  /// P(G* <= x | Z = z), including the atom of the empty maximum at 0.
  double conditional_cdf(std::span<const double> z, double x) const;

 private:
  GStarParams params_;
  CholeskyFactor factor_;
};

GStarDraw sample_gstar(const GStarParams& params, std::uint64_t seed);

struct GumbelMixture {
  double beta_star = 1.0;
  int dim = 2;
  EmpiricalDistribution z_samples;

  double negative_z_fraction() const;
};

/// Mean over z of exp(-beta_star z e^{-sqrt(2d) x}). Negative z are kept, so
/// the value can exceed 1; see negative_z_fraction().
double gumbel_mixture_cdf(const GumbelMixture& m, double x);

/// X = (log(beta_star z) + G) / sqrt(2d) with z drawn from the samples and G standard Gumbel.
std::vector<double> sample_mixture(const GumbelMixture& m, std::size_t count, std::uint64_t seed);

/// The mixture CDF on a grid, forced non-decreasing and into [0, 1].
GriddedCdf grid_mixture_cdf(const GumbelMixture& m, double lo, double hi, std::size_t points = 8193);

struct LimitComparison {
  double shift = 0.0;
  double levy_after_shift = 0.0;
  std::size_t n_samples = 0;
  double negative_z_fraction = 0.0;
  double beta_star = 0.0;

  std::string to_json() const;
};

/// Median match, then the Levy distance of the shifted ECDF to the mixture CDF.
LimitComparison compare_to_limit(const EmpiricalDistribution& empirical, const GumbelMixture& m);

struct BetaFit {
  double estimate = 0.0;
  double stderr_estimate = 0.0;
  std::size_t points = 0;
};

/// Inverse-variance weighted mean of beta_hat over rows with z in [z_lo, z_hi] and p_hat > 0.
BetaFit fit_beta_star(std::span<const TailRow> rows, double z_lo, double z_hi);

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

struct TailPoint {
  double z = 0.0;
  double p = 0.0;
};

/// Least-squares slope of log(p / z) against z; expected -sqrt(2d).
SlopeFit tail_slope(std::span<const TailPoint> points);
/// Same, with P(X > z) read from the ECDF at z = lo, lo + step, ..., <= hi.
SlopeFit tail_slope(const EmpiricalDistribution& centered_maxima, double lo, double hi,
                    double step = 0.25);

}  // namespace lcgf
