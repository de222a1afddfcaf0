#pragma once

#include <cstddef>
#include <span>

namespace lcgf {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean and its standard error (n - 1 denominator).
MeanSE mean_se(std::span<const double> x);

double sample_variance(std::span<const double> x);

/// Sample covariance with the standard error of the mean of (x - mx)(y - my).
MeanSE covariance_se(std::span<const double> x, std::span<const double> y);

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value
/// (Stephens' effective-size correction).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_q(double lambda);

/// Anderson-Darling normality test with mean and variance estimated from the
/// data; p-value from the D'Agostino-Stephens approximation.
TestResult anderson_darling_normal(std::span<const double> x);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace lcgf
