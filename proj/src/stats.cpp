#include "lcgf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lcgf/error.hpp"

namespace lcgf {

MeanSE mean_se(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("mean of an empty sample");
  MeanSE out;
  out.n = x.size();
  double s = 0.0;
  for (double v : x) s += v;
  out.mean = s / static_cast<double>(x.size());
  out.se = x.size() > 1 ? std::sqrt(sample_variance(x) / static_cast<double>(x.size())) : 0.0;
  return out;
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientDataError("variance needs at least two samples");
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

MeanSE covariance_se(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("covariance: length mismatch");
  if (x.size() < 2) throw InsufficientDataError("covariance needs at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  MeanSE out = mean_se(prod);
  out.mean *= n / (n - 1.0);
  return out;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("KS test needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return TestResult{d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TestResult anderson_darling_normal(std::span<const double> x) {
  if (x.size() < 8) throw InsufficientDataError("Anderson-Darling needs at least 8 samples");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const MeanSE ms = mean_se(s);
  const double sd = std::sqrt(sample_variance(s));
  if (!(sd > 0.0)) throw DomainError("Anderson-Darling: zero variance");
  const std::size_t n = s.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::clamp(normal_cdf((s[i] - ms.mean) / sd), 1e-300, 1.0 - 1e-16);
    const double hi = std::clamp(normal_cdf((s[n - 1 - i] - ms.mean) / sd), 1e-300, 1.0 - 1e-16);
    sum += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
  }
  const double nn = static_cast<double>(n);
  const double a2 = -nn - sum / nn;
  const double a = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  double p = 0.0;
  if (a >= 0.6) {
    p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  } else if (a >= 0.34) {
    p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a >= 0.2) {
    p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else {
    p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  }
  return TestResult{a, std::clamp(p, 0.0, 1.0)};
}

}  // namespace lcgf
