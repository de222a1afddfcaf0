#include "lcgf/limitlaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "lcgf/error.hpp"
#include "lcgf/rng.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples) : x_(std::move(samples)) {
  for (double v : x_) {
    if (std::isnan(v)) throw InputError("empirical distribution: NaN sample");
  }
  std::sort(x_.begin(), x_.end());
}

double EmpiricalDistribution::cdf(double t) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  return static_cast<double>(it - x_.begin()) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::cdf_left(double t) const {
  const auto it = std::lower_bound(x_.begin(), x_.end(), t);
  return static_cast<double>(it - x_.begin()) / static_cast<double>(x_.size());
}

double EmpiricalDistribution::quantile(double p) const {
  if (x_.empty()) throw InsufficientDataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  const double h = p * static_cast<double>(x_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x_.size() - 1);
  return x_[lo] + (h - static_cast<double>(lo)) * (x_[hi] - x_[lo]);
}

EmpiricalDistribution EmpiricalDistribution::shifted(double s) const {
  std::vector<double> y(x_);
  for (double& v : y) v += s;
  return EmpiricalDistribution(std::move(y));
}

namespace {

constexpr double kBisectionTol = 1e-12;

void require_nonempty(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("distance needs non-empty samples");
}

// sup_x F_p(x - delta) - F_q(x). Both sides are right-continuous steps, so the
// sup is attained at x = p_i + delta or x = q_j; F_p at p_i + delta is read
// from the index to avoid rounding in (p_i + delta) - delta.
double sup_gap(const EmpiricalDistribution& p, const EmpiricalDistribution& q, double delta) {
  const auto ps = p.samples();
  const auto qs = q.samples();
  const double np = static_cast<double>(ps.size());
  double best = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i + 1 < ps.size() && ps[i + 1] == ps[i]) continue;
    best = std::max(best, static_cast<double>(i + 1) / np - q.cdf(ps[i] + delta));
  }
  for (double t : qs) best = std::max(best, p.cdf(t - delta) - q.cdf(t));
  return best;
}

template <typename Pred>
double bisect_threshold(Pred ok) {
  if (ok(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

double one_sided_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  require_nonempty(a, b);
  // 1 - F_a(x) <= 1 - F_b(x - delta) + delta  <=>  F_b(x - delta) - F_a(x) <= delta.
  return bisect_threshold([&](double delta) { return sup_gap(b, a, delta) <= delta; });
}

double levy_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  require_nonempty(a, b);
  return std::max(one_sided_distance(a, b), one_sided_distance(b, a));
}

GriddedCdf::GriddedCdf(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), values_(std::move(values)) {
  if (!(hi > lo) || values_.size() < 2) throw InputError("gridded CDF needs lo < hi and two points");
  step_ = (hi_ - lo_) / static_cast<double>(values_.size() - 1);
}

double GriddedCdf::operator()(double x) const {
  if (x < lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double h = (x - lo_) / step_;
  const auto i = std::min(static_cast<std::size_t>(h), values_.size() - 2);
  const double f = h - static_cast<double>(i);
  return values_[i] + f * (values_[i + 1] - values_[i]);
}

double GriddedCdf::quantile(double p) const {
  double lo = lo_;
  double hi = hi_;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((*this)(mid) >= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double levy_distance(const EmpiricalDistribution& a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw InsufficientDataError("distance needs a non-empty sample");
  const auto xs = a.samples();
  const double n = static_cast<double>(xs.size());
  // F_a is a step function and G is continuous and non-decreasing, so each
  // one-sided sup is attained at a jump of F_a shifted by delta.
  auto ok = [&](double delta) {
    double worst = cdf(xs[0] - delta);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
      const double f = static_cast<double>(i + 1) / n;
      worst = std::max(worst, f - cdf(xs[i] + delta));
      if (i + 1 < xs.size()) worst = std::max(worst, cdf(xs[i + 1] - delta) - f);
    }
    return worst <= delta;
  };
  return bisect_threshold(ok);
}

double y_survival(double x, double gamma, int dim) {
  if (x <= 0.0) return 1.0;
  return (gamma + x) / gamma * std::exp(-std::sqrt(2.0 * dim) * x);
}

namespace {

void check_gamma(double gamma, int dim) {
  if (!(gamma > 1.0 / std::sqrt(2.0 * dim))) {
    throw DomainError("gamma must exceed 1/sqrt(2d) = " + std::to_string(1.0 / std::sqrt(2.0 * dim)));
  }
}

}  // namespace

double y_quantile(double u, double gamma, int dim) {
  check_gamma(gamma, dim);
  if (!(u > 0.0 && u <= 1.0)) throw InputError("y_quantile: u must lie in (0, 1]");
  if (u == 1.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (y_survival(hi, gamma, dim) > u) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (y_survival(mid, gamma, dim) > u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double sample_y(double gamma, int dim, std::uint64_t seed) {
  RandomStream stream(seed, StreamTag::kGStarY);
  return y_quantile(1.0 - stream.uniform(), gamma, dim);
}

std::size_t GStarParams::points() const { return Shape(dim, kl_side()).volume(); }

double GStarParams::p() const { return beta_star * gamma * std::exp(-std::sqrt(2.0 * dim) * gamma); }

FieldSpec GStarParams::coarse_spec() const {
  switch (coarse_family) {
    case Family::BRW:
      return FieldSpec::brw(dim, k + l);
    case Family::MBRW:
      return FieldSpec::mbrw(dim, k + l);
    case Family::CLREM:
      return FieldSpec::clrem(kl_side(), coarse_w);
    default:
      throw InputError("gstar: coarse family must be brw, mbrw or clrem");
  }
}

void GStarParams::validate() const {
  if (dim < 1) throw InputError("gstar: dimension must be positive");
  if (k < 0 || l < 0 || k + l > 12) throw InputError("gstar: k and l out of range");
  if (!(beta_star > 0.0)) throw InputError("gstar: beta_star must be positive");
  check_gamma(gamma, dim);
  const double prob = p();
  if (prob > 1.0) throw DomainError("gstar: P(rho = 1) = " + std::to_string(prob) + " exceeds 1");
  (void)coarse_spec();
}

double default_gamma(int dim, int kl_side) {
  const double floor = 1.0 / std::sqrt(2.0 * dim) + 0.1;
  const double x = static_cast<double>(kl_side);
  // log log log x is only defined and positive for x > e^e.
  if (x <= std::exp(std::exp(1.0))) return floor;
  return std::max(floor, std::log(std::log(std::log(x))));
}

GStarDraw gstar_from_components(const GStarParams& params, std::span<const std::uint8_t> rho,
                                std::span<const double> y, std::span<const double> z) {
  const std::size_t r = params.points();
  if (rho.size() != r || y.size() != r || z.size() != r) throw InputError("gstar: component size mismatch");
  const double a = std::sqrt(2.0 * params.dim);
  const double top = a * std::log(static_cast<double>(params.kl_side()));
  GStarDraw out;
  double best = -std::numeric_limits<double>::infinity();
  double zeta = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double s = top - z[i];
    zeta += s * std::exp(-a * s);
    if (!rho[i]) continue;
    ++out.active;
    best = std::max(best, (y[i] + params.gamma) + z[i] - top);
  }
  out.empty = out.active == 0;
  out.value = out.empty ? 0.0 : best;
  out.zeta = zeta;
  return out;
}

GStarSampler::GStarSampler(GStarParams params) : params_(std::move(params)) {
  params_.validate();
  const FieldSpec spec = params_.coarse_spec();
  factor_ = cholesky(build_dense(CovarianceOracle::from_spec(spec)));
}

void GStarSampler::components(std::uint64_t seed, std::vector<std::uint8_t>& rho, std::vector<double>& y,
                              std::vector<double>& z) const {
  const std::size_t r = params_.points();
  const double prob = params_.p();
  rho.resize(r);
  y.resize(r);
  z.resize(r);
  RandomStream bern(seed, StreamTag::kGStarBernoulli);
  for (auto& b : rho) b = bern.uniform() < prob ? 1 : 0;
  RandomStream ys(seed, StreamTag::kGStarY);
  for (double& v : y) v = y_quantile(1.0 - ys.uniform(), params_.gamma, params_.dim);
  std::vector<double> g(r);
  RandomStream zs(seed, StreamTag::kGStarZ);
  zs.fill_normal(g);
  factor_.apply(g, z);
}

GStarDraw GStarSampler::sample(std::uint64_t seed) const {
  std::vector<std::uint8_t> rho;
  std::vector<double> y;
  std::vector<double> z;
  components(seed, rho, y, z);
  return gstar_from_components(params_, rho, y, z);
}

double GStarSampler::conditional_cdf(std::span<const double> z, double x) const {
  const double a = std::sqrt(2.0 * params_.dim);
  const double top = a * std::log(static_cast<double>(params_.kl_side()));
  const double prob = params_.p();
  double prod = 1.0;
  for (double zi : z) {
    // G_i > x  <=>  Y_i > x + S_i - gamma.
    prod *= 1.0 - prob * y_survival(x + (top - zi) - params_.gamma, params_.gamma, params_.dim);
  }
  if (x >= 0.0) return prod;
  return prod - std::pow(1.0 - prob, static_cast<double>(z.size()));
}

GStarDraw sample_gstar(const GStarParams& params, std::uint64_t seed) {
  return GStarSampler(params).sample(seed);
}

double GumbelMixture::negative_z_fraction() const {
  if (z_samples.empty()) return 0.0;
  return z_samples.cdf_left(0.0);
}

double gumbel_mixture_cdf(const GumbelMixture& m, double x) {
  if (!(m.beta_star > 0.0)) throw InputError("mixture: beta_star must be positive");
  if (m.z_samples.empty()) throw InsufficientDataError("mixture: no z samples");
  const double e = m.beta_star * std::exp(-std::sqrt(2.0 * m.dim) * x);
  double s = 0.0;
  for (double z : m.z_samples.samples()) s += std::exp(-z * e);
  return s / static_cast<double>(m.z_samples.size());
}

std::vector<double> sample_mixture(const GumbelMixture& m, std::size_t count, std::uint64_t seed) {
  if (!(m.beta_star > 0.0)) throw InputError("mixture: beta_star must be positive");
  if (m.z_samples.empty()) throw InsufficientDataError("mixture: no z samples");
  const auto zs = m.z_samples.samples();
  const double a = std::sqrt(2.0 * m.dim);
  RandomStream stream(seed, StreamTag::kMixture);
  std::vector<double> out(count);
  for (double& x : out) {
    const auto idx = std::min(static_cast<std::size_t>(stream.uniform() * static_cast<double>(zs.size())),
                              zs.size() - 1);
    const double z = zs[idx];
    if (!(z > 0.0)) throw DomainError("sample_mixture needs positive z samples");
    const double u = 1.0 - stream.uniform();
    const double gumbel = -std::log(-std::log(u));
    x = (std::log(m.beta_star * z) + gumbel) / a;
  }
  return out;
}

GriddedCdf grid_mixture_cdf(const GumbelMixture& m, double lo, double hi, std::size_t points) {
  std::vector<double> values(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  double running = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = std::clamp(gumbel_mixture_cdf(m, lo + step * static_cast<double>(i)), 0.0, 1.0);
    running = std::max(running, v);
    values[i] = running;
  }
  return GriddedCdf(lo, hi, std::move(values));
}

std::string LimitComparison::to_json() const {
  nlohmann::json j;
  j["beta_star"] = beta_star;
  j["shift"] = shift;
  j["levy_after_shift"] = levy_after_shift;
  j["n_samples"] = n_samples;
  j["flags"] = {{"negative_z_fraction", negative_z_fraction}};
  return j.dump(2);
}

LimitComparison compare_to_limit(const EmpiricalDistribution& empirical, const GumbelMixture& m) {
  if (empirical.empty()) throw InsufficientDataError("compare_to_limit: empty sample");
  if (m.z_samples.empty()) throw InsufficientDataError("compare_to_limit: no z samples");
  const double a = std::sqrt(2.0 * m.dim);
  double loc_lo = std::numeric_limits<double>::infinity();
  double loc_hi = -std::numeric_limits<double>::infinity();
  for (double z : m.z_samples.samples()) {
    if (!(z > 0.0)) continue;
    const double loc = std::log(m.beta_star * z) / a;
    loc_lo = std::min(loc_lo, loc);
    loc_hi = std::max(loc_hi, loc);
  }
  if (!std::isfinite(loc_lo)) {
    loc_lo = 0.0;
    loc_hi = 0.0;
  }
  // exp(-e^{5}) and 1 - exp(-e^{-30}) are below double resolution at the ends.
  const double lo = loc_lo - 5.0 / a;
  const double hi = loc_hi + 30.0 / a;
  const GriddedCdf cdf = grid_mixture_cdf(m, lo, hi);
  LimitComparison out;
  out.beta_star = m.beta_star;
  out.n_samples = empirical.size();
  out.negative_z_fraction = m.negative_z_fraction();
  out.shift = empirical.quantile(0.5) - cdf.quantile(0.5);
  const EmpiricalDistribution moved = empirical.shifted(-out.shift);
  out.levy_after_shift = levy_distance(moved, [&cdf](double x) { return cdf(x); });
  return out;
}

BetaFit fit_beta_star(std::span<const TailRow> rows, double z_lo, double z_hi) {
  std::vector<const TailRow*> use;
  for (const auto& r : rows) {
    if (r.z >= z_lo && r.z <= z_hi && r.p_hat > 0.0) use.push_back(&r);
  }
  if (use.size() < 2) {
    throw InsufficientDataError("fit_beta_star needs two window points with p_hat > 0, found " +
                                std::to_string(use.size()));
  }
  const bool weighted =
      std::all_of(use.begin(), use.end(), [](const TailRow* r) { return r->stderr_beta > 0.0; });
  double sw = 0.0;
  double swx = 0.0;
  for (const TailRow* r : use) {
    const double w = weighted ? 1.0 / (r->stderr_beta * r->stderr_beta) : 1.0;
    sw += w;
    swx += w * r->beta_hat;
  }
  BetaFit fit;
  fit.points = use.size();
  fit.estimate = swx / sw;
  if (weighted) {
    fit.stderr_estimate = std::sqrt(1.0 / sw);
  } else {
    double ss = 0.0;
    for (const TailRow* r : use) ss += (r->beta_hat - fit.estimate) * (r->beta_hat - fit.estimate);
    const double n = static_cast<double>(use.size());
    fit.stderr_estimate = std::sqrt(ss / (n - 1.0) / n);
  }
  return fit;
}

SlopeFit tail_slope(std::span<const TailPoint> points) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : points) {
    if (p.p > 0.0 && p.z > 0.0) {
      xs.push_back(p.z);
      ys.push_back(std::log(p.p / p.z));
    }
  }
  if (xs.size() < 3) {
    throw InsufficientDataError("tail_slope needs three window points with non-zero tail counts");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("tail_slope: window points coincide");
  SlopeFit fit;
  fit.points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += e * e;
  }
  fit.stderr_slope = xs.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

SlopeFit tail_slope(const EmpiricalDistribution& centered_maxima, double lo, double hi, double step) {
  if (centered_maxima.empty()) throw InsufficientDataError("tail_slope: empty sample");
  if (!(step > 0.0) || !(hi >= lo)) throw InputError("tail_slope: bad window");
  std::vector<TailPoint> pts;
  for (int i = 0;; ++i) {
    const double z = lo + step * i;
    if (z > hi + 1e-12) break;
    pts.push_back(TailPoint{z, 1.0 - centered_maxima.cdf(z)});
  }
  return tail_slope(pts);
}

}  // namespace lcgf
