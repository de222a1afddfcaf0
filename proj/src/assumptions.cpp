#include "lcgf/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "lcgf/error.hpp"
#include "lcgf/extremes.hpp"

namespace lcgf {

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

namespace {

double log_side(const CovarianceOracle& oracle) { return std::log(static_cast<double>(oracle.spec().side)); }

double torus_norm(const LatticePoint& u, const LatticePoint& v, int side) {
  double s = 0.0;
  for (int i = 0; i < u.dim(); ++i) {
    const int t = std::abs(u[i] - v[i]) % side;
    const double m = std::min(t, side - t);
    s += m * m;
  }
  return std::sqrt(s);
}

// Additive recurrence on the unit square with the plastic-number constants.
constexpr double kA1 = 0.7548776662466927;
constexpr double kA2 = 0.5698402909980532;

}  // namespace

double a0_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v) {
  const double ln = log_side(oracle);
  const double vu = oracle.variance(u);
  const double vv = oracle.variance(v);
  const double inc = vu + vv - 2.0 * oracle(u, v);
  const double dist = std::sqrt(static_cast<double>(distance_sq(u, v)));
  const double pair_term = 0.25 * (inc - 2.0 * log_plus(dist) + std::abs(vv - vu));
  return std::max({vu - ln, vv - ln, pair_term});
}

double a1_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v) {
  const double dist = std::sqrt(static_cast<double>(distance_sq(u, v)));
  return std::abs(oracle(u, v) - (log_side(oracle) - log_plus(dist)));
}

double torus_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v) {
  const double dist = std::max(torus_norm(u, v, oracle.spec().side), 1.0);
  return std::abs(oracle(u, v) - (log_side(oracle) - std::log(dist)));
}

std::vector<LatticePoint> interior_points(const Shape& shape, double delta) {
  const double need = delta * shape.side();
  std::vector<LatticePoint> out;
  for (std::size_t i = 0; i < shape.volume(); ++i) {
    LatticePoint p = shape.point(i);
    int dist = std::numeric_limits<int>::max();
    for (int c : p.coords) dist = std::min({dist, c + 1, shape.side() - c});
    if (dist >= need) out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> probe_pairs(std::size_t points, std::size_t pair_budget,
                                                             std::uint64_t probe_seed, bool* exhaustive) {
  if (pair_budget < 1) throw InputError("pair_budget must be at least 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t total = points * (points + 1) / 2;
  if (total <= pair_budget) {
    if (exhaustive) *exhaustive = true;
    out.reserve(total);
    for (std::size_t i = 0; i < points; ++i) {
      for (std::size_t j = i; j < points; ++j) out.emplace_back(i, j);
    }
    return out;
  }
  if (exhaustive) *exhaustive = false;
  // The seed only moves the starting offset.
  const double s1 = static_cast<double>(probe_seed % 1000003) * kA1;
  const double s2 = static_cast<double>(probe_seed % 1000033) * kA2;
  out.reserve(pair_budget);
  const double m = static_cast<double>(points);
  for (std::size_t k = 0; k < pair_budget; ++k) {
    const double kk = static_cast<double>(k);
    const double x = std::fmod(s1 + kk * kA1, 1.0);
    const double y = std::fmod(s2 + kk * kA2, 1.0);
    auto i = std::min(static_cast<std::size_t>(x * m), points - 1);
    auto j = std::min(static_cast<std::size_t>(y * m), points - 1);
    if (i > j) std::swap(i, j);
    out.emplace_back(i, j);
  }
  return out;
}

ProbeResult probe_sup(const std::vector<LatticePoint>& points, const PairDeviation& dev,
                      std::size_t pair_budget, std::uint64_t probe_seed) {
  if (points.empty()) throw InputError("no points to probe");
  ProbeResult r;
  const auto pairs = probe_pairs(points.size(), pair_budget, probe_seed, &r.exhaustive);
  r.pairs_probed = pairs.size();
  r.estimate = -std::numeric_limits<double>::infinity();
  constexpr std::size_t kMaxWitnesses = 8;
  for (const auto& [i, j] : pairs) {
    const double d = dev(points[i], points[j]);
    if (d > r.estimate) {
      r.estimate = d;
      r.witnesses.clear();
    }
    if (d == r.estimate && r.witnesses.size() < kMaxWitnesses) {
      r.witnesses.push_back(Witness{points[i], points[j], d});
    }
  }
  return r;
}

namespace {

std::vector<LatticePoint> all_points(const Shape& shape) {
  std::vector<LatticePoint> pts;
  pts.reserve(shape.volume());
  for (std::size_t i = 0; i < shape.volume(); ++i) pts.push_back(shape.point(i));
  return pts;
}

}  // namespace

ProbeResult check_a0(const CovarianceOracle& oracle, std::size_t pair_budget, std::uint64_t probe_seed) {
  ProbeResult r = probe_sup(
      all_points(oracle.spec().shape()),
      [&](const LatticePoint& u, const LatticePoint& v) { return a0_deviation(oracle, u, v); }, pair_budget,
      probe_seed);
  // alpha_0 > 0 by definition, so a negative sup still certifies 0.
  r.estimate = std::max(r.estimate, 0.0);
  return r;
}

ProbeResult check_a1(const CovarianceOracle& oracle, double delta, std::size_t pair_budget,
                     std::uint64_t probe_seed) {
  if (!(delta >= 0.0 && delta < 0.5)) throw InputError("delta must lie in [0, 1/2)");
  const auto pts = interior_points(oracle.spec().shape(), delta);
  if (pts.empty()) throw InputError("V_N^delta is empty");
  return probe_sup(
      pts, [&](const LatticePoint& u, const LatticePoint& v) { return a1_deviation(oracle, u, v); },
      pair_budget, probe_seed);
}

ProbeResult check_torus_log_correlation(const CovarianceOracle& oracle, std::size_t pair_budget,
                                        std::uint64_t probe_seed) {
  return probe_sup(
      all_points(oracle.spec().shape()),
      [&](const LatticePoint& u, const LatticePoint& v) { return torus_deviation(oracle, u, v); },
      pair_budget, probe_seed);
}

namespace {

LatticePoint macro_point(const std::vector<double>& x, int side, int dim) {
  if (static_cast<int>(x.size()) != dim) throw InputError("grid point has the wrong dimension");
  LatticePoint p;
  for (double c : x) {
    if (!(c > 0.0 && c < 1.0)) throw InputError("grid point must lie in (0,1)^d");
    p.coords.push_back(static_cast<int>(std::floor(c * side)));
  }
  return p;
}

LatticePoint plus(const LatticePoint& a, const LatticePoint& b) {
  LatticePoint c = a;
  for (int i = 0; i < a.dim(); ++i) c.coords[static_cast<std::size_t>(i)] += b[i];
  return c;
}

double max_change(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

FghEstimate fgh_at(const CovarianceOracle& oracle, int n, const FghGrids& grids) {
  const FieldSpec& spec = oracle.spec();
  const Shape shape = spec.shape();
  const double ln = std::log(static_cast<double>(spec.side));
  const Shape offsets(spec.dim, grids.l_max + 1);
  const std::size_t no = offsets.volume();
  const std::size_t nx = grids.x.size();

  FghEstimate e;
  e.n = n;
  std::vector<LatticePoint> base(nx);
  for (std::size_t a = 0; a < nx; ++a) {
    base[a] = macro_point(grids.x[a], spec.side, spec.dim);
    const LatticePoint far = plus(base[a], offsets.point(no - 1));
    if (!shape.contains(far)) throw InputError("grid point plus offset leaves V_N");
  }
  // cov[a][u][v] - log N
  std::vector<double> c(nx * no * no);
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t u = 0; u < no; ++u) {
      const LatticePoint pu = plus(base[a], offsets.point(u));
      for (std::size_t v = 0; v < no; ++v) {
        c[(a * no + u) * no + v] = oracle(plus(base[a], offsets.point(v)), pu) - ln;
      }
    }
  }
  e.f.assign(nx, 0.0);
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t u = 0; u < no; ++u) e.f[a] += c[(a * no + u) * no + u];
    e.f[a] /= static_cast<double>(no);
  }
  e.g.assign(no * no, 0.0);
  for (std::size_t u = 0; u < no; ++u) {
    for (std::size_t v = 0; v < no; ++v) {
      double s = 0.0;
      for (std::size_t a = 0; a < nx; ++a) s += c[(a * no + u) * no + v] - e.f[a];
      e.g[u * no + v] = s / static_cast<double>(nx);
    }
  }
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t uv = 0; uv < no * no; ++uv) {
      e.decomposition_residual =
          std::max(e.decomposition_residual, std::abs(c[a * no * no + uv] - e.f[a] - e.g[uv]));
    }
  }
  e.h.assign(nx * nx, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t b = 0; b < nx; ++b) {
      if (a != b) e.h[a * nx + b] = oracle(base[a], base[b]);
    }
  }
  return e;
}

}  // namespace

FghReport estimate_fgh(const std::function<CovarianceOracle(int n)>& oracle_at, const std::vector<int>& n_grid,
                       const FghGrids& grids) {
  if (n_grid.size() < 2) throw InputError("estimate_fgh needs at least two sizes");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw InputError("estimate_fgh: N grid must be strictly ascending");
  }
  if (grids.x.empty()) throw InputError("estimate_fgh: empty x grid");
  if (grids.l_max < 0) throw InputError("estimate_fgh: L must be non-negative");
  FghReport rep;
  for (int n : n_grid) rep.per_n.push_back(fgh_at(oracle_at(n), n, grids));
  for (std::size_t i = 1; i < rep.per_n.size(); ++i) {
    rep.stability_f = std::max(rep.stability_f, max_change(rep.per_n[i - 1].f, rep.per_n[i].f));
    rep.stability_g = std::max(rep.stability_g, max_change(rep.per_n[i - 1].g, rep.per_n[i].g));
    rep.stability_h = std::max(rep.stability_h, max_change(rep.per_n[i - 1].h, rep.per_n[i].h));
  }
  return rep;
}

namespace {

nlohmann::json probe_to_json(const std::string& assumption, const ProbeResult& r) {
  nlohmann::json j;
  j["assumption"] = assumption;
  j["estimate"] = r.estimate;
  j["pairs_probed"] = r.pairs_probed;
  j["exhaustive"] = r.exhaustive;
  j["witnesses"] = nlohmann::json::array();
  for (const auto& w : r.witnesses) j["witnesses"].push_back({{"u", w.u.coords}, {"v", w.v.coords}, {"dev", w.dev}});
  return j;
}

nlohmann::json nan_to_null(const std::vector<double>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (double x : v) {
    if (std::isnan(x)) {
      j.push_back(nullptr);
    } else {
      j.push_back(x);
    }
  }
  return j;
}

}  // namespace

std::string probe_json(const std::string& assumption, const ProbeResult& r) {
  return probe_to_json(assumption, r).dump(2);
}

std::string assumption_report_json(const ProbeResult& a0, const std::map<double, ProbeResult>& a1,
                                   const FghReport* fgh, const FghGrids* grids) {
  nlohmann::json j;
  j["A0"] = probe_to_json("A0", a0);
  j["A1"] = nlohmann::json::array();
  for (const auto& [delta, r] : a1) {
    auto item = probe_to_json("A1", r);
    item["delta"] = delta;
    j["A1"].push_back(item);
  }
  if (fgh && grids) {
    nlohmann::json g;
    g["x"] = grids->x;
    g["L"] = grids->l_max;
    g["stability"] = {{"f", fgh->stability_f}, {"g", fgh->stability_g}, {"h", fgh->stability_h}};
    g["per_n"] = nlohmann::json::array();
    for (const auto& e : fgh->per_n) {
      g["per_n"].push_back({{"n", e.n},
                            {"f_hat", e.f},
                            {"g_hat", e.g},
                            {"h_hat", nan_to_null(e.h)},
                            {"decomposition_residual", e.decomposition_residual}});
    }
    j["grids"] = g;
  }
  return j.dump(2);
}

}  // namespace lcgf
