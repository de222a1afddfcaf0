#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lcgf/covariance.hpp"
#include "lcgf/field_spec.hpp"

namespace lcgf {

struct Witness {
  LatticePoint u;
  LatticePoint v;
  double dev = 0.0;
};

/// One pair-probe result: the sup over probed pairs and the pairs that attain it.
struct ProbeResult {
  double estimate = 0.0;
  std::vector<Witness> witnesses;
  std::size_t pairs_probed = 0;
  bool exhaustive = false;
};

/// log x for x > 1, else 0.
double log_plus(double x);

/// max(Var u - log N, Var v - log N, (E(u-v)^2 - 2 log+|u-v| + |Var v - Var u|) / 4).
double a0_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v);
/// |Cov(u, v) - (log N - log+|u - v|)| with the Euclidean norm.
double a1_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v);
/// |Cov(u, v) - (log N - log(|u - v|_N v 1))| with the torus norm.
double torus_deviation(const CovarianceOracle& oracle, const LatticePoint& u, const LatticePoint& v);

/// Points at l_inf distance >= delta N from the complement of V_N.
std::vector<LatticePoint> interior_points(const Shape& shape, double delta);

/// Unordered pairs (diagonal included) of `points`: all of them when they
/// fit in pair_budget, otherwise the first pair_budget terms of a fixed
/// additive-recurrence sequence (so a larger budget only adds pairs).
std::vector<std::pair<std::size_t, std::size_t>> probe_pairs(std::size_t points, std::size_t pair_budget,
                                                             std::uint64_t probe_seed, bool* exhaustive);

using PairDeviation = std::function<double(const LatticePoint&, const LatticePoint&)>;

/// sup of dev over probed pairs of `points`; witnesses are the pairs attaining it (capped at 8).
ProbeResult probe_sup(const std::vector<LatticePoint>& points, const PairDeviation& dev,
                      std::size_t pair_budget, std::uint64_t probe_seed = 0);

ProbeResult check_a0(const CovarianceOracle& oracle, std::size_t pair_budget, std::uint64_t probe_seed = 0);
/// Needs 0 <= delta < 1/2.
ProbeResult check_a1(const CovarianceOracle& oracle, double delta, std::size_t pair_budget,
                     std::uint64_t probe_seed = 0);
ProbeResult check_torus_log_correlation(const CovarianceOracle& oracle, std::size_t pair_budget,
                                        std::uint64_t probe_seed = 0);

struct FghGrids {
  /// Macroscopic points x in (0, 1)^d.
  std::vector<std::vector<double>> x;
  /// Microscopic offsets are {0..L}^d.
  int l_max = 1;
};

struct FghEstimate {
  int n = 0;
  /// f_hat per x.
  std::vector<double> f;
  /// g_hat over ordered pairs of offsets, row-major in (u, v).
  std::vector<double> g;
  /// h_hat over ordered pairs (x_a, x_b), a != b; the diagonal is NaN.
  std::vector<double> h;
  /// max |Cov - log N - f_hat(x) - g_hat(u,v)| over probed triples.
  double decomposition_residual = 0.0;
};

struct FghReport {
  std::vector<FghEstimate> per_n;
  /// max |change| between consecutive n of f, g, h.
  double stability_f = 0.0;
  double stability_g = 0.0;
  double stability_h = 0.0;
};

/// f_hat(x) = mean over u in {0..L}^d of Var(xN + u) - log N; g_hat(u, v) =
/// mean over x of Cov(xN + v, xN + u) - log N - f_hat(x); h_hat(x, y) =
/// Cov(xN, yN). xN is taken coordinatewise as floor(x_i N).
FghReport estimate_fgh(const std::function<CovarianceOracle(int n)>& oracle_at,
                       const std::vector<int>& n_grid, const FghGrids& grids);

/// {assumption, estimate, witnesses: [{u, v, dev}], pairs_probed, exhaustive}.
std::string probe_json(const std::string& assumption, const ProbeResult& r);
/// Full report: A.0, A.1 per delta, and optional f/g/h fits.
std::string assumption_report_json(const ProbeResult& a0, const std::map<double, ProbeResult>& a1,
                                   const FghReport* fgh, const FghGrids* grids);

}  // namespace lcgf
