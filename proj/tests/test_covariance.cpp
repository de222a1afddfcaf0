#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "lcgf/covariance.hpp"
#include "lcgf/error.hpp"

using namespace lcgf;

namespace {

LatticePoint P(std::initializer_list<int> c) { return LatticePoint{std::vector<int>(c)}; }

std::vector<LatticePoint> all_points(int d, int side) {
  const Shape s(d, side);
  std::vector<LatticePoint> out;
  for (std::size_t i = 0; i < s.volume(); ++i) out.push_back(s.point(i));
  return out;
}

// Smallest eigenvalue of the circulant CLREM matrix at W = 0, from its DFT.
double clrem_min_eigenvalue(int side) {
  const double pi = std::acos(-1.0);
  double best = INFINITY;
  for (int j = 0; j < side; ++j) {
    double lambda = std::log(static_cast<double>(side));
    for (int k = 1; k < side; ++k) {
      const double s = std::sin(pi * k / side);
      lambda += -0.5 * std::log(4.0 * s * s) * std::cos(2.0 * pi * j * k / side);
    }
    best = std::min(best, lambda);
  }
  return best;
}

}  // namespace

TEST_SUITE("covariance") {
  TEST_CASE("brw covariance examples") {
    const auto s1 = FieldSpec::brw(1, 3);
    CHECK(brw_covariance(s1, P({1}), P({1})) == doctest::Approx(4 * oracle::kLn2).epsilon(1e-14));
    CHECK(brw_covariance(s1, P({1}), P({2})) == doctest::Approx(2 * oracle::kLn2).epsilon(1e-14));
    const auto s2 = FieldSpec::brw(2, 2);
    CHECK(brw_covariance(s2, P({0, 0}), P({3, 3})) == doctest::Approx(oracle::kLn2).epsilon(1e-14));
    CHECK_THROWS_AS(brw_covariance(s2, P({0}), P({1, 1})), InputError);
  }

  TEST_CASE("brw equals box enumeration and takes values in log2 multiples") {
    for (int d = 1; d <= 2; ++d) {
      for (int n = 0; n <= (d == 1 ? 5 : 3); ++n) {
        const auto spec = FieldSpec::brw(d, n);
        const auto pts = all_points(d, 1 << n);
        for (const auto& x : pts) {
          for (const auto& y : pts) {
            const double c = brw_covariance(spec, x, y);
            CHECK(c == doctest::Approx(oracle::brw(d, n, x, y)).epsilon(1e-13));
            const double m = c / oracle::kLn2;
            CHECK(std::abs(m - std::round(m)) < 1e-12);
            CHECK(m >= -1e-12);
            CHECK(m <= n + 1 + 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("mbrw closed form equals brute-force box enumeration") {
    for (int d = 1; d <= 2; ++d) {
      for (int n = 0; n <= (d == 1 ? 4 : 3); ++n) {
        const auto spec = FieldSpec::mbrw(d, n);
        const auto pts = all_points(d, 1 << n);
        for (const auto& x : pts) {
          for (const auto& y : pts) {
            CHECK(std::abs(mbrw_covariance(spec, x, y) - oracle::mbrw(d, n, x, y)) < 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("mbrw examples") {
    const auto s = FieldSpec::mbrw(2, 8);
    CHECK(mbrw_covariance(s, P({17, 200}), P({17, 200})) == doctest::Approx(9 * oracle::kLn2).epsilon(1e-13));
    // N = 4, x = 0, y = 2: only level j = 2 contributes. Both side-4 boxes
    // through each point are counted, giving 4 identified pairs of weight
    // log2 / 4, i.e. log 2 in total.
    const auto s4 = FieldSpec::mbrw(1, 2);
    CHECK(mbrw_covariance(s4, P({0}), P({2})) == doctest::Approx(oracle::kLn2).epsilon(1e-14));
    CHECK(oracle::mbrw(1, 2, P({0}), P({2})) == doctest::Approx(oracle::kLn2).epsilon(1e-14));
  }

  TEST_CASE("mbrw symmetric, diagonal dominant, variance (n+1) log 2") {
    for (int n = 1; n <= 6; ++n) {
      const auto spec = FieldSpec::mbrw(2, n);
      const auto pts = all_points(2, 1 << n);
      for (std::size_t a = 0; a < pts.size(); a += 3) {
        const double var = mbrw_covariance(spec, pts[a], pts[a]);
        CHECK(var == doctest::Approx((n + 1) * oracle::kLn2).epsilon(1e-13));
        for (std::size_t b = 0; b < pts.size(); b += 5) {
          const double c = mbrw_covariance(spec, pts[a], pts[b]);
          CHECK(c == mbrw_covariance(spec, pts[b], pts[a]));
          CHECK(var >= c);
        }
      }
    }
  }

  TEST_CASE("mbrw stays within a bounded distance of log N - log torus distance") {
    // The sup over all pairs from the origin (translation invariance) for n <= 10, d = 1.
    double worst = 0.0;
    for (int n = 1; n <= 10; ++n) {
      const int side = 1 << n;
      const auto spec = FieldSpec::mbrw(1, n);
      for (int y = 0; y < side; ++y) {
        const double t = std::min(y, side - y);
        const double target = std::log(static_cast<double>(side)) - std::log(std::max(t, 1.0));
        worst = std::max(worst, std::abs(mbrw_covariance(spec, P({0}), P({y})) - target));
      }
    }
    CHECK(worst < 2.0);
  }

  TEST_CASE("clrem examples") {
    const auto s = FieldSpec::clrem(8, 0.25);
    CHECK(clrem_covariance(s, 3, 3) == doctest::Approx(std::log(8.0) + 0.25).epsilon(1e-14));
    CHECK(clrem_covariance(s, 0, 4) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(clrem_covariance(s, 2, 6) == doctest::Approx(-0.69314718).epsilon(1e-8));
    const double s1 = std::sin(std::acos(-1.0) / 8.0);
    CHECK(clrem_covariance(s, 0, 1) == doctest::Approx(-0.5 * std::log(4.0 * s1 * s1)).epsilon(1e-14));
    CHECK(std::abs(clrem_covariance(s, 0, 1) - 0.26740) < 1e-5);
    CHECK(clrem_covariance(s, 0, 1) == clrem_covariance(s, 1, 0));
    CHECK_THROWS_AS(clrem_covariance(s, 0, 8), InputError);
  }

  TEST_CASE("build_dense") {
    const auto oracle_m = CovarianceOracle::from_spec(FieldSpec::mbrw(1, 2));
    const std::vector<LatticePoint> one{P({1})};
    const auto m1 = build_dense(oracle_m, one);
    CHECK(m1.size() == 1);
    CHECK(m1(0, 0) == doctest::Approx(3 * oracle::kLn2));

    const auto full = build_dense(oracle_m);
    REQUIRE(full.size() == 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(full(i, j) - oracle::mbrw(1, 2, P({i}), P({j}))) < 1e-12);
      }
    }
    const std::vector<LatticePoint> dup{P({1}), P({2}), P({1})};
    CHECK_THROWS_AS(build_dense(oracle_m, dup), InputError);
    CHECK_THROWS_AS(build_dense(CovarianceOracle::from_spec(FieldSpec::mbrw(2, 3)), 10), CapacityError);
  }

  TEST_CASE("cholesky") {
    const auto id = cholesky(DenseCovariance(3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));
    }
    const auto l = cholesky(DenseCovariance(2, {2, 1, 1, 2}));
    CHECK(l(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
    try {
      (void)cholesky(DenseCovariance(2, {1, 2, 2, 1}));
      FAIL("expected NotPDError");
    } catch (const NotPDError& e) {
      CHECK(e.pivot_index() == 1);
      CHECK(e.exit_code() == ExitCode::kNumerical);
    }
    CHECK_THROWS_AS(DenseCovariance(2, {1, 0.5, 0.4, 1}), InputError);
  }

  TEST_CASE("cholesky reproduces the matrix") {
    const auto m = build_dense(CovarianceOracle::from_spec(FieldSpec::mbrw(2, 3)));
    const auto l = cholesky(m);
    double err = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.size(); ++k) s += l(i, k) * l(j, k);
        err += (s - m(i, j)) * (s - m(i, j));
        norm += m(i, j) * m(i, j);
        if (j > i) CHECK(l(i, j) == 0.0);
      }
    }
    CHECK(std::sqrt(err / norm) < 1e-8);
  }

  TEST_CASE("find_minimal_w matches the DFT eigenvalue oracle") {
    // N = 2: [[ln2 + W, -ln2], [-ln2, ln2 + W]] has eigenvalues W and 2 ln2 + W.
    CHECK(std::abs(find_minimal_w(2, 1e-9)) < 1e-6);
    for (int side : {2, 3, 8, 64, 512}) {
      const double w = find_minimal_w(side, 1e-7);
      CHECK(std::isfinite(w));
      CHECK(std::abs(w + clrem_min_eigenvalue(side)) < 1e-5);
      CHECK_NOTHROW((void)cholesky(clrem_matrix(side, w + 0.01)));
    }
  }

  TEST_CASE("dense binary round trip") {
    const auto m = build_dense(CovarianceOracle::from_spec(FieldSpec::clrem(8, 0.5)));
    std::stringstream ss;
    write_dense_binary(ss, m, 1);
    std::uint32_t dim = 0;
    const auto back = read_dense_binary(ss, &dim);
    CHECK(dim == 1);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) CHECK(back(i, j) == m(i, j));
    }
  }
}
