#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "lcgf/approx.hpp"
#include "lcgf/error.hpp"
#include "lcgf/field_io.hpp"
#include "lcgf/rng.hpp"
#include "lcgf/stats.hpp"

using namespace lcgf;

namespace {

XiParams small(int dim = 1, int n = 6, int k = 1, int l = 1, int kp = 1, int lp = 1, double alpha = 0.5) {
  XiParams p;
  p.dim = dim;
  p.n = n;
  p.k = k;
  p.l = l;
  p.kp = kp;
  p.lp = lp;
  p.alpha = alpha;
  return p;
}

}  // namespace

TEST_SUITE("approx") {
  TEST_CASE("derived scales") {
    const auto p = small(2, 9, 1, 1, 2, 2);
    CHECK(p.nbar() == 7);
    CHECK(p.lbar() == 4);
    CHECK(p.nstar() == 4);
    CHECK(p.box_side() == 128);
    CHECK_THROWS_AS(small(1, 4, 1, 1, 2, 2).validate(), InputError);
  }

  TEST_CASE("components: coarse constant per box, mbrw constant per local box, sum is total") {
    const auto p = small(2, 6, 1, 1, 1, 1);
    const auto xi = build_xi(p, 3);
    const Shape s = xi.shape();
    const auto fine = fine_field(xi);
    for (std::size_t i = 0; i < s.volume(); ++i) {
      const auto v = s.point(i);
      const LatticePoint box_corner{{v[0] - v[0] % 16, v[1] - v[1] % 16}};
      const LatticePoint local_corner{{v[0] - v[0] % 4, v[1] - v[1] % 4}};
      CHECK(xi.coarse[i] == xi.coarse[s.index(box_corner)]);
      CHECK(xi.mbrw_part[i] == xi.mbrw_part[s.index(local_corner)]);
      CHECK(std::abs(xi.coarse[i] + xi.bottom[i] + xi.mbrw_part[i] + xi.correction[i] - xi.total[i]) < 1e-10);
      // fine is total - coarse exactly; adding coarse back is exact only up to rounding.
      CHECK(fine[i] == xi.total[i] - xi.coarse[i]);
      CHECK(std::abs(fine[i] + xi.coarse[i] - xi.total[i]) <= 1e-12 * (1.0 + std::abs(xi.total[i])));
    }
    const auto again = build_xi(p, 3);
    CHECK(again.total == xi.total);
  }

  TEST_CASE("KL = 1: coarse part vanishes and fine equals total") {
    const auto p = small(1, 6, 0, 0, 1, 1);
    const XiModel model(p);
    CHECK_FALSE(model.has_coarse());
    const auto xi = build_xi(model, 5);
    for (double c : xi.coarse) CHECK(c == 0.0);
    CHECK(fine_field(xi) == xi.total);
  }

  TEST_CASE("alpha = 0 with an mbrw reference is rejected") {
    CHECK_THROWS_AS(XiModel(small(1, 6, 1, 1, 1, 1, 0.0)), NegativeCorrectionVariance);
    try {
      XiModel m(small(1, 6, 1, 1, 1, 1, 0.0));
    } catch (const NegativeCorrectionVariance& e) {
      CHECK(e.value() < 0.0);
      CHECK(e.exit_code() == ExitCode::kNumerical);
    }
  }

  TEST_CASE("variance identity and component independence") {
    const auto p = small(1, 6, 1, 1, 1, 1, 0.5);
    const XiModel model(p);
    std::vector<double> total;
    std::vector<double> coarse;
    std::vector<double> bottom;
    std::vector<double> mbrw;
    std::vector<double> corr;
    std::vector<double> bottom_other;
    std::vector<double> mbrw_other;
    for (std::size_t r = 0; r < 100000; ++r) {
      const auto xi = build_xi(model, replica_seed(17, r));
      total.push_back(xi.total[21]);
      coarse.push_back(xi.coarse[21]);
      bottom.push_back(xi.bottom[21]);
      mbrw.push_back(xi.mbrw_part[21]);
      corr.push_back(xi.correction[21]);
      bottom_other.push_back(xi.bottom[26]);  // next local box, same coarse box
      mbrw_other.push_back(xi.mbrw_part[37]);  // next coarse box
    }
    const MeanSE v = covariance_se(total, total);
    const double exact = model.covariance(LatticePoint{{21}}, LatticePoint{{21}});
    CHECK(std::abs(v.mean - exact) <= 3.0 * v.se);
    // The per-class averaging of a^2 matches Var(phi) + 4 alpha on average over
    // each residue class, and pointwise up to the reported epsilon.
    const double target = 7 * kLog2 + 4 * p.alpha;
    double mean_var = 0.0;
    for (int x = 0; x < 64; ++x) {
      const double var = model.covariance(LatticePoint{{x}}, LatticePoint{{x}});
      CHECK(std::abs(var - target) <= model.epsilon() + 1e-12);
      mean_var += var / 64.0;
    }
    CHECK(mean_var == doctest::Approx(target).epsilon(1e-12));

    const std::vector<std::vector<double>*> parts{&coarse, &bottom, &mbrw, &corr};
    for (std::size_t a = 0; a < parts.size(); ++a) {
      for (std::size_t b = a + 1; b < parts.size(); ++b) {
        const MeanSE c = covariance_se(*parts[a], *parts[b]);
        CHECK(std::abs(c.mean) <= 4.0 * c.se);
      }
    }
    const MeanSE cb = covariance_se(bottom, bottom_other);
    CHECK(std::abs(cb.mean) <= 4.0 * cb.se);
    const MeanSE cm = covariance_se(mbrw, mbrw_other);
    CHECK(std::abs(cm.mean) <= 4.0 * cm.se);
  }

  TEST_CASE("backbone") {
    const auto p = small(2, 6, 1, 1, 1, 1);
    const auto xi = build_xi(p, 9);
    const Shape s = xi.shape();
    for (const LatticePoint v : {LatticePoint{{0, 0}}, LatticePoint{{20, 36}}, LatticePoint{{60, 4}}}) {
      const auto b = backbone(xi, v);
      REQUIRE(b.x.size() == static_cast<std::size_t>(p.nstar()) + 1);
      CHECK(b.x[0] == 0.0);
      CHECK(b.x.back() == xi.mbrw_part[s.index(v)]);
    }
    CHECK_THROWS_AS(backbone(xi, LatticePoint{{1, 0}}), InputError);
    XiField stripped = xi;
    stripped.mbrw_levels.clear();
    CHECK_THROWS_AS(backbone(stripped, LatticePoint{{0, 0}}), StateError);
  }

  TEST_CASE("backbone increments have variance log 2") {
    const auto p = small(1, 6, 1, 1, 1, 1);
    const XiModel model(p);
    std::vector<std::vector<double>> inc(static_cast<std::size_t>(p.nstar()));
    for (std::size_t r = 0; r < 100000; ++r) {
      const auto b = backbone(build_xi(model, replica_seed(23, r)), LatticePoint{{4}});
      for (std::size_t t = 0; t < inc.size(); ++t) inc[t].push_back(b.x[t + 1] - b.x[t]);
    }
    for (const auto& x : inc) {
      const MeanSE v = covariance_se(x, x);
      CHECK(std::abs(v.mean - kLog2) <= 3.0 * v.se);
    }
  }

  TEST_CASE("barrier counts equal a brute-force recount") {
    // nbar = 4, lbar = 1.
    const auto p = small(2, 6, 1, 1, 1, 0);
    REQUIRE(p.nbar() == 4);
    REQUIRE(p.lbar() == 1);
    const XiModel model(p);
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < 300; ++r) {
      const auto xi = build_xi(model, replica_seed(29, r));
      for (double z : {1.0, 1.5, 2.5, 4.0}) {
        for (std::size_t box : {0u, 3u}) {
          const auto got = count_barrier_events(xi, z, box);
          const auto want = oracle::barrier_counts(xi, z, box);
          CHECK(got.lambda == want.lambda);
          CHECK(got.gamma_count == want.gamma);
          CHECK(got.g_event == want.g);
          CHECK(got.lambda <= got.gamma_count);
          nonzero += got.gamma_count;
        }
      }
    }
    CHECK(nonzero > 0);
  }

  TEST_CASE("barrier counts vanish above every local max") {
    const auto p = small(2, 6, 1, 1, 1, 1);
    const auto xi = build_xi(p, 2);
    const auto fine = fine_field(xi);
    const double top = *std::max_element(fine.begin(), fine.end());
    const auto c = count_barrier_events(xi, std::max(1.0, top - oracle::centering(16, 2) + 1.0));
    CHECK(c.lambda == 0);
    CHECK(c.gamma_count == 0);
    CHECK_THROWS_AS(count_barrier_events(xi, 0.5), DomainError);
  }

  TEST_CASE("barrier formulas") {
    const auto p = small(2, 9, 1, 1, 2, 2);
    const double m = oracle::centering(128, 2);
    CHECK(barrier_straight(p, 2.0, 0) == 2.0);
    CHECK(barrier_straight(p, 2.0, 7) == doctest::Approx(2.0 + m));
    CHECK(barrier_bent(p, 2.0, 1) == doctest::Approx(barrier_straight(p, 2.0, 1) + std::pow(2.0, 0.05)));
    CHECK(barrier_bent(p, 2.0, 2) == doctest::Approx(barrier_straight(p, 2.0, 2) + 10 * std::log(2.0) + std::pow(2.0, 0.05)));
  }

  TEST_CASE("exported backbones agree with backbone()") {
    const auto p = small(2, 6, 1, 1, 1, 1);
    const auto xi = build_xi(p, 4);
    const auto recs = export_backbones(xi, 2);
    CHECK(recs.size() == 16);
    for (const auto& r : recs) {
      CHECK(coarse_box_index(p, r.corner) == 2);
      CHECK(backbone(xi, r.corner).x == r.x);
    }
  }

  TEST_CASE("synthetic tail inverts to beta = 0.5") {
    const std::vector<double> grid{1.0, 1.5, 2.0, 2.5, 3.0};
    const std::size_t m = 10000000;
    std::vector<std::size_t> counts;
    for (double z : grid) counts.push_back(static_cast<std::size_t>(std::llround(0.5 * z * std::exp(-2.0 * z) * m)));
    std::vector<double> samples(m, -10.0);
    std::size_t at = 0;
    for (std::size_t j = grid.size(); j-- > 0;) {
      while (at < counts[j]) samples[at++] = grid[j];
    }
    const auto rows = tail_table(samples, grid, 2, 128);
    for (const auto& row : rows) {
      CHECK(row.beta_hat == doctest::Approx(0.5).epsilon(1e-3));
      CHECK(row.beta_hat == doctest::Approx(row.p_hat * std::exp(2.0 * row.z) / row.z).epsilon(1e-14));
    }
    CHECK(rows[0].in_regime);
    CHECK_FALSE(rows[4].in_regime);
  }

  TEST_CASE("fine field box maxima have the same law across boxes") {
    const auto p = small(2, 6, 1, 1, 1, 1);
    const auto pooled = fine_box_maxima(p, 3000, 31);
    // (KL)^d = 16 coarse boxes per replica.
    REQUIRE(pooled.size() == 3000 * 16);
    std::vector<double> first;
    std::vector<double> last;
    for (std::size_t r = 0; r < 3000; ++r) {
      first.push_back(pooled[r * 16]);
      last.push_back(pooled[r * 16 + 15]);
    }
    CHECK(ks_two_sample(first, last).p_value >= 0.01);
    CHECK(fine_box_maxima(p, 20, 31, 4) == fine_box_maxima(p, 20, 31, 1));
  }

  TEST_CASE("continuity surrogate and xi export round trip") {
    const XiModel model(small(2, 7, 1, 1, 2, 1));
    CHECK(model.continuity_deviation() >= 0.0);
    CHECK(model.epsilon() >= 0.0);
    for (double a : model.correction_scale()) CHECK(a >= 0.0);
    const auto xi = build_xi(model, 8);
    std::stringstream ss;
    write_xi_binary(ss, xi);
    FieldRecord head;
    const auto back = read_xi_binary(ss, &head);
    CHECK(head.side == 128);
    CHECK(back.at(XiComponent::kTotal) == xi.total);
    CHECK(back.at(XiComponent::kCorrection) == xi.correction);
  }
}
