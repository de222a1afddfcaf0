#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "lcgf/error.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/perturb.hpp"
#include "lcgf/rng.hpp"
#include "lcgf/samplers.hpp"
#include "lcgf/stats.hpp"

using namespace lcgf;

TEST_SUITE("perturb") {
  TEST_CASE("zero sigma is the identity, bitwise") {
    const auto f = sample_mbrw(FieldSpec::mbrw(2, 4), 3);
    const auto out = perturbed_field(f, BoxPerturbation{2, 2, 0.0, 0.0}, 9);
    CHECK(out.values == f.values);
    const auto g = sample_mbrw(FieldSpec::mbrw(2, 4), 4);
    CHECK(scaled_mix_field(f, g, BoxPerturbation{2, 2, 0.0, 0.0}).values == f.values);
  }

  TEST_CASE("single boxes at both scales give a global shift") {
    const auto f = sample_mbrw(FieldSpec::mbrw(2, 4), 3);
    const auto out = perturbed_field(f, BoxPerturbation{16, 1, 0.7, 1.3}, 9);
    const double shift = out.values[0] - f.values[0];
    CHECK(shift != 0.0);
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(out.values[i] - f.values[i] == doctest::Approx(shift));
  }

  TEST_CASE("small-box increments are constant inside each r1-box after removing the large scale") {
    const auto f = sample_mbrw(FieldSpec::mbrw(2, 5), 3);
    const BoxPerturbation p{4, 2, 1.0, 0.0};
    const auto out = perturbed_field(f, p, 11);
    const Shape s = f.shape();
    for (std::size_t i = 0; i < s.volume(); ++i) {
      const auto v = s.point(i);
      const LatticePoint corner{{v[0] - v[0] % 4, v[1] - v[1] % 4}};
      const std::size_t j = s.index(corner);
      CHECK(out.values[i] - f.values[i] == doctest::Approx(out.values[j] - f.values[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("ragged strip keeps its value at that scale") {
    // N = 16, r1 = 5: boxes cover [0, 15); coordinate 15 gets no small-box noise.
    const auto f = sample_mbrw(FieldSpec::mbrw(1, 4), 3);
    const auto out = perturbed_field(f, BoxPerturbation{5, 1, 1.0, 0.0}, 11);
    CHECK(out.values[15] == f.values[15]);
    CHECK(out.values[0] != f.values[0]);
  }

  TEST_CASE("variance grows by ||sigma||^2; noise is white and independent of the field") {
    const auto spec = FieldSpec::mbrw(1, 4);
    const FieldSampler s(spec);
    const BoxPerturbation p{1, 1, 1.0, 0.5};
    const BoxPerturbation white{1, 16, 1.0, 0.0};
    std::vector<double> before;
    std::vector<double> after;
    std::vector<double> d0;
    std::vector<double> d1;
    std::vector<double> base;
    for (std::size_t r = 0; r < 100000; ++r) {
      const auto f = s.sample(replica_seed(1, r));
      const auto g = perturbed_field(f, p, replica_seed(2, r));
      before.push_back(f.values[5]);
      after.push_back(g.values[5]);
      const auto w = perturbed_field(f, white, replica_seed(3, r));
      d0.push_back(w.values[5] - f.values[5]);
      d1.push_back(w.values[6] - f.values[6]);
      base.push_back(f.values[5]);
    }
    const MeanSE vo = covariance_se(after, after);
    const double truth = 5 * kLog2 + p.norm_sq();
    CHECK(std::abs(vo.mean - truth) <= 3.0 * vo.se);
    const MeanSE lag = covariance_se(d0, d1);
    CHECK(std::abs(lag.mean) <= 4.0 * lag.se);
    const MeanSE ind = covariance_se(d0, base);
    CHECK(std::abs(ind.mean) <= 4.0 * ind.se);
  }

  TEST_CASE("scaled mix variance and max law") {
    const auto spec = FieldSpec::mbrw(1, 6);
    const FieldSampler s(spec);
    const BoxPerturbation sigma{2, 2, 1.0, 1.0};
    const double a = mix_scale(sigma, 64);
    CHECK(a == doctest::Approx(std::sqrt(1.0 + 2.0 / std::log(64.0))).epsilon(1e-15));
    std::vector<double> mixed;
    std::vector<double> scaled;
    std::vector<double> v_in;
    for (std::size_t r = 0; r < 10000; ++r) {
      const auto f = s.sample(replica_seed(5, 2 * r));
      const auto g = s.sample(replica_seed(5, 2 * r + 1));
      const auto m = scaled_mix_field(f, g, sigma);
      mixed.push_back(max_stat(m).max_value);
      scaled.push_back(a * max_stat(s.sample(replica_seed(6, r))).max_value);
      v_in.push_back(m.values[10]);
    }
    CHECK(ks_two_sample(mixed, scaled).p_value >= 0.01);
    const MeanSE vm = covariance_se(v_in, v_in);
    CHECK(std::abs(vm.mean - a * a * 7 * kLog2) <= 3.0 * vm.se);

    const auto f = s.sample(1);
    CHECK_THROWS_AS(scaled_mix_field(f, sample_mbrw(FieldSpec::mbrw(1, 5), 2), sigma), InputError);
  }

  TEST_CASE("predicted shift") {
    CHECK(predicted_shift(BoxPerturbation{1, 1, 1.0, 1.0}, 2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(predicted_shift(BoxPerturbation{1, 1, 1.0, 0.0}, 1) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(predicted_shift(BoxPerturbation{1, 1, 0.0, 0.0}, 2) == 0.0);
  }

  TEST_CASE("shift_check") {
    CHECK_THROWS_AS(shift_check(FieldSpec::mbrw(2, 4), BoxPerturbation{2, 2, 1.0, 1.0}, 99, 1), InputError);
    const auto zero = shift_check(FieldSpec::mbrw(2, 4), BoxPerturbation{2, 2, 0.0, 0.0}, 200, 1);
    CHECK(zero.predicted == 0.0);
    CHECK(zero.mean_gap == 0.0);
    const auto r = shift_check(FieldSpec::mbrw(2, 4), BoxPerturbation{2, 2, 1.0, 1.0}, 200, 1);
    CHECK(r.predicted == doctest::Approx(2.0));
    CHECK(r.stderr_gap > 0.0);
    CHECK(r.error() == doctest::Approx(std::abs(r.mean_gap - r.predicted)));
    const auto again = shift_check(FieldSpec::mbrw(2, 4), BoxPerturbation{2, 2, 1.0, 1.0}, 200, 1, 4);
    CHECK(again.mean_gap == r.mean_gap);
    std::ostringstream os;
    const std::vector<ShiftResult> rows{r};
    write_shift_csv(os, rows);
    CHECK(os.str().rfind("N,r1,r2,sigma1,sigma2,mean_gap,predicted,stderr", 0) == 0);
  }

  TEST_CASE("validation") {
    CHECK_THROWS_AS(BoxPerturbation({0, 1, 1.0, 1.0}).validate(16), InputError);
    CHECK_THROWS_AS(BoxPerturbation({32, 1, 1.0, 1.0}).validate(16), InputError);
    CHECK_THROWS_AS(BoxPerturbation({1, 32, 1.0, 1.0}).validate(16), InputError);
    CHECK_THROWS_AS(BoxPerturbation({1, 1, -1.0, 1.0}).validate(16), InputError);
  }
}
