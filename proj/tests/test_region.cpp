#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ccrn/errors.hpp"
#include "ccrn/region.hpp"
#include "test_util.hpp"

using namespace ccrn;

namespace {

// Draws joint models until one of the wanted case turns up.
ErasureModel random_model_of(Rng& rng, CaseLabel wanted) {
  for (;;) {
    auto m = rng.uniform() < 0.5 ? test::random_joint_model(rng) : test::random_independent_model(rng, 0.9);
    try {
      if (classify_case(m) == wanted) return m;
    } catch (const PreconditionError&) {
    }
  }
}

// R2 of the outer bound by scanning the free auxiliary variable on a fine grid.
double outer_scan(const ErasureModel& m, double R1, int steps) {
  const auto k = region_coefficients(m);
  const auto region = outer_bound_region(m);
  const CaseLabel label = classify_case(m);
  const double hi = label == CaseLabel::Case1 ? 0.0 : k.K * R1;
  double best = -1;
  for (int i = 0; i <= steps; ++i) {
    const double x = hi * i / steps;
    const std::array<double, 5> p{R1, 0.0, label == CaseLabel::Case2 ? x : 0.0, label == CaseLabel::Case3 ? x : 0.0, 0.0};
    double r2 = 1e9;
    for (const auto& row : region.rows) r2 = std::min(r2, row.slack(p) / row.coef[1]);
    best = std::max(best, r2);
  }
  return best;
}

}  // namespace

TEST_CASE("coefficients of an independent model from the per-link probabilities") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const double e12 = rng.uniform() * 0.9, e13 = rng.uniform() * 0.9, e14 = rng.uniform() * 0.9;
    const double e23 = rng.uniform() * e13, e24 = rng.uniform() * 0.9;
    const auto m = ErasureModel::independent(e12, e13, e14, e23, e24);
    const auto k = region_coefficients(m);
    const double d0 = 1 / (1 - e12 * e13);
    CHECK(k.d0 == doctest::Approx(d0));
    CHECK(k.c1 == doctest::Approx((e13 - e12 * e13) / ((1 - e23) * (1 - e12 * e13)) + d0));
    CHECK(k.c2 == doctest::Approx((e13 * e14 - e12 * e13 * e14) / ((1 - e12 * e13 * e14) * (1 - e23 * e24)) + d0));
    CHECK(k.e34 == doctest::Approx(1 / (1 - e23 * e24)));
    CHECK(k.K == doctest::Approx(e13 * e14 * (1 - e12) / ((1 - e13 * e14) * (1 - e12 * e13 * e14))));
    CHECK(k.E3 == doctest::Approx(e23 * (1 - e24)));
    CHECK(k.E4 == doctest::Approx(e24 * (1 - e23)));
    CHECK(r1_upper_bound(m) == doctest::Approx(1 / k.c1));
  }
}

TEST_CASE("zero-erasure network") {
  const auto m = ErasureModel::independent(0, 0, 0, 0, 0);
  CHECK(classify_case(m) == CaseLabel::Case1);
  CHECK(r1_upper_bound(m) == doctest::Approx(1.0));
  for (double R1 : {0.0, 0.25, 0.5, 1.0}) {
    CHECK(outer_bound_max_r2(m, R1) == doctest::Approx(1 - R1));
    CHECK(t_hat(m, {R1, 0.3}) == doctest::Approx(R1 + 0.3));
  }
}

TEST_CASE("symmetric 0.5 model, evaluated by hand") {
  const auto m = ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5);
  const auto k = region_coefficients(m);
  CHECK(k.d0 == doctest::Approx(4.0 / 3));
  CHECK(k.c1 == doctest::Approx(2.0));
  CHECK(k.c2 == doctest::Approx(1.0 / 0.65625 * 0.125 + 4.0 / 3));
  CHECK(r1_upper_bound(m) == doctest::Approx(0.5));
  CHECK(outer_bound_max_r2(m, 0.0) == doctest::Approx(0.5));
  CHECK(outer_bound_max_r2(m, 0.3) == doctest::Approx(0.2714).epsilon(1e-3));
  CHECK(t_hat(m, {0.3, 0.3}) == doctest::Approx(1.0571).epsilon(1e-4));
  CHECK_THROWS_AS(outer_bound_max_r2(m, 0.51), DomainError);
  CHECK_THROWS_AS(outer_bound_max_r2(m, -0.1), DomainError);
  CHECK_THROWS_AS(inner_bound_max_r2(m, 0.1), DomainError);
}

TEST_CASE("closed-form outer bound equals the LP and a brute-force scan") {
  Rng rng(77);
  for (CaseLabel label : {CaseLabel::Case1, CaseLabel::Case2, CaseLabel::Case3}) {
    CAPTURE(static_cast<int>(label));
    for (int t = 0; t < 300; ++t) {
      const auto m = random_model_of(rng, label);
      const double R1 = rng.uniform() * r1_upper_bound(m);
      const double closed = outer_bound_max_r2(m, R1);
      CHECK(closed == doctest::Approx(outer_bound_max_r2_lp(m, R1)).epsilon(1e-9));
      const double scan = outer_scan(m, R1, 2000);
      CHECK(scan <= closed + 1e-9);
      CHECK(scan >= closed - 1e-3);
      const double two_line = outer_bound_max_r2(m, R1, OuterForm::CaseTwoLine);
      CHECK(two_line >= closed - 1e-12);
      if (label != CaseLabel::Case3) CHECK(two_line == doctest::Approx(closed).epsilon(1e-12));
    }
  }
}

TEST_CASE("outer bound is non-increasing in R1 and membership follows the boundary") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto m = random_model_of(rng, static_cast<CaseLabel>(t % 3));
    const double B = r1_upper_bound(m);
    double prev = outer_bound_max_r2(m, 0.0);
    for (int i = 1; i <= 20; ++i) {
      const double r2 = outer_bound_max_r2(m, B * i / 20);
      CHECK(r2 <= prev + 1e-12);
      prev = r2;
    }
    const double R1 = B * rng.uniform();
    const double edge = outer_bound_max_r2(m, R1);
    CHECK(region_membership(m, {R1, edge * 0.99}, RegionKind::Outer));
    CHECK_FALSE(region_membership(m, {R1, edge * 1.01 + 1e-6}, RegionKind::Outer));
  }
}

TEST_CASE("Case 3 inner bound lies under the outer bound") {
  Rng rng(19);
  for (int t = 0; t < 500; ++t) {
    const auto m = random_model_of(rng, CaseLabel::Case3);
    const double R1 = rng.uniform() * r1_upper_bound(m);
    const auto inner = inner_bound_solve(m, R1);
    CHECK(inner.R2 >= -1e-12);
    CHECK(inner.R2 <= outer_bound_max_r2(m, R1) + 1e-9);
    CHECK(inner_bound_max_r2(m, R1, {true}) <= inner.R2 + 1e-12);
    CHECK(inner_bound_region(m).contains({R1, inner.R2}, inner.aux, 1e-9));
    CHECK(region_membership(m, {R1, inner.R2}, RegionKind::Inner));
    // Algorithm 1 alone (no auxiliary traffic) is always inside.
    const double alg1_r2 = alg2_parametric_point(m, R1, {0, 0, 0.5}).R2;
    CHECK(alg1_r2 <= inner.R2 + 1e-9);
  }
}

TEST_CASE("completion time: decomposition into phase limits") {
  Rng rng(55);
  int done = 0;
  while (done < 2000) {
    const auto m = rng.uniform() < 0.5 ? test::random_joint_model(rng) : test::random_independent_model(rng, 0.9);
    try {
      check_region_preconditions(m);
    } catch (const PreconditionError&) {
      continue;
    }
    const RatePair r{rng.uniform(), rng.uniform()};
    const auto l = alg1_limits(m, r);
    CHECK(l.total() == doctest::Approx(t_hat(m, r)).epsilon(1e-12));
    CHECK(alg2_t_hat(m, r, {0, 0, 0.3}) == doctest::Approx(t_hat(m, r)).epsilon(1e-12));
    ++done;
  }
}

TEST_CASE("Case 1 boundary has completion time one") {
  Rng rng(66);
  for (int t = 0; t < 300; ++t) {
    const auto m = random_model_of(rng, CaseLabel::Case1);
    const double R1 = rng.uniform() * r1_upper_bound(m);
    const double R2 = outer_bound_max_r2(m, R1);
    CHECK(t_hat(m, {R1, R2}) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("Case 2: Algorithm 2 with the optimal g reaches the outer bound") {
  Rng rng(88);
  for (int t = 0; t < 300; ++t) {
    const auto m = random_model_of(rng, CaseLabel::Case2);
    const double R1 = (0.05 + 0.9 * rng.uniform()) * r1_upper_bound(m);
    const auto outer = outer_bound_solve(m, R1);
    const MixParams p = alg2_params_for(m, R1, outer.aux);
    CHECK(p.s == 0.0);
    const auto pt = alg2_parametric_point(m, R1, p);
    CHECK(pt.R2 == doctest::Approx(outer.R2).epsilon(1e-9));
    CHECK(alg2_t_hat(m, {R1, pt.R2}, p) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("Case 3: grid over (g, s, u) against the inner LP") {
  Rng rng(99);
  for (int t = 0; t < 30; ++t) {
    const auto m = random_model_of(rng, CaseLabel::Case3);
    const double R1 = (0.1 + 0.8 * rng.uniform()) * r1_upper_bound(m);
    const double lp = inner_bound_max_r2(m, R1);
    const auto grid = alg2_grid_max(m, R1, 40);
    CHECK(grid.R2 == doctest::Approx(lp).epsilon(1e-3));
    CHECK(grid.R2 <= outer_bound_max_r2(m, R1, OuterForm::CaseTwoLine) + 1e-9);
  }
}

TEST_CASE("parameter inversion round trip") {
  Rng rng(100);
  for (int t = 0; t < 300; ++t) {
    const auto m = random_model_of(rng, CaseLabel::Case3);
    const auto k = region_coefficients(m);
    if (k.K <= 0 || k.E3 <= 0 || k.P - k.E3 <= 0) continue;
    const double R1 = 0.5 * r1_upper_bound(m);
    const double g = rng.uniform(), s = (1 - g) * rng.uniform(), u = rng.uniform();
    const auto pt = alg2_parametric_point(m, R1, {g, s, u});
    CHECK_FALSE(pt.u_out_of_envelope);
    const MixParams back = alg2_params_for(m, R1, pt.aux);
    CHECK(back.g == doctest::Approx(g));
    CHECK(back.s == doctest::Approx(s));
    CHECK(back.u == doctest::Approx(u));
  }
  const auto m = ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5);
  const MixParams bad{0.8, 0.8, 0};
  CHECK_THROWS_AS(alg2_parametric_point(m, 0.1, bad), DomainError);
  CHECK_THROWS_AS(alg2_grid_max(m, 0.1, 0), DomainError);
}
