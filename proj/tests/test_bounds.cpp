#include <gtest/gtest.h>

#include <numbers>

#include <wdrift/bounds.hpp>

#include "oracles.hpp"

using namespace wdrift::bounds;

namespace {
BoundInputs example() {
  BoundInputs in;
  in.rho = 0.33;
  in.n_x = 2;
  in.n_w = 3;
  in.lipschitz_x = 4.02;
  in.lipschitz_w = 12.04;
  in.sigma = 0.02;
  in.alpha = 0.4;
  in.m = 20;
  in.q = 1;
  in.a = 2;
  in.lambda_pen = 1.0;
  in.n_c = 4;
  in.lipschitz_c = 1.0;
  in.e_1 = 0.3;
  in.theta = 4;
  return in;
}
}  // namespace

TEST(Bounds, DriftBound) {
  EXPECT_EQ(drift_bound_v(0.0, 2, 12.04, 0.02), 0.0);
  EXPECT_NEAR(drift_bound_v(example()), 397.32, 1e-9);
  EXPECT_NEAR(drift_bound_v(0.33, 2, 24.08, 0.02), 2.0 * 397.32, 1e-9);
  EXPECT_THROW(drift_bound_v(0.33, 2, 1.0, 0.0), std::invalid_argument);
}

TEST(Bounds, ContractionFactor) {
  EXPECT_NEAR(contraction_r(0.4, 4.02, 0.02), 0.992, 1e-15);
  EXPECT_NEAR(2.0 / 4.02, 0.4975, 5e-5);
  const double a_star = optimal_alpha(4.02, 0.02);
  EXPECT_NEAR(contraction_r(a_star, 4.02, 0.02), 4.0 / 4.04, 1e-15);
  EXPECT_GT(contraction_r(1e-9, 4.02, 0.02), 1.0 - 1e-10);
  EXPECT_THROW(contraction_r(0.0, 4.02, 0.02), std::invalid_argument);
  EXPECT_THROW(contraction_r(2.0 / 4.02, 4.02, 0.02), std::invalid_argument);
  // minimised at 2/(L_x + sigma) over a dense grid
  double best = 2.0, best_alpha = 0.0;
  for (int k = 1; k < 100000; ++k) {
    const double a = (2.0 / 4.02) * k / 100000.0;
    const double r = contraction_r(a, 4.02, 0.02);
    if (r < best) best = r, best_alpha = a;
  }
  EXPECT_NEAR(best_alpha, a_star, 1e-5);
}

TEST(Bounds, Zeta) {
  // continuity point m = log(c1/gamma)/c2: both branches have base 1
  const double gamma = 0.1, c1 = 1.0, c2 = 0.5;
  const double m0 = std::log(c1 / gamma) / c2;
  EXPECT_NEAR(zeta(gamma, m0, 3, 2.0, c1, c2), 1.0, 1e-12);
  EXPECT_NEAR(zeta(gamma, m0 * (1 - 1e-12), 3, 2.0, c1, c2), 1.0, 1e-9);
  // large-m exponent 1/max(n_w, 2)
  EXPECT_NEAR(zeta(gamma, 800.0, 3, 2.0, c1, c2) / zeta(gamma, 100.0, 3, 2.0, c1, c2), 0.5, 1e-12);
  EXPECT_NEAR(zeta(gamma, 400.0, 1, 2.0, c1, c2) / zeta(gamma, 100.0, 1, 2.0, c1, c2), 0.5, 1e-12);
  EXPECT_LT(zeta(c1 * (1 - 1e-12), 10.0, 3, 2.0, c1, c2), 1e-3);
  EXPECT_THROW(zeta(gamma, 10.0, 2, 2.0, c1, c2), std::invalid_argument);
  EXPECT_THROW(zeta(1.5, 10.0, 3, 2.0, c1, c2), std::invalid_argument);
  EXPECT_THROW(zeta(gamma, 0.5, 3, 2.0, c1, c2), std::invalid_argument);
}

TEST(Bounds, GammaMatchesQuadrature) {
  EXPECT_NEAR(std::tgamma(0.5), std::sqrt(std::numbers::pi), 1e-9);
  EXPECT_NEAR(oracle::gamma_by_quadrature(0.5), std::sqrt(std::numbers::pi), 1e-9);
  for (int k = 0; k <= 90; ++k) {
    const double z = 0.1 + 0.01 * k;
    EXPECT_NEAR(std::tgamma(z) / oracle::gamma_by_quadrature(z), 1.0, 1e-8) << "z = " << z;
  }
}

TEST(Bounds, DeltaMonotonicity) {
  auto in = example();
  in.q = 1;
  const double base = delta_bound(in);
  in.rho = 5.0;
  EXPECT_DOUBLE_EQ(delta_bound(in), base);  // no drift term at q = 1
  in = example();
  double prev = 1e300;
  for (int m = 1; m <= 2000; ++m) {
    in.m = m;
    const double d = delta_bound(in);
    EXPECT_LT(d, prev);
    prev = d;
  }
  in = example();
  prev = 0.0;
  for (int q = 1; q <= 50; ++q) {
    in.q = q;
    const double d = delta_bound(in);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(Bounds, Asymptotic) {
  const auto zero = asymptotic_bounds(0.0, 0.5, 0.1, 0.0);
  EXPECT_EQ(zero.tracking, 0.0);
  EXPECT_EQ(zero.estimation, 0.0);
  for (double r : {0.0, 0.3, 0.9, 0.999}) {
    const auto b = asymptotic_bounds(2.0, r, 0.3, 1.5);
    EXPECT_LE(b.estimation, b.tracking);
  }
  const auto p = asymptotic_bounds(397.32, 0.992, 0.4, delta_bound(example()));
  EXPECT_TRUE(std::isfinite(p.tracking));
  EXPECT_THROW(asymptotic_bounds(1.0, 1.0, 0.1, 0.0), std::invalid_argument);
  // asymptotic limits fall with m through Delta
  auto in = example();
  in.m = 10;
  const double d10 = delta_bound(in);
  in.m = 100;
  EXPECT_LT(asymptotic_bounds(397.32, 0.992, 0.4, delta_bound(in)).tracking,
            asymptotic_bounds(397.32, 0.992, 0.4, d10).tracking);
}

TEST(Bounds, RegretForms) {
  RunSums zero;
  const auto b0 = regret_bounds(0.5, 0.1, 3.0, zero);
  EXPECT_EQ(b0.tracking, 0.0);
  EXPECT_EQ(b0.estimation, 0.0);
  RunSums s{0.4, 0.2, 0.3, 0.1, 0.05, 0.07, 2.0, 1.0};
  const double r = 0.8, alpha = 0.1, G = 3.0;
  const auto b = regret_bounds(r, alpha, G, s);
  auto s2 = s;
  s2.V_T += 1.0;
  const auto b2 = regret_bounds(r, alpha, G, s2);
  EXPECT_NEAR(b2.tracking - b.tracking, G / (1 - r), 1e-12);
  EXPECT_NEAR(b2.estimation - b.estimation, r * G / (1 - r), 1e-12);
  EXPECT_GE(b.u_tracking, b.tracking);
  EXPECT_GE(b.u_estimation, b.estimation);
  const auto sums = error_sum_bounds(r, alpha, s);
  EXPECT_NEAR(b.tracking, G * sums.tracking, 1e-12);
  EXPECT_NEAR(b.estimation, G * sums.estimation, 1e-12);
}

TEST(Bounds, GBar) {
  EXPECT_EQ(g_bar(0.5, 0.1, 0.0, 0.0, 0.0, 0.0, 3, 1.0), 0.0);
  const double a = g_bar(0.9, 0.2, 0.3, 1.0, 2.0, 1.0, 4, 1.5);
  const double b = g_bar(0.9, 0.2, 0.3, 1.0, 2.0, 1.25, 4, 1.5);
  EXPECT_NEAR(b - a, 2.0 * 0.25 * 4 * 1.5, 1e-12);
  const auto rep = make_bound_report(example());
  EXPECT_GT(rep.g_bar, 0.0);
  EXPECT_TRUE(std::isfinite(rep.g_bar));
}

TEST(Bounds, TighteningMargin) {
  EXPECT_EQ(tightening_margin(0.0, 0.9, 2.0, 0.1, 1.0), 0.0);
  EXPECT_NEAR(tightening_margin(3.0, 0.9, 2.0, 0.1, 1.0), 3.0 * tightening_margin(1.0, 0.9, 2.0, 0.1, 1.0), 1e-12);
  EXPECT_NEAR(tightening_margin(2.5, 0.9, 2.0, 0.1, 1.0), 2.5 * asymptotic_bounds(2.0, 0.9, 0.1, 1.0).estimation, 1e-12);
}

TEST(Bounds, ReportIsPureAndValidates) {
  const auto a = make_bound_report(example(), {0.01, 0.1});
  const auto b = make_bound_report(example(), {0.01, 0.1});
  EXPECT_EQ(a.delta, b.delta);
  EXPECT_EQ(a.g_bar, b.g_bar);
  EXPECT_NEAR(a.v, 397.32, 1e-9);
  EXPECT_NEAR(a.r, 0.992, 1e-15);
  EXPECT_NEAR(a.feasibility_probability, 0.75, 1e-15);
  auto bad = example();
  bad.alpha = 0.6;
  try {
    make_bound_report(bad);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 2/L_x)"), std::string::npos);
  }
  bad = example();
  bad.a = 1.0;
  EXPECT_THROW(make_bound_report(bad), std::invalid_argument);
}
