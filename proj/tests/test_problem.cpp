#include <gtest/gtest.h>

#include <random>

#include <wdrift/distributions.hpp>
#include <wdrift/problem.hpp>

using namespace wdrift;

namespace {
std::vector<ConstantProbe> random_probes(std::size_t n, double x_max, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(-x_max, x_max), uw(-1.0, 1.0);
  std::vector<ConstantProbe> probes(n);
  for (auto& p : probes) {
    p.x = Vector{{ux(gen), ux(gen)}};
    p.x_alt = Vector{{ux(gen), ux(gen)}};
    p.w = Vector{{uw(gen), uw(gen), uw(gen)}};
    p.w_alt = Vector{{uw(gen), uw(gen), uw(gen)}};
  }
  return probes;
}
}  // namespace

TEST(Ridge, DerivedConstants) {
  const RidgeRegression obj(0.01, 2.0);
  const auto c = obj.constants();
  EXPECT_DOUBLE_EQ(c.lipschitz_x, 4.02);
  EXPECT_NEAR(c.lipschitz_w, 12.04, 1e-12);
  EXPECT_DOUBLE_EQ(c.sigma, 0.02);
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(RidgeRegression(0.0, 2.0), std::invalid_argument);
  EXPECT_THROW(RidgeRegression(0.1, -1.0), std::invalid_argument);
}

TEST(Ridge, ReferenceConstantsHoldOnRandomProbes) {
  const RidgeRegression obj(0.01, 2.0);
  const auto violations = validate_constants(obj, random_probes(1000, 2.0, 1));
  for (const auto& v : violations)
    ADD_FAILURE() << to_string(v.kind) << " probe " << v.probe << ": " << v.lhs << " > " << v.rhs;
}

TEST(Ridge, UnderstatedLipschitzIsCaught) {
  RidgeRegression obj(0.01, 2.0);
  auto c = obj.constants();
  c.lipschitz_x /= 2.0;
  obj.set_constants(c);
  const auto violations = validate_constants(obj, random_probes(1000, 2.0, 2));
  EXPECT_TRUE(std::any_of(violations.begin(), violations.end(), [](const auto& v) {
    return v.kind == ConstantViolation::Kind::LipschitzX;
  }));
}

TEST(Ridge, OverstatedSigmaIsCaught) {
  RidgeRegression obj(0.01, 2.0);
  auto c = obj.constants();
  c.sigma = 1.0;
  obj.set_constants(c);
  const auto violations = validate_constants(obj, random_probes(200, 2.0, 3));
  EXPECT_TRUE(std::any_of(violations.begin(), violations.end(), [](const auto& v) {
    return v.kind == ConstantViolation::Kind::StrongConvexity;
  }));
}

TEST(Ridge, IdentityProbeNeverViolates) {
  RidgeRegression obj(0.01, 2.0);
  auto c = obj.constants();
  c.lipschitz_x = 1e-6;
  obj.set_constants(c);
  ConstantProbe p{Vector{{0.5, -1.0}}, Vector{{0.5, -1.0}}, Vector{{0.1, 0.2, 0.3}}, Vector()};
  EXPECT_TRUE(validate_constants(obj, {p}).empty());
}

TEST(Ridge, GradientMatchesFiniteDifferences) {
  const RidgeRegression obj(0.3, 2.0);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vector x{{2 * u(gen), 2 * u(gen)}}, w{{u(gen), u(gen), u(gen)}};
    EXPECT_LT(gradient_check(obj, x, w), 1e-4);
  }
}

TEST(Ridge, QuadraticReductionIsExact) {
  const RidgeRegression obj(0.05, 2.0);
  const RotatingRegressionSampler s;
  const Batch b = sample_batch(s, 7, 500, 3);
  const auto model = obj.reduce(b);
  const SampleAverage<RidgeRegression> avg(obj, b);
  for (const Vector& x : {Vector{{0.0, 0.0}}, Vector{{1.5, -0.3}}, Vector{{-2.0, 2.0}}}) {
    EXPECT_NEAR(model.value(x), avg.value(x), 1e-12);
    EXPECT_LT((model.gradient(x) - avg.gradient(x)).norm(), 1e-12);
  }
  EXPECT_GE(model.min_curvature(), obj.constants().sigma - 1e-15);
}

TEST(Ridge, PointMassOracleIsExact) {
  const RidgeRegression obj(0.01, 2.0);
  const Vector w0{{0.4, -0.7, 0.2}};
  const PointMassSampler s(w0);
  const Vector x{{0.3, 1.1}};
  const auto est = true_objective_and_gradient(obj, s, 3, x, 1000, 5);
  EXPECT_NEAR(est.value, obj.value(x, w0), 1e-12);
  EXPECT_LT((est.gradient - obj.gradient(x, w0)).norm(), 1e-12);
}

TEST(Ridge, MonteCarloOracleConverges) {
  const RidgeRegression obj(0.01, 2.0);
  const RotatingRegressionSampler s;
  const Vector x = Vector::Zero(2);
  const Eigen::Index J = 100000;
  const auto a = true_objective_and_gradient(obj, s, 4, x, J, 11);
  const auto b = true_objective_and_gradient(obj, s, 4, x, J, 12);
  const auto big = true_objective_and_gradient(obj, s, 4, x, 4 * J, 13);
  const double se = gradient_standard_error(obj, sample_batch(s, 4, J, 11), x);
  // independent seeds agree within three standard errors of the difference
  EXPECT_LT((a.gradient - b.gradient).norm(), 3.0 * std::sqrt(2.0) * se);
  EXPECT_LT((a.gradient - big.gradient).norm(), 3.0 * std::sqrt(1.25) * se);
  // gradient at the origin is -2 E[w2 w1]
  const Batch batch = sample_batch(s, 4, J, 11);
  const Vector direct = -2.0 * (batch.topRows(2) * batch.row(2).transpose()) / static_cast<double>(J);
  EXPECT_LT((direct - a.gradient).norm(), 1e-12);
}

TEST(Ridge, GradientLipschitzOfPopulationObjective) {
  const RidgeRegression obj(0.01, 2.0);
  const RotatingRegressionSampler s;
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x{{u(gen), u(gen)}}, y{{u(gen), u(gen)}};
    const auto gx = true_objective_and_gradient(obj, s, k, x, 20000, 99).gradient;
    const auto gy = true_objective_and_gradient(obj, s, k, y, 20000, 99).gradient;
    EXPECT_LE((gx - gy).norm(), obj.constants().lipschitz_x * (x - y).norm() + 1e-9);
  }
}

TEST(ConstraintSet, BoxAndAffine) {
  const auto box = ConstraintSet::box(2, 2.0);
  EXPECT_TRUE(box.is_box());
  EXPECT_EQ(box.count(), 4);
  EXPECT_DOUBLE_EQ(box.lipschitz(), 1.0);
  EXPECT_TRUE(box.contains(Vector{{2.0, -2.0}}));
  EXPECT_FALSE(box.contains(Vector{{2.1, 0.0}}));
  EXPECT_FALSE(box.contains(Vector{{1.5, 0.0}}, 1.0));
  EXPECT_THROW(ConstraintSet::box(Vector{{1.0}}, Vector{{1.0}}), std::invalid_argument);

  Matrix rows(1, 2);
  rows << 3.0, 4.0;
  const auto aff = ConstraintSet::affine(rows, Vector{{1.0}});
  EXPECT_FALSE(aff.is_box());
  EXPECT_DOUBLE_EQ(aff.lipschitz(), 5.0);
  EXPECT_NEAR(aff.values(Vector{{1.0, 1.0}})(0), 6.0, 1e-15);
  EXPECT_THROW(ConstraintSet::affine(rows, Vector{{1.0, 2.0}}), std::invalid_argument);
}

TEST(Constants, Validation) {
  ObjectiveConstants c{4.0, 1.0, 5.0, 2.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);  // sigma > L_x
  c = {4.0, 1.0, 0.5, 1.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);  // a must exceed 1
}
