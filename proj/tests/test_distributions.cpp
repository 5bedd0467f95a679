#include <gtest/gtest.h>

#include <random>

#include <wdrift/distributions.hpp>
#include <wdrift/rng.hpp>

using namespace wdrift;

TEST(CounterRng, ReproducibleAndOpenInterval) {
  const CounterRng a(42), b(42), c(43);
  EXPECT_EQ(a.bits(7), b.bits(7));
  EXPECT_NE(a.bits(7), c.bits(7));
  EXPECT_EQ(a.fork({1, 2}).key(), b.fork({1, 2}).key());
  EXPECT_NE(a.fork({1, 2}).key(), a.fork({2, 1}).key());
  double lo = 1.0, hi = 0.0, mean = 0.0;
  for (std::uint64_t k = 0; k < 100000; ++k) {
    const double u = a.uniform(k);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    mean += u / 100000.0;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(Empirical, UniformWeightsFromBatches) {
  Batch a(1, 2), b(1, 2);
  a << 1.0, 2.0;
  b << 3.0, 4.0;
  const auto one = make_empirical(std::vector<Batch>{a});
  EXPECT_EQ(one.size(), 2);
  EXPECT_DOUBLE_EQ(one.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(one.weight(1), 0.5);
  const auto two = make_empirical(std::vector<Batch>{a, b});
  EXPECT_EQ(two.size(), 4);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(two.weight(i), 0.25);
  Batch single(2, 1);
  single << 0.5, -0.5;
  const auto dirac = make_empirical(std::vector<Batch>{single});
  EXPECT_EQ(dirac.size(), 1);
  EXPECT_DOUBLE_EQ(dirac.weight(0), 1.0);
  EXPECT_THROW(make_empirical(std::vector<Batch>{}), std::invalid_argument);
}

TEST(Empirical, RejectsBadWeights) {
  Matrix pts(1, 2);
  pts << 0.0, 1.0;
  EXPECT_THROW(EmpiricalDistribution(pts, Vector::Constant(2, 0.4)), std::invalid_argument);
  EXPECT_THROW(EmpiricalDistribution(pts, Vector{{1.5, -0.5}}), std::invalid_argument);
  EXPECT_THROW(EmpiricalDistribution(Matrix(1, 0), Vector(0)), std::invalid_argument);
}

TEST(TruncatedGaussian, QuantileStaysInBounds) {
  const TruncatedGaussianSpec spec{0.0, 1.0, -1.0, 1.0};
  const CounterRng rng(3);
  for (std::uint64_t k = 0; k < 20000; ++k) {
    const double x = spec.quantile(rng.uniform(k));
    ASSERT_GE(x, -1.0);
    ASSERT_LE(x, 1.0);
  }
  // far tail: mean well outside the interval, on both sides
  for (double mean : {-30.0, 30.0}) {
    const TruncatedGaussianSpec tail{mean, 1.0, -1.0, 1.0};
    for (std::uint64_t k = 0; k < 1000; ++k) {
      const double x = tail.quantile(rng.uniform(k));
      ASSERT_TRUE(std::isfinite(x));
      ASSERT_GE(x, -1.0);
      ASSERT_LE(x, 1.0);
    }
  }
  EXPECT_THROW((TruncatedGaussianSpec{0.0, 0.0, -1.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((TruncatedGaussianSpec{0.0, 1.0, 1.0, 1.0}.validate()), std::invalid_argument);
}

TEST(TruncatedGaussian, MatchesTruncatedMoments) {
  // N(0,1) on [-1,1]: variance 1 - 2 phi(1) / (Phi(1) - Phi(-1))
  const TruncatedGaussianSpec spec{0.0, 1.0, -1.0, 1.0};
  const CounterRng rng(11);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = spec.quantile(rng.uniform(static_cast<std::uint64_t>(k)));
    m1 += x / n;
    m2 += x * x / n;
  }
  const double phi1 = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
  const double var = 1.0 - 2.0 * phi1 / (normal_cdf(1.0) - normal_cdf(-1.0));
  EXPECT_NEAR(m1, 0.0, 0.005);
  EXPECT_NEAR(m2, var, 0.005);
}

TEST(NormalFunctions, QuantileInvertsCdf) {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999999}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-9 * std::max(p, 1e-3));
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
}

TEST(Samplers, PointMassBatch) {
  const PointMassSampler s(Vector::Zero(1));
  const Batch b = sample_batch(s, 5, 3, 1);
  ASSERT_EQ(b.cols(), 3);
  EXPECT_TRUE(b.isZero(0.0));
  EXPECT_THROW(sample_batch(s, 1, 0, 1), std::invalid_argument);
}

TEST(Samplers, RotatingIsDeterministicAndPeriodic) {
  const RotatingRegressionSampler s;
  const Batch a = sample_batch(s, 3, 50, 9);
  EXPECT_TRUE(a.isApprox(sample_batch(s, 3, 50, 9), 0.0));
  EXPECT_EQ((a - sample_batch(s, 23, 50, 9)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a - sample_batch(s, 4, 50, 9)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a - sample_batch(s, 3, 50, 10)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
  const Eigen::Vector2d c = s.coefficients(5);
  EXPECT_NEAR(c(0), std::cos(std::numbers::pi / 2.0), 1e-15);
  EXPECT_NEAR(c(1), 1.0, 1e-15);
  // batches are prefixes of each other: sample i depends only on (seed, t, i)
  EXPECT_EQ((sample_batch(s, 3, 10, 9) - a.leftCols(10)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Samplers, RotatingRegressionStructure) {
  // E[w2 | w1] follows c_t . w1 (shrunk by the output truncation), so the
  // least-squares slope points along c_t
  const RotatingRegressionSampler s;
  auto slope = [&](std::int64_t t) {
    const Batch b = sample_batch(s, t, 100000, 1);
    const Matrix X = b.topRows(2).transpose();
    const Vector y = b.row(2).transpose();
    return Vector((X.transpose() * X).ldlt().solve(X.transpose() * y));
  };
  const Vector up = slope(5), down = slope(15);
  EXPECT_NEAR(up(0), 0.0, 0.02);
  EXPECT_GT(up(1), 0.2);
  EXPECT_NEAR(down(0), 0.0, 0.02);
  EXPECT_LT(down(1), -0.2);
}

TEST(Drift, AlternatingDiracIsExactlyOne) {
  const AlternatingDiracSampler s(Vector::Zero(1), Vector::Ones(1));
  for (Eigen::Index J : {2, 7, 100}) {
    const auto est = estimate_drift(s, 5, J, 1);
    EXPECT_NEAR(est.rho, 1.0, 1e-12);
    ASSERT_EQ(est.per_step.size(), 5u);
    for (double w : est.per_step) EXPECT_NEAR(w, 1.0, 1e-12);
  }
}

TEST(Drift, StationaryNearZeroAndShrinksWithJ) {
  const TruncatedGaussianSpec g{0.0, 1.0, -1.0, 1.0};
  const StationaryTruncatedSampler s({g, g, g});
  auto median_rho = [&](Eigen::Index J) {
    std::vector<double> v;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) v.push_back(estimate_drift(s, 5, J, seed).rho);
    std::sort(v.begin(), v.end());
    return v[2];
  };
  const double small = median_rho(50), large = median_rho(400);
  EXPECT_LT(large, small);
  EXPECT_LT(large, 0.35);
}

TEST(Drift, SymmetricUnderPairReversal) {
  const RotatingRegressionSampler s;
  const auto a = EmpiricalDistribution::uniform(sample_batch(s, 2, 60, 4));
  const auto b = EmpiricalDistribution::uniform(sample_batch(s, 3, 60, 4));
  EXPECT_NEAR(wasserstein_distance(a, b), wasserstein_distance(b, a), 1e-9);
  EXPECT_THROW(estimate_drift(s, 1, 10, 1), std::invalid_argument);
  EXPECT_THROW(estimate_drift(s, 3, 1, 1), std::invalid_argument);
}

TEST(Drift, RotatingSamplerSingleSeed) {
  const RotatingRegressionSampler s;
  const auto l1 = estimate_drift(s, 20, 500, 1, GroundMetric::Manhattan);
  EXPECT_GT(l1.rho, 0.23);
  EXPECT_LT(l1.rho, 0.43);
  const auto l2 = estimate_drift(s, 20, 500, 1);
  EXPECT_LT(l2.rho, l1.rho);
}
