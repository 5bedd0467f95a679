#include <gtest/gtest.h>

#include <random>

#include <wdrift/network_simplex.hpp>
#include <wdrift/wasserstein.hpp>

#include "oracles.hpp"

using namespace wdrift;

namespace {
EmpiricalDistribution on_line(std::vector<double> pts, std::vector<double> w) {
  Matrix p(1, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) p(0, static_cast<Eigen::Index>(i)) = pts[i];
  return {p, Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()))};
}
}  // namespace

TEST(Wasserstein, DiracPair) {
  const auto p = on_line({0.0}, {1.0}), q = on_line({1.0}, {1.0});
  const auto res = wasserstein1(p, q);
  EXPECT_NEAR(res.distance, 1.0, 1e-12);
  EXPECT_NEAR(res.plan.coupling(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(wasserstein1_sorted_1d(p, q), 1.0, 1e-12);
}

TEST(Wasserstein, HandExamples) {
  EXPECT_NEAR(wasserstein1(on_line({0, 2}, {0.5, 0.5}), on_line({1, 3}, {0.5, 0.5})).distance, 1.0, 1e-12);
  EXPECT_NEAR(wasserstein1_sorted_1d(on_line({0, 2}, {0.5, 0.5}), on_line({1, 3}, {0.5, 0.5})), 1.0, 1e-12);
  EXPECT_NEAR(wasserstein1_sorted_1d(on_line({0}, {1.0}), on_line({-1, 1}, {0.5, 0.5})), 1.0, 1e-12);
  const auto p = on_line({0.3, -1, 4}, {0.2, 0.3, 0.5});
  EXPECT_NEAR(wasserstein1(p, p).distance, 0.0, 1e-12);
  EXPECT_NEAR(wasserstein1_sorted_1d(p, p), 0.0, 1e-12);
}

TEST(Wasserstein, DimensionErrors) {
  Matrix two(2, 1);
  two << 0, 0;
  const auto p2 = EmpiricalDistribution::uniform(two);
  const auto p1 = on_line({0}, {1.0});
  EXPECT_THROW(wasserstein1(p1, p2), std::invalid_argument);
  EXPECT_THROW(wasserstein1_sorted_1d(p2, p2), std::invalid_argument);
}

TEST(Wasserstein, PlanIsFeasibleAndPricesTheCost) {
  std::mt19937_64 gen(17);
  for (int k = 0; k < 50; ++k) {
    const auto p = oracle::random_distribution(gen, 2, 12), q = oracle::random_distribution(gen, 2, 9);
    const auto res = wasserstein1(p, q);
    const Matrix& pi = res.plan.coupling;
    ASSERT_EQ(pi.rows(), p.size());
    ASSERT_EQ(pi.cols(), q.size());
    EXPECT_GE(pi.minCoeff(), 0.0);
    EXPECT_LE((pi.rowwise().sum() - p.weights()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((pi.colwise().sum().transpose() - q.weights()).cwiseAbs().maxCoeff(), 1e-9);
    double cost = 0.0;
    for (Eigen::Index i = 0; i < pi.rows(); ++i)
      for (Eigen::Index j = 0; j < pi.cols(); ++j) cost += pi(i, j) * (p.point(i) - q.point(j)).norm();
    EXPECT_NEAR(cost, res.distance, 1e-9);
    EXPECT_NEAR(res.plan.cost, res.distance, 1e-12);
  }
}

TEST(Wasserstein, MatchesVertexEnumeration) {
  std::mt19937_64 gen(23);
  for (int k = 0; k < 60; ++k) {
    const auto inst = oracle::random_instance(gen, 1 + k % 2, 5, k % 3 == 0);
    EXPECT_NEAR(wasserstein1(inst.p, inst.q).distance, oracle::brute_force_w1(inst), 1e-9) << "instance " << k;
  }
}

TEST(Wasserstein, DegenerateSupports) {
  // coincident points and zero weights
  Matrix pts(1, 4);
  pts << 0.0, 0.0, 1.0, 5.0;
  const EmpiricalDistribution p(pts, Vector{{0.25, 0.25, 0.5, 0.0}});
  const auto q = on_line({0.0, 1.0}, {0.5, 0.5});
  const auto res = wasserstein1(p, q);
  EXPECT_NEAR(res.distance, 0.0, 1e-12);
  EXPECT_NEAR(res.plan.coupling.row(3).sum(), 0.0, 1e-15);
  EXPECT_NEAR(res.plan.coupling.row(0).sum(), 0.25, 1e-12);
}

TEST(Wasserstein, ManhattanMetric) {
  Matrix a(2, 1), b(2, 1);
  a << 0, 0;
  b << 3, 4;
  const auto p = EmpiricalDistribution::uniform(a), q = EmpiricalDistribution::uniform(b);
  EXPECT_NEAR(wasserstein1(p, q).distance, 5.0, 1e-12);
  EXPECT_NEAR(wasserstein1(p, q, GroundMetric::Manhattan).distance, 7.0, 1e-12);
}

TEST(Wasserstein, LargerInstancesAgreeWith1dPath) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01;
  Matrix a(1, 400), b(1, 300);
  for (Eigen::Index i = 0; i < a.cols(); ++i) a(0, i) = n01(gen);
  for (Eigen::Index i = 0; i < b.cols(); ++i) b(0, i) = 0.5 + n01(gen);
  const auto p = EmpiricalDistribution::uniform(a), q = EmpiricalDistribution::uniform(b);
  EXPECT_NEAR(wasserstein1(p, q).distance, wasserstein1_sorted_1d(p, q), 1e-9);
}

TEST(Wasserstein, KantorovichRubinsteinDual) {
  const auto p = on_line({0.0}, {1.0}), q = on_line({1.0}, {1.0});
  EXPECT_NEAR(kr_dual_lower_bound(p, q, Vector::Constant(1, 3.0), Vector::Constant(1, 3.0)), 0.0, 1e-15);
  EXPECT_NEAR(kr_dual_lower_bound(p, q, Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)), -1.0, 1e-15);
  EXPECT_NEAR(kr_dual_lower_bound(q, p, Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)), 1.0, 1e-15);
  EXPECT_THROW(kr_dual_lower_bound(p, q, Vector::Constant(1, 0.0), Vector::Constant(1, 2.0)),
               std::invalid_argument);

  // random 1-Lipschitz witnesses f(x) = min_k (c_k + |x - z_k|) never exceed W
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const auto a = oracle::random_distribution(gen, 2, 6), b = oracle::random_distribution(gen, 2, 6);
    Matrix z(2, 3);
    Vector c(3);
    for (int i = 0; i < 3; ++i) z(0, i) = u(gen), z(1, i) = u(gen), c(i) = u(gen);
    auto f = [&](const auto& x) {
      double v = 1e300;
      for (int i = 0; i < 3; ++i) v = std::min(v, c(i) + (x - z.col(i)).norm());
      return v;
    };
    Vector fa(a.size()), fb(b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) fa(i) = f(a.point(i));
    for (Eigen::Index i = 0; i < b.size(); ++i) fb(i) = f(b.point(i));
    EXPECT_LE(kr_dual_lower_bound(a, b, fa, fb), wasserstein1(a, b).distance + 1e-9);
  }
}

TEST(Wasserstein, MetricAxiomsAndConvexity) {
  std::mt19937_64 gen(41);
  for (int k = 0; k < 50; ++k) {
    const auto a = oracle::random_distribution(gen, 2, 6), b = oracle::random_distribution(gen, 2, 6),
               c = oracle::random_distribution(gen, 2, 6);
    const double ab = wasserstein1(a, b).distance, ba = wasserstein1(b, a).distance;
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_LE(wasserstein1(a, c).distance, ab + wasserstein1(b, c).distance + 1e-9);
  }
  // uniform mixture of equal-size batches against a reference
  for (int k = 0; k < 30; ++k) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Batch> batches(3, Batch(1, 4));
    for (auto& b : batches)
      for (Eigen::Index i = 0; i < 4; ++i) b(0, i) = u(gen) + static_cast<double>(k % 3);
    const auto ref = oracle::random_distribution(gen, 1, 5);
    double avg = 0.0;
    for (const auto& b : batches) avg += wasserstein1(EmpiricalDistribution::uniform(b), ref).distance / 3.0;
    EXPECT_LE(wasserstein1(make_empirical(batches), ref).distance, avg + 1e-9);
  }
}

TEST(NetworkSimplex, UnbalancedMarginalsAreInfeasible) {
  const Matrix c = Matrix::Ones(2, 2);
  EXPECT_THROW(detail::TransportSimplex::solve(c, Vector{{0.5, 0.5}}, Vector{{0.7, 0.7}}),
               std::runtime_error);
}

TEST(NetworkSimplex, IdentityAssignment) {
  Matrix c(3, 3);
  c << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const auto r = detail::TransportSimplex::solve(c, Vector::Constant(3, 1.0), Vector::Constant(3, 1.0));
  EXPECT_NEAR(r.cost, 0.0, 1e-15);
  EXPECT_TRUE(r.flow.isApprox(Matrix::Identity(3, 3)));
}
