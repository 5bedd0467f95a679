#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace wdrift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A batch of samples, one column per draw.
using Batch = Eigen::MatrixXd;

/// Weighted finite support in R^n. Points are stored column-wise.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(Matrix points, Vector weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.cols() == 0 || points_.rows() == 0)
      throw std::invalid_argument("EmpiricalDistribution: empty support");
    if (weights_.size() != points_.cols())
      throw std::invalid_argument("EmpiricalDistribution: weight count does not match point count");
    if ((weights_.array() < 0.0).any())
      throw std::invalid_argument("EmpiricalDistribution: negative weight");
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("EmpiricalDistribution: weights must sum to 1");
  }

  /// Uniform weights over the columns of `points`.
  static EmpiricalDistribution uniform(Matrix points) {
    const auto n = points.cols();
    if (n == 0) throw std::invalid_argument("EmpiricalDistribution: empty support");
    Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return {std::move(points), std::move(w)};
  }

  static EmpiricalDistribution dirac(const Vector& at) {
    Matrix p = at;
    return {std::move(p), Vector::Ones(1)};
  }

  [[nodiscard]] Eigen::Index dim() const { return points_.rows(); }
  [[nodiscard]] Eigen::Index size() const { return points_.cols(); }
  [[nodiscard]] const Matrix& points() const { return points_; }
  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] auto point(Eigen::Index i) const { return points_.col(i); }
  [[nodiscard]] double weight(Eigen::Index i) const { return weights_(i); }

  /// E[f(xi)] for f given as values on the support.
  [[nodiscard]] double expect(const Vector& f_values) const { return weights_.dot(f_values); }

 private:
  Matrix points_;
  Vector weights_;
};

/// Uniform empirical distribution over every sample of every batch
/// (weights 1/(m q) when q batches of m samples are supplied).
inline EmpiricalDistribution make_empirical(std::span<const Batch> batches) {
  if (batches.empty()) throw std::invalid_argument("make_empirical: no batches");
  const auto dim = batches.front().rows();
  Eigen::Index total = 0;
  for (const auto& b : batches) {
    if (b.rows() != dim) throw std::invalid_argument("make_empirical: batch dimension mismatch");
    if (b.cols() == 0) throw std::invalid_argument("make_empirical: empty batch");
    total += b.cols();
  }
  Matrix pts(dim, total);
  Eigen::Index at = 0;
  for (const auto& b : batches) {
    pts.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return EmpiricalDistribution::uniform(std::move(pts));
}

inline EmpiricalDistribution make_empirical(const std::vector<Batch>& batches) {
  return make_empirical(std::span<const Batch>(batches));
}

}  // namespace wdrift
