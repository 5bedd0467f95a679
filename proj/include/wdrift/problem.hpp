#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "empirical.hpp"

namespace wdrift {

/// Constants of a stochastic objective f(x, w).
///  lipschitz_x  gradient-Lipschitz constant in x (L_x)
///  lipschitz_w  per-coordinate gradient-Lipschitz constant in w (L_w)
///  sigma        strong-convexity modulus in x
///  tail_exponent light-tail exponent a > 1 with E exp(|w|^a) finite
struct ObjectiveConstants {
  double lipschitz_x = 1.0;
  double lipschitz_w = 1.0;
  double sigma = 1.0;
  double tail_exponent = 2.0;

  void validate() const {
    if (!(lipschitz_x > 0.0)) throw std::invalid_argument("objective: L_x must be positive");
    if (!(lipschitz_w > 0.0)) throw std::invalid_argument("objective: L_w must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("objective: sigma must be positive");
    if (sigma > lipschitz_x) throw std::invalid_argument("objective: sigma must not exceed L_x");
    if (!(tail_exponent > 1.0)) throw std::invalid_argument("objective: a must exceed 1");
  }
};

template <class O>
concept StochasticObjective =
    requires(const O& o, const Vector& x, const Eigen::Ref<const Vector>& w) {
      { o.value(x, w) } -> std::convertible_to<double>;
      { o.gradient(x, w) } -> std::convertible_to<Vector>;
      { o.constants() } -> std::convertible_to<ObjectiveConstants>;
      { o.dim_x() } -> std::convertible_to<Eigen::Index>;
      { o.dim_w() } -> std::convertible_to<Eigen::Index>;
    };

/// F(x) = x'Hx/2 - b'x + c.
struct QuadraticModel {
  Matrix hessian;
  Vector linear;
  double offset = 0.0;

  [[nodiscard]] double value(const Vector& x) const {
    return 0.5 * x.dot(hessian * x) - linear.dot(x) + offset;
  }
  [[nodiscard]] Vector gradient(const Vector& x) const { return hessian * x - linear; }
  [[nodiscard]] double min_curvature() const {
    return Eigen::SelfAdjointEigenSolver<Matrix>(hessian, Eigen::EigenvaluesOnly).eigenvalues()(0);
  }
};

/// Objectives whose sample average over any batch is exactly a quadratic.
template <class O>
concept QuadraticInX = StochasticObjective<O> && requires(const O& o, const Batch& b) {
  { o.reduce(b) } -> std::convertible_to<QuadraticModel>;
};

/// Box [lo, hi] and/or affine rows a_i' x - b_i >= 0. A box is also stored
/// as its 2 n_x affine rows so penalty operators see one representation.
class ConstraintSet {
 public:
  ConstraintSet() = default;

  static ConstraintSet box(const Vector& lo, const Vector& hi) {
    if (lo.size() != hi.size()) throw std::invalid_argument("ConstraintSet: box bounds differ in size");
    if (!(lo.array() < hi.array()).all())
      throw std::invalid_argument("ConstraintSet: box requires lo < hi componentwise");
    const auto n = lo.size();
    ConstraintSet c;
    c.lo_ = lo;
    c.hi_ = hi;
    c.rows_ = Matrix::Zero(2 * n, n);
    c.offsets_.resize(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      c.rows_(2 * k, k) = 1.0;
      c.offsets_(2 * k) = lo(k);
      c.rows_(2 * k + 1, k) = -1.0;
      c.offsets_(2 * k + 1) = -hi(k);
    }
    return c;
  }

  static ConstraintSet box(Eigen::Index n, double radius) {
    return box(Vector::Constant(n, -radius), Vector::Constant(n, radius));
  }

  static ConstraintSet affine(Matrix rows, Vector offsets) {
    if (rows.rows() != offsets.size())
      throw std::invalid_argument("ConstraintSet: one offset per row required");
    if (!rows.allFinite() || !offsets.allFinite())
      throw std::invalid_argument("ConstraintSet: non-finite constraint data");
    ConstraintSet c;
    c.rows_ = std::move(rows);
    c.offsets_ = std::move(offsets);
    return c;
  }

  [[nodiscard]] bool is_box() const { return lo_.has_value(); }
  [[nodiscard]] bool empty() const { return rows_.rows() == 0; }
  [[nodiscard]] const Vector& lower() const { return *lo_; }
  [[nodiscard]] const Vector& upper() const { return *hi_; }
  [[nodiscard]] const Matrix& rows() const { return rows_; }
  [[nodiscard]] const Vector& offsets() const { return offsets_; }
  [[nodiscard]] Eigen::Index count() const { return rows_.rows(); }

  /// c_i(x) = a_i' x - b_i.
  [[nodiscard]] Vector values(const Vector& x) const { return rows_ * x - offsets_; }

  /// L_c = max_i |a_i|.
  [[nodiscard]] double lipschitz() const {
    return empty() ? 0.0 : rows_.rowwise().norm().maxCoeff();
  }

  [[nodiscard]] bool contains(const Vector& x, double margin = 0.0, double tol = 1e-12) const {
    return empty() || (values(x).array() >= margin - tol).all();
  }

 private:
  std::optional<Vector> lo_;
  std::optional<Vector> hi_;
  Matrix rows_;
  Vector offsets_;
};

/// Regularised least squares f(x, w) = lambda |x|^2 + (w2 - x'w1)^2 with
/// w = (w1, w2), w1 in [-1, 1]^2, on the domain [-x_max, x_max]^2.
class RidgeRegression {
 public:
  RidgeRegression(double lambda_reg, double x_max) : lambda_(lambda_reg), x_max_(x_max) {
    if (!(lambda_ > 0.0)) throw std::invalid_argument("RidgeRegression: lambda_reg must be positive");
    if (!(x_max_ > 0.0)) throw std::invalid_argument("RidgeRegression: x_max must be positive");
    constants_.lipschitz_x = 2.0 * lambda_ + 4.0;
    constants_.lipschitz_w = 2.0 * (lambda_ + 2.0) * x_max_ + 4.0;
    constants_.sigma = 2.0 * lambda_;
    constants_.tail_exponent = 2.0;
  }

  [[nodiscard]] Eigen::Index dim_x() const { return 2; }
  [[nodiscard]] Eigen::Index dim_w() const { return 3; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double x_max() const { return x_max_; }
  [[nodiscard]] const ObjectiveConstants& constants() const { return constants_; }
  void set_constants(const ObjectiveConstants& c) { constants_ = c; }

  [[nodiscard]] ConstraintSet domain() const { return ConstraintSet::box(2, x_max_); }

  [[nodiscard]] double value(const Vector& x, const Eigen::Ref<const Vector>& w) const {
    const double r = w(2) - x.dot(w.head<2>());
    return lambda_ * x.squaredNorm() + r * r;
  }

  [[nodiscard]] Vector gradient(const Vector& x, const Eigen::Ref<const Vector>& w) const {
    const double r = w(2) - x.dot(w.head<2>());
    return 2.0 * lambda_ * x - 2.0 * r * w.head<2>();
  }

  /// Exact sample average over a batch as a quadratic model.
  [[nodiscard]] QuadraticModel reduce(const Batch& batch) const {
    const auto n = static_cast<double>(batch.cols());
    const auto inputs = batch.topRows<2>();
    const auto outputs = batch.row(2);
    QuadraticModel q;
    q.hessian = 2.0 * lambda_ * Matrix::Identity(2, 2) + (2.0 / n) * (inputs * inputs.transpose());
    q.linear = (2.0 / n) * (inputs * outputs.transpose());
    q.offset = outputs.squaredNorm() / n;
    return q;
  }

 private:
  double lambda_;
  double x_max_;
  ObjectiveConstants constants_;
};

/// F-hat(x) = (1/J) sum_j f(x, w_j) over a fixed sample set.
template <StochasticObjective O>
class SampleAverage {
 public:
  SampleAverage(const O& obj, Batch samples) : obj_(&obj), samples_(std::move(samples)) {}

  [[nodiscard]] double value(const Vector& x) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < samples_.cols(); ++j) s += obj_->value(x, samples_.col(j));
    return s / static_cast<double>(samples_.cols());
  }

  [[nodiscard]] Vector gradient(const Vector& x) const {
    Vector g = Vector::Zero(obj_->dim_x());
    for (Eigen::Index j = 0; j < samples_.cols(); ++j) g += obj_->gradient(x, samples_.col(j));
    return g / static_cast<double>(samples_.cols());
  }

  [[nodiscard]] double min_curvature() const { return obj_->constants().sigma; }
  [[nodiscard]] const Batch& samples() const { return samples_; }

 private:
  const O* obj_;
  Batch samples_;
};

/// Deterministic stand-in for F_t built from a fixed sample set: the exact
/// quadratic reduction when the objective offers one, else a sample average.
template <StochasticObjective O>
auto make_sample_objective(const O& obj, Batch samples) {
  if constexpr (QuadraticInX<O>) {
    return obj.reduce(samples);
  } else {
    return SampleAverage<O>(obj, std::move(samples));
  }
}

template <StochasticObjective O>
using SampleObjective = decltype(make_sample_objective(std::declval<const O&>(), Batch{}));

/// Standard error of the sample-mean gradient at x: sqrt(tr Cov / J).
template <StochasticObjective O>
double gradient_standard_error(const O& obj, const Batch& samples, const Vector& x) {
  const auto n = samples.cols();
  if (n < 2) return 0.0;
  Vector mean = Vector::Zero(obj.dim_x());
  Vector sq = Vector::Zero(obj.dim_x());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector g = obj.gradient(x, samples.col(j));
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= static_cast<double>(n);
  const Vector var = (sq / static_cast<double>(n) - mean.cwiseProduct(mean)).cwiseMax(0.0) *
                     (static_cast<double>(n) / static_cast<double>(n - 1));
  return std::sqrt(var.sum() / static_cast<double>(n));
}

struct ObjectiveEstimate {
  double value = 0.0;
  Vector gradient;
};

/// Monte Carlo estimate of F_t(x) = E_{P_t} f(x, w) and its gradient from
/// J fresh samples.
template <StochasticObjective O, DriftingSampler S>
ObjectiveEstimate true_objective_and_gradient(const O& obj, const S& sampler, std::int64_t t,
                                              const Vector& x, Eigen::Index samples,
                                              std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("true_objective_and_gradient: J_oracle must be >= 1");
  const Batch batch = sample_batch(sampler, t, samples, seed);
  SampleAverage<O> avg(obj, batch);
  return {avg.value(x), avg.gradient(x)};
}

/// Probe for the empirically checkable constants: Lipschitz in x uses
/// (x, x_alt, w); Lipschitz in w uses (x, w, w_alt).
struct ConstantProbe {
  Vector x;
  Vector x_alt;
  Vector w;
  Vector w_alt;
};

struct ConstantViolation {
  enum class Kind { LipschitzX, LipschitzW, StrongConvexity, GradientCheck };
  Kind kind;
  std::size_t probe = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

inline const char* to_string(ConstantViolation::Kind k) {
  switch (k) {
    case ConstantViolation::Kind::LipschitzX: return "lipschitz_x";
    case ConstantViolation::Kind::LipschitzW: return "lipschitz_w";
    case ConstantViolation::Kind::StrongConvexity: return "strong_convexity";
    case ConstantViolation::Kind::GradientCheck: return "gradient_check";
  }
  return "?";
}

/// Central finite-difference check of the analytic gradient. Returns the
/// relative error |g - g_fd| / max(1, |g_fd|).
template <StochasticObjective O>
double gradient_check(const O& obj, const Vector& x, const Eigen::Ref<const Vector>& w,
                      double step = 1e-6) {
  const Vector g = obj.gradient(x, w);
  Vector fd(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    fd(k) = (obj.value(xp, w) - obj.value(xm, w)) / (2.0 * step);
  }
  return (g - fd).norm() / std::max(1.0, fd.norm());
}

/// Checks the declared constants against every probe. An empty result means
/// no probe contradicts them.
template <StochasticObjective O>
std::vector<ConstantViolation> validate_constants(const O& obj,
                                                  const std::vector<ConstantProbe>& probes,
                                                  double tol = 1e-9) {
  const auto c = obj.constants();
  std::vector<ConstantViolation> out;
  using K = ConstantViolation::Kind;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    const Vector g = obj.gradient(p.x, p.w);
    const Vector g_alt = obj.gradient(p.x_alt, p.w);
    const Vector dx = p.x - p.x_alt;
    const Vector dg = g - g_alt;

    const double lx_rhs = c.lipschitz_x * dx.norm() + tol;
    if (dg.norm() > lx_rhs) out.push_back({K::LipschitzX, i, dg.norm(), lx_rhs});

    const double sc_lhs = dg.dot(dx);
    const double sc_rhs = c.sigma * dx.squaredNorm() - tol;
    if (sc_lhs < sc_rhs) out.push_back({K::StrongConvexity, i, sc_lhs, sc_rhs});

    if (p.w_alt.size() == p.w.size()) {
      const Vector gw = obj.gradient(p.x, p.w_alt);
      const double lw_lhs = (g - gw).cwiseAbs().maxCoeff();
      const double lw_rhs = c.lipschitz_w * (p.w - p.w_alt).norm() + tol;
      if (lw_lhs > lw_rhs) out.push_back({K::LipschitzW, i, lw_lhs, lw_rhs});
    }

    const double fd = gradient_check(obj, p.x, p.w);
    if (fd > 1e-4) out.push_back({K::GradientCheck, i, fd, 1e-4});
  }
  return out;
}

}  // namespace wdrift
