#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "empirical.hpp"
#include "rng.hpp"
#include "wasserstein.hpp"

namespace wdrift {

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Standard normal quantile, p in (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// N_trunc(mean, std, lower, upper): a normal law conditioned on [lower, upper].
struct TruncatedGaussianSpec {
  double mean = 0.0;
  double std = 1.0;
  double lower = -1.0;
  double upper = 1.0;

  void validate() const {
    if (!(std > 0.0)) throw std::invalid_argument("TruncatedGaussianSpec: std must be positive");
    if (!(lower < upper)) throw std::invalid_argument("TruncatedGaussianSpec: lower must be < upper");
  }

  /// Inverse-CDF transform of a uniform draw u in (0, 1). The interval is
  /// reflected into the lower half-line so the CDF differences keep their
  /// relative precision in the upper tail.
  [[nodiscard]] double quantile(double u) const {
    double lo = (lower - mean) / std;
    double hi = (upper - mean) / std;
    const bool flip = lo > 0.0;
    if (flip) {
      std::swap(lo, hi);
      lo = -lo;
      hi = -hi;
      u = 1.0 - u;
    }
    const double plo = normal_cdf(lo);
    const double phi = normal_cdf(hi);
    double p = plo + u * (phi - plo);
    p = std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    double z = normal_quantile(p);
    z = std::clamp(z, lo, hi);
    if (flip) z = -z;
    return std::clamp(mean + std * z, lower, upper);
  }
};

/// A time-indexed family of distributions P_t with a declared drift bound
/// rho >= W(P_{t+1}, P_t). Batches are pure functions of (t, m, seed).
template <class S>
concept DriftingSampler = requires(const S& s, std::int64_t t, Eigen::Index m, std::uint64_t seed) {
  { s.dim() } -> std::convertible_to<Eigen::Index>;
  { s.sample(t, m, seed) } -> std::convertible_to<Batch>;
  { s.drift_bound() } -> std::convertible_to<double>;
};

/// Draws m i.i.d. samples from P_t.
template <DriftingSampler S>
Batch sample_batch(const S& sampler, std::int64_t t, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_batch: batch size must be at least 1");
  return sampler.sample(t, m, seed);
}

/// Regression data with rotating coefficients: w = (w1, w2), w1 in R^2 has
/// i.i.d. N_trunc(0, 1, -1, 1) entries and w2 ~ N_trunc(c_t . w1, 1, -1, 1)
/// where c_t = [cos(2 pi t / period), sin(2 pi t / period)].
///
/// Draws are keyed on t mod period, so P_t and P_{t+period} coincide
/// sample-for-sample under the same seed.
class RotatingRegressionSampler {
 public:
  explicit RotatingRegressionSampler(int period = 20, double rho = 0.33, double noise_std = 1.0,
                                     double bound = 1.0)
      : period_(period), rho_(rho), noise_std_(noise_std), bound_(bound) {
    if (period_ < 1) throw std::invalid_argument("RotatingRegressionSampler: period must be >= 1");
    if (!(noise_std_ > 0.0) || !(bound_ > 0.0))
      throw std::invalid_argument("RotatingRegressionSampler: std and bound must be positive");
  }

  [[nodiscard]] Eigen::Index dim() const { return 3; }
  [[nodiscard]] double drift_bound() const { return rho_; }
  [[nodiscard]] int period() const { return period_; }

  [[nodiscard]] Eigen::Vector2d coefficients(std::int64_t t) const {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(phase(t)) / period_;
    return {std::cos(angle), std::sin(angle)};
  }

  [[nodiscard]] Batch sample(std::int64_t t, Eigen::Index m, std::uint64_t seed) const {
    const auto rng = CounterRng(seed).fork({static_cast<std::uint64_t>(phase(t))});
    const Eigen::Vector2d c = coefficients(t);
    const TruncatedGaussianSpec input{0.0, 1.0, -bound_, bound_};
    Batch out(3, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::uint64_t>(3 * i);
      const double a = input.quantile(rng.uniform(k));
      const double b = input.quantile(rng.uniform(k + 1));
      const TruncatedGaussianSpec output{c(0) * a + c(1) * b, noise_std_, -bound_, bound_};
      out(0, i) = a;
      out(1, i) = b;
      out(2, i) = output.quantile(rng.uniform(k + 2));
    }
    return out;
  }

 private:
  [[nodiscard]] std::int64_t phase(std::int64_t t) const {
    const std::int64_t r = t % period_;
    return r < 0 ? r + period_ : r;
  }

  int period_;
  double rho_;
  double noise_std_;
  double bound_;
};

/// Time-invariant product of truncated Gaussians.
class StationaryTruncatedSampler {
 public:
  explicit StationaryTruncatedSampler(std::vector<TruncatedGaussianSpec> coords)
      : coords_(std::move(coords)) {
    if (coords_.empty()) throw std::invalid_argument("StationaryTruncatedSampler: no coordinates");
    for (const auto& c : coords_) c.validate();
  }

  [[nodiscard]] Eigen::Index dim() const { return static_cast<Eigen::Index>(coords_.size()); }
  [[nodiscard]] double drift_bound() const { return 0.0; }

  [[nodiscard]] Batch sample(std::int64_t t, Eigen::Index m, std::uint64_t seed) const {
    const auto rng = CounterRng(seed).fork({static_cast<std::uint64_t>(t)});
    const auto d = dim();
    Batch out(d, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = 0; k < d; ++k)
        out(k, i) = coords_[static_cast<std::size_t>(k)].quantile(
            rng.uniform(static_cast<std::uint64_t>(i * d + k)));
    return out;
  }

 private:
  std::vector<TruncatedGaussianSpec> coords_;
};

/// Dirac mass at a fixed point for every t.
class PointMassSampler {
 public:
  explicit PointMassSampler(Vector at) : at_(std::move(at)) {}

  [[nodiscard]] Eigen::Index dim() const { return at_.size(); }
  [[nodiscard]] double drift_bound() const { return 0.0; }
  [[nodiscard]] Batch sample(std::int64_t, Eigen::Index m, std::uint64_t) const {
    return at_.replicate(1, m);
  }

 private:
  Vector at_;
};

/// delta_a at even t, delta_b at odd t.
class AlternatingDiracSampler {
 public:
  AlternatingDiracSampler(Vector even, Vector odd) : even_(std::move(even)), odd_(std::move(odd)) {
    if (even_.size() != odd_.size())
      throw std::invalid_argument("AlternatingDiracSampler: dimension mismatch");
  }

  [[nodiscard]] Eigen::Index dim() const { return even_.size(); }
  [[nodiscard]] double drift_bound() const { return (even_ - odd_).norm(); }
  [[nodiscard]] Batch sample(std::int64_t t, Eigen::Index m, std::uint64_t) const {
    return (t % 2 == 0 ? even_ : odd_).replicate(1, m);
  }

 private:
  Vector even_;
  Vector odd_;
};

struct DriftEstimate {
  double rho = 0.0;
  std::vector<double> per_step;  // W(E_t, E_{t+1}) for t = 1..horizon
};

/// Data-driven drift rate: max over t = 1..horizon of the Wasserstein
/// distance between uniform J-sample empirical distributions of P_t and
/// P_{t+1}.
template <DriftingSampler S>
DriftEstimate estimate_drift(const S& sampler, int horizon, Eigen::Index samples_per_step,
                             std::uint64_t seed, GroundMetric metric = GroundMetric::Euclidean) {
  if (horizon < 2) throw std::invalid_argument("estimate_drift: horizon must be at least 2");
  if (samples_per_step < 2) throw std::invalid_argument("estimate_drift: J must be at least 2");
  DriftEstimate out;
  out.per_step.reserve(static_cast<std::size_t>(horizon));
  auto prev = EmpiricalDistribution::uniform(sample_batch(sampler, 1, samples_per_step, seed));
  for (int t = 1; t <= horizon; ++t) {
    auto next = EmpiricalDistribution::uniform(sample_batch(sampler, t + 1, samples_per_step, seed));
    out.per_step.push_back(wasserstein_distance(prev, next, metric));
    prev = std::move(next);
  }
  out.rho = *std::max_element(out.per_step.begin(), out.per_step.end());
  return out;
}

}  // namespace wdrift
