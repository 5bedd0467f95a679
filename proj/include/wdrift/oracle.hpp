#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>

#include "problem.hpp"

namespace wdrift {

/// The raw samples of the last q batches, oldest first. Samples rather than
/// gradients are kept because the estimator is re-evaluated at each new
/// iterate.
class SampleWindow {
 public:
  SampleWindow(int length, Eigen::Index batch_size) : length_(length), batch_size_(batch_size) {
    if (length_ < 1) throw std::invalid_argument("SampleWindow: window length q must be >= 1");
    if (batch_size_ < 1) throw std::invalid_argument("SampleWindow: batch size m must be >= 1");
  }

  void push_batch(Batch batch) {
    if (batch.cols() != batch_size_)
      throw std::invalid_argument("SampleWindow: batch size does not match m");
    if (!batches_.empty() && batch.rows() != batches_.front().rows())
      throw std::invalid_argument("SampleWindow: batch dimension changed");
    batches_.push_back(std::move(batch));
    if (static_cast<int>(batches_.size()) > length_) batches_.pop_front();
  }

  [[nodiscard]] int length() const { return length_; }
  [[nodiscard]] Eigen::Index batch_size() const { return batch_size_; }
  [[nodiscard]] std::size_t stored() const { return batches_.size(); }
  [[nodiscard]] bool empty() const { return batches_.empty(); }
  [[nodiscard]] const std::deque<Batch>& batches() const { return batches_; }
  [[nodiscard]] Eigen::Index sample_count() const {
    return static_cast<Eigen::Index>(batches_.size()) * batch_size_;
  }

 private:
  int length_;
  Eigen::Index batch_size_;
  std::deque<Batch> batches_;
};

/// Sliding-window gradient estimate: the mean of grad_x f(x, w) over every
/// stored sample. During warm-up (fewer than q batches seen) it averages
/// the batches available.
template <StochasticObjective O>
Vector eta(const SampleWindow& window, const O& obj, const Vector& x) {
  if (window.empty()) throw std::invalid_argument("eta: empty sample window");
  Vector g = Vector::Zero(obj.dim_x());
  for (const auto& b : window.batches())
    for (Eigen::Index i = 0; i < b.cols(); ++i) g += obj.gradient(x, b.col(i));
  return g / static_cast<double>(window.sample_count());
}

struct GradientError {
  Vector error;
  double norm = 0.0;
};

/// epsilon = grad F(x) - eta(x) against a fixed reference objective.
template <StochasticObjective O, class Reference>
GradientError epsilon(const SampleWindow& window, const O& obj, const Reference& reference,
                      const Vector& x) {
  GradientError out;
  out.error = reference.gradient(x) - eta(window, obj, x);
  out.norm = out.error.norm();
  return out;
}

/// epsilon against a Monte Carlo estimate of grad F_t from J fresh samples.
template <StochasticObjective O, DriftingSampler S>
GradientError epsilon(const SampleWindow& window, const O& obj, const S& sampler, std::int64_t t,
                      const Vector& x, Eigen::Index oracle_samples, std::uint64_t seed) {
  const auto ref = true_objective_and_gradient(obj, sampler, t, x, oracle_samples, seed);
  GradientError out;
  out.error = ref.gradient - eta(window, obj, x);
  out.norm = out.error.norm();
  return out;
}

}  // namespace wdrift
