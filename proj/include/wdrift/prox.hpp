#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "problem.hpp"

namespace wdrift {

enum class ProxVariant { BoxIndicator, AffineHinge, TightenedHinge };

inline const char* to_string(ProxVariant v) {
  switch (v) {
    case ProxVariant::BoxIndicator: return "box";
    case ProxVariant::AffineHinge: return "hinge";
    case ProxVariant::TightenedHinge: return "tightened";
  }
  return "?";
}

/// The nonsmooth term h of the composite objective F_t + h.
///
///   BoxIndicator    h = indicator of the constraint set (projection)
///   AffineHinge     h = lambda sum_i max(-c_i(x), 0)
///   TightenedHinge  h = lambda sum_i max(-c_i(x) + margin, 0)
struct ProxSpec {
  ProxVariant variant = ProxVariant::BoxIndicator;
  double lambda = 1.0;
  double margin = 0.0;
  ConstraintSet constraints;

  static ProxSpec indicator(ConstraintSet c) {
    return {ProxVariant::BoxIndicator, 0.0, 0.0, std::move(c)};
  }
  static ProxSpec hinge(ConstraintSet c, double lambda) {
    return {ProxVariant::AffineHinge, lambda, 0.0, std::move(c)};
  }
  static ProxSpec tightened(ConstraintSet c, double lambda, double margin) {
    return {ProxVariant::TightenedHinge, lambda, margin, std::move(c)};
  }

  void validate() const {
    if (variant != ProxVariant::BoxIndicator && !(lambda > 0.0))
      throw std::invalid_argument("prox: penalty weight must be positive");
    if (variant == ProxVariant::TightenedHinge && !(margin >= 0.0))
      throw std::invalid_argument("prox: tightening margin must be nonnegative");
    if (variant != ProxVariant::TightenedHinge && margin != 0.0)
      throw std::invalid_argument("prox: only the tightened variant carries a margin");
  }

  [[nodiscard]] double effective_margin() const {
    return variant == ProxVariant::TightenedHinge ? margin : 0.0;
  }
};

/// h(x). The indicator evaluates to +inf outside the set.
inline double penalty_value(const ProxSpec& spec, const Vector& x) {
  if (spec.constraints.empty()) return 0.0;
  if (spec.variant == ProxVariant::BoxIndicator)
    return spec.constraints.contains(x) ? 0.0 : std::numeric_limits<double>::infinity();
  const Vector slack = spec.effective_margin() - spec.constraints.values(x).array();
  return spec.lambda * slack.cwiseMax(0.0).sum();
}

namespace detail {

// Solves min_x sum_i cap * max(s_i, 0) + |x - u|^2 / (2 alpha), with
// s = target - A x, through its dual
//   max_{0 <= y <= cap}  y'(target - A u) - alpha/2 |A'y|^2,
// by cyclic coordinate ascent; x = u + alpha A'y. cap = inf gives the
// Euclidean projection onto {A x >= target}.
inline Vector hinge_dual_prox(const Matrix& rows, const Vector& target, double cap, double alpha,
                              const Vector& u, double gap_tol = 1e-10,
                              int max_sweeps = 200000) {
  const auto n = rows.rows();
  Vector y = Vector::Zero(n);
  Vector x = u;
  const Vector row_sq = rows.rowwise().squaredNorm();
  const bool projection = std::isinf(cap);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (row_sq(i) == 0.0) continue;
      const double g = target(i) - rows.row(i).dot(x);
      const double yi = std::clamp(y(i) + g / (alpha * row_sq(i)), 0.0, cap);
      const double d = yi - y(i);
      if (d != 0.0) {
        x += (alpha * d) * rows.row(i).transpose();
        y(i) = yi;
        moved = std::max(moved, std::abs(d) * std::sqrt(row_sq(i)) * alpha);
      }
    }
    const Vector s = target - rows * x;
    double gap;
    if (projection) {
      gap = std::max(s.cwiseMax(0.0).maxCoeff(), std::abs(y.dot(s)));
    } else {
      gap = (cap * s.cwiseMax(0.0) - y.cwiseProduct(s)).sum();
    }
    const double scale = 1.0 + u.norm();
    if (gap <= gap_tol && moved <= 1e-15 * scale) return x;
  }
  throw std::runtime_error("prox: inner solver iteration cap exceeded (ill-conditioned constraint rows?)");
}

}  // namespace detail

/// prox_{alpha h}(u) = argmin_x h(x) + |x - u|^2 / (2 alpha).
inline Vector prox_apply(const ProxSpec& spec, double alpha, const Vector& u) {
  if (!(alpha > 0.0)) throw std::invalid_argument("prox_apply: alpha must be positive");
  const auto& c = spec.constraints;
  if (c.empty()) return u;
  if (spec.variant == ProxVariant::BoxIndicator) {
    if (c.is_box()) return u.cwiseMax(c.lower()).cwiseMin(c.upper());
    return detail::hinge_dual_prox(c.rows(), c.offsets(), std::numeric_limits<double>::infinity(),
                                   alpha, u);
  }
  const Vector target = c.offsets().array() + spec.effective_margin();
  return detail::hinge_dual_prox(c.rows(), target, spec.lambda, alpha, u);
}

/// Anything exposing value(x) and gradient(x) of a smooth convex function.
template <class F>
concept SmoothObjective = requires(const F& f, const Vector& x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Vector>;
};

struct CompositeSolution {
  Vector x;
  int iterations = 0;
  double gradient_map_norm = 0.0;
};

/// Proximal gradient on F + h with fixed step 2/(L + sigma), run until the
/// gradient mapping |x - prox(x - step grad F(x))| / step drops below tol.
template <SmoothObjective F>
CompositeSolution minimize_composite(const F& f, const ProxSpec& spec, Vector x0, double lipschitz,
                                     double sigma, double tol = 1e-9, int max_iter = 1000000) {
  const double step = 2.0 / (lipschitz + sigma);
  CompositeSolution out;
  out.x = spec.variant == ProxVariant::BoxIndicator ? prox_apply(spec, step, x0) : std::move(x0);
  for (int k = 0; k < max_iter; ++k) {
    Vector next = prox_apply(spec, step, out.x - step * f.gradient(out.x));
    out.gradient_map_norm = (next - out.x).norm() / step;
    out.x = std::move(next);
    out.iterations = k + 1;
    if (out.gradient_map_norm <= tol) return out;
  }
  throw std::runtime_error("minimize_composite: iteration cap reached (mis-specified constants?)");
}

/// Smallest grid value lambda for which the penalised minimiser of F + h
/// agrees with the projected minimiser over the constraint set within
/// `match_tol` on every probe objective. Throws if none does.
template <SmoothObjective F>
double choose_penalty_weight(const std::vector<F>& probes, const ConstraintSet& constraints,
                             const std::vector<double>& grid, double lipschitz, double sigma,
                             const Vector& x0, double match_tol = 1e-6) {
  if (grid.empty()) throw std::invalid_argument("choose_penalty_weight: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw std::invalid_argument("choose_penalty_weight: grid must be strictly increasing");
  if (!(grid.front() > 0.0)) throw std::invalid_argument("choose_penalty_weight: grid must be positive");

  const auto projection = ProxSpec::indicator(constraints);
  std::vector<Vector> reference;
  reference.reserve(probes.size());
  for (const auto& f : probes)
    reference.push_back(minimize_composite(f, projection, x0, lipschitz, sigma, 1e-11).x);

  for (double lambda : grid) {
    const auto penalty = ProxSpec::hinge(constraints, lambda);
    bool ok = true;
    for (std::size_t i = 0; i < probes.size() && ok; ++i) {
      const Vector x = minimize_composite(probes[i], penalty, x0, lipschitz, sigma, 1e-11).x;
      ok = (x - reference[i]).norm() <= match_tol;
    }
    if (ok) return lambda;
  }
  throw std::runtime_error(
      "choose_penalty_weight: no grid value gives an exact penalty (threshold above grid range)");
}

}  // namespace wdrift
