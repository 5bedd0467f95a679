#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "empirical.hpp"
#include "network_simplex.hpp"

namespace wdrift {

/// Ground metric on the sample space.
enum class GroundMetric { Euclidean, Manhattan };

inline double ground_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                              GroundMetric metric) {
  return metric == GroundMetric::Euclidean ? (a - b).norm() : (a - b).lpNorm<1>();
}

/// Coupling between the supports of two empirical distributions, indexed by
/// the original (unmerged) point order of each side.
struct TransportPlan {
  Matrix coupling;
  double cost = 0.0;
};

struct WassersteinResult {
  double distance = 0.0;
  TransportPlan plan;
};

namespace detail {

// Support with zero-weight points dropped and coincident points merged.
struct ReducedSupport {
  Matrix points;
  Vector weights;
  std::vector<Eigen::Index> group;  // original index -> reduced index, -1 if dropped
};

inline ReducedSupport reduce_support(const EmpiricalDistribution& p) {
  const auto n = p.size();
  const auto d = p.dim();
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (p.weight(i) > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (p.points()(k, a) < p.points()(k, b)) return true;
      if (p.points()(k, a) > p.points()(k, b)) return false;
    }
    return false;
  });

  ReducedSupport out;
  out.group.assign(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> reps;
  std::vector<double> w;
  for (Eigen::Index i : order) {
    if (!reps.empty() && p.point(reps.back()) == p.point(i)) {
      w.back() += p.weight(i);
    } else {
      reps.push_back(i);
      w.push_back(p.weight(i));
    }
    out.group[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(reps.size()) - 1;
  }
  out.points.resize(d, static_cast<Eigen::Index>(reps.size()));
  out.weights.resize(static_cast<Eigen::Index>(reps.size()));
  for (std::size_t k = 0; k < reps.size(); ++k) {
    out.points.col(static_cast<Eigen::Index>(k)) = p.point(reps[k]);
    out.weights(static_cast<Eigen::Index>(k)) = w[k];
  }
  return out;
}

inline Matrix ground_costs(const Matrix& a, const Matrix& b, GroundMetric metric) {
  Matrix c(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    for (Eigen::Index i = 0; i < a.cols(); ++i) c(i, j) = ground_distance(a.col(i), b.col(j), metric);
  return c;
}

}  // namespace detail

/// Exact 1-Wasserstein distance together with an optimal coupling.
inline WassersteinResult wasserstein1(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                      GroundMetric metric = GroundMetric::Euclidean) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("wasserstein1: dimension mismatch");

  const auto rp = detail::reduce_support(p);
  const auto rq = detail::reduce_support(q);
  const Matrix cost = detail::ground_costs(rp.points, rq.points, metric);

  // Rescale the demand so both marginals carry bit-identical mass.
  Vector demand = rq.weights * (rp.weights.sum() / rq.weights.sum());
  const auto sol = detail::TransportSimplex::solve(cost, rp.weights, demand);

  WassersteinResult out;
  out.distance = sol.cost;
  out.plan.coupling = Matrix::Zero(p.size(), q.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto gi = rp.group[static_cast<std::size_t>(i)];
    if (gi < 0) continue;
    const double fi = p.weight(i) / rp.weights(gi);
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const auto gj = rq.group[static_cast<std::size_t>(j)];
      if (gj < 0) continue;
      out.plan.coupling(i, j) = fi * (q.weight(j) / rq.weights(gj)) * sol.flow(gi, gj);
    }
  }
  out.plan.cost = sol.cost;
  return out;
}

/// Exact 1-Wasserstein distance on the real line by integrating the gap
/// between the two CDFs, which equals the cost of the quantile coupling.
inline double wasserstein1_sorted_1d(const EmpiricalDistribution& p,
                                     const EmpiricalDistribution& q) {
  if (p.dim() != 1 || q.dim() != 1)
    throw std::invalid_argument("wasserstein1_sorted_1d: distributions must be one-dimensional");

  struct Atom {
    double x;
    double dw;  // +weight for p, -weight for q
  };
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(p.size() + q.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) atoms.push_back({p.points()(0, i), p.weight(i)});
  for (Eigen::Index i = 0; i < q.size(); ++i) atoms.push_back({q.points()(0, i), -q.weight(i)});
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.x < b.x; });

  double gap = 0.0;  // F_p - F_q just right of the current atom
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    gap += atoms[k].dw;
    total += std::abs(gap) * (atoms[k + 1].x - atoms[k].x);
  }
  return total;
}

/// Distance dispatch: uses the sorted path in one dimension, where every
/// l_p ground metric coincides.
inline double wasserstein_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                   GroundMetric metric = GroundMetric::Euclidean) {
  if (p.dim() == 1 && q.dim() == 1) return wasserstein1_sorted_1d(p, q);
  return wasserstein1(p, q, metric).distance;
}

/// Kantorovich-Rubinstein lower bound E_p[f] - E_q[f] for a witness f given
/// by its values on the supports of p and q. Throws if f is not
/// 1-Lipschitz on the union of the supports.
inline double kr_dual_lower_bound(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                                  const Vector& f_on_p, const Vector& f_on_q,
                                  GroundMetric metric = GroundMetric::Euclidean) {
  if (p.dim() != q.dim()) throw std::invalid_argument("kr_dual_lower_bound: dimension mismatch");
  if (f_on_p.size() != p.size() || f_on_q.size() != q.size())
    throw std::invalid_argument("kr_dual_lower_bound: witness size does not match supports");

  const auto n = p.size();
  Matrix pts(p.dim(), n + q.size());
  pts << p.points(), q.points();
  Vector f(n + q.size());
  f << f_on_p, f_on_q;
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    for (Eigen::Index j = i + 1; j < pts.cols(); ++j) {
      const double dist = ground_distance(pts.col(i), pts.col(j), metric);
      if (std::abs(f(i) - f(j)) > dist * (1.0 + 1e-12) + 1e-12)
        throw std::invalid_argument("kr_dual_lower_bound: witness is not 1-Lipschitz");
    }
  return p.expect(f_on_p) - q.expect(f_on_q);
}

}  // namespace wdrift
