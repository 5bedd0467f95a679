#pragma once

// Primal network simplex for the balanced transportation problem
//
//   min  sum_ij c_ij x_ij   s.t.  sum_j x_ij = a_i,  sum_i x_ij = b_j,  x >= 0.
//
// Sources are nodes [0, n), sinks are [n, n + m) and node n + m is an
// artificial root. The initial basis is the star of artificial arcs around
// the root. Leaving arcs are chosen with the strongly-feasible-tree rule,
// which rules out cycling on degenerate pivots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace wdrift::detail {

class TransportSimplex {
 public:
  struct Result {
    double cost = 0.0;
    Eigen::MatrixXd flow;  // n x m
    std::size_t pivots = 0;
  };

  /// `cost` is n x m; `supply` (n) and `demand` (m) are strictly positive
  /// and have equal totals.
  static Result solve(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                      const Eigen::VectorXd& demand, std::size_t max_pivots = 0) {
    TransportSimplex s(cost, supply, demand);
    s.run(max_pivots == 0 ? std::size_t{50} * (s.arcs_real_ + 1000) : max_pivots);
    return s.extract();
  }

 private:
  enum Dir : std::int8_t { kUp = 1, kDown = -1 };

  TransportSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                   const Eigen::VectorXd& demand)
      : n_(static_cast<int>(cost.rows())),
        m_(static_cast<int>(cost.cols())),
        nodes_(n_ + m_ + 1),
        root_(n_ + m_),
        arcs_real_(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_)),
        cost_(cost) {
    const std::size_t arcs = arcs_real_ + static_cast<std::size_t>(n_ + m_);
    flow_.assign(arcs, 0.0);
    in_tree_.assign(arcs, 0);
    adj_.assign(static_cast<std::size_t>(nodes_), {});
    parent_.assign(static_cast<std::size_t>(nodes_), -1);
    pred_.assign(static_cast<std::size_t>(nodes_), 0);
    dir_.assign(static_cast<std::size_t>(nodes_), kUp);
    depth_.assign(static_cast<std::size_t>(nodes_), 0);
    pi_.assign(static_cast<std::size_t>(nodes_), 0.0);

    const double max_cost = cost.size() > 0 ? cost.maxCoeff() : 0.0;
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    eps_ = 1e-14 * std::max(1.0, max_cost);

    for (int u = 0; u < n_ + m_; ++u) {
      const std::size_t e = arcs_real_ + static_cast<std::size_t>(u);
      flow_[e] = u < n_ ? supply(u) : demand(u - n_);
      in_tree_[e] = 1;
      adj_[static_cast<std::size_t>(u)].push_back(e);
      adj_[static_cast<std::size_t>(root_)].push_back(e);
    }
    block_ = std::max<std::size_t>(
        10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs_real_))));
    rebuild_tree();
  }

  [[nodiscard]] int source(std::size_t e) const {
    if (e < arcs_real_) return static_cast<int>(e / static_cast<std::size_t>(m_));
    const int u = static_cast<int>(e - arcs_real_);
    return u < n_ ? u : root_;
  }
  [[nodiscard]] int target(std::size_t e) const {
    if (e < arcs_real_) return n_ + static_cast<int>(e % static_cast<std::size_t>(m_));
    const int u = static_cast<int>(e - arcs_real_);
    return u < n_ ? root_ : u;
  }
  [[nodiscard]] double arc_cost(std::size_t e) const {
    if (e < arcs_real_)
      return cost_(static_cast<Eigen::Index>(e / static_cast<std::size_t>(m_)),
                   static_cast<Eigen::Index>(e % static_cast<std::size_t>(m_)));
    return art_cost_;
  }
  [[nodiscard]] double reduced_cost(std::size_t e) const {
    return arc_cost(e) + pi_[static_cast<std::size_t>(source(e))] -
           pi_[static_cast<std::size_t>(target(e))];
  }

  void rebuild_tree() {
    std::vector<int> stack{root_};
    parent_[static_cast<std::size_t>(root_)] = -1;
    depth_[static_cast<std::size_t>(root_)] = 0;
    pi_[static_cast<std::size_t>(root_)] = 0.0;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const auto pu = static_cast<std::size_t>(p);
      for (std::size_t e : adj_[pu]) {
        if (parent_[pu] >= 0 && e == pred_[pu]) continue;
        const int s = source(e);
        const int u = s == p ? target(e) : s;
        const auto uu = static_cast<std::size_t>(u);
        parent_[uu] = p;
        pred_[uu] = e;
        depth_[uu] = depth_[pu] + 1;
        if (s == p) {
          dir_[uu] = kDown;
          pi_[uu] = pi_[pu] + arc_cost(e);
        } else {
          dir_[uu] = kUp;
          pi_[uu] = pi_[pu] - arc_cost(e);
        }
        stack.push_back(u);
      }
    }
  }

  bool find_entering(std::size_t& in_arc) {
    double best = -eps_;
    bool found = false;
    std::size_t scanned = 0;
    std::size_t e = next_arc_;
    while (scanned < arcs_real_) {
      const std::size_t stop = std::min(arcs_real_, scanned + block_);
      for (; scanned < stop; ++scanned) {
        if (!in_tree_[e]) {
          const double rc = reduced_cost(e);
          if (rc < best) {
            best = rc;
            in_arc = e;
            found = true;
          }
        }
        if (++e == arcs_real_) e = 0;
      }
      if (found) {
        next_arc_ = e;
        return true;
      }
    }
    return false;
  }

  void pivot(std::size_t in_arc) {
    const int first = source(in_arc);
    const int second = target(in_arc);
    int a = first, b = second;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)])
        a = parent_[static_cast<std::size_t>(a)];
      else
        b = parent_[static_cast<std::size_t>(b)];
    }
    const int join = a;

    // Flow travels join -> first -> second -> join. On the first path arcs
    // pointing up lose flow; on the second path arcs pointing down lose flow.
    double delta = INFINITY;
    int u_out = -1;
    for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      if (dir_[uu] == kUp && flow_[pred_[uu]] < delta) {
        delta = flow_[pred_[uu]];
        u_out = u;
      }
    }
    for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      if (dir_[uu] == kDown && flow_[pred_[uu]] <= delta) {
        delta = flow_[pred_[uu]];
        u_out = u;
      }
    }
    if (u_out < 0) throw std::runtime_error("transport simplex: unbounded pivot");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto uu = static_cast<std::size_t>(u);
        flow_[pred_[uu]] -= static_cast<double>(dir_[uu]) * delta;
      }
      for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto uu = static_cast<std::size_t>(u);
        flow_[pred_[uu]] += static_cast<double>(dir_[uu]) * delta;
      }
    }

    const std::size_t out_arc = pred_[static_cast<std::size_t>(u_out)];
    flow_[out_arc] = 0.0;
    in_tree_[out_arc] = 0;
    in_tree_[in_arc] = 1;
    for (int v : {source(out_arc), target(out_arc)}) {
      auto& lst = adj_[static_cast<std::size_t>(v)];
      lst.erase(std::find(lst.begin(), lst.end(), out_arc));
    }
    adj_[static_cast<std::size_t>(first)].push_back(in_arc);
    adj_[static_cast<std::size_t>(second)].push_back(in_arc);
    rebuild_tree();
  }

  void run(std::size_t max_pivots) {
    std::size_t in_arc = 0;
    while (find_entering(in_arc)) {
      if (++pivots_ > max_pivots)
        throw std::runtime_error("transport simplex: pivot limit exceeded");
      pivot(in_arc);
    }
    for (int u = 0; u < n_ + m_; ++u) {
      if (flow_[arcs_real_ + static_cast<std::size_t>(u)] > 1e-9)
        throw std::runtime_error("transport simplex: infeasible (unbalanced marginals)");
    }
  }

  Result extract() const {
    Result r;
    r.pivots = pivots_;
    r.flow = Eigen::MatrixXd::Zero(n_, m_);
    for (std::size_t e = 0; e < arcs_real_; ++e) {
      if (flow_[e] > 0.0) {
        const auto i = static_cast<Eigen::Index>(e / static_cast<std::size_t>(m_));
        const auto j = static_cast<Eigen::Index>(e % static_cast<std::size_t>(m_));
        r.flow(i, j) = flow_[e];
        r.cost += flow_[e] * cost_(i, j);
      }
    }
    return r;
  }

  int n_, m_, nodes_, root_;
  std::size_t arcs_real_;
  const Eigen::MatrixXd& cost_;
  double art_cost_ = 0.0;
  double eps_ = 0.0;
  std::size_t block_ = 0;
  std::size_t next_arc_ = 0;
  std::size_t pivots_ = 0;

  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> parent_;
  std::vector<std::size_t> pred_;
  std::vector<Dir> dir_;
  std::vector<int> depth_;
  std::vector<double> pi_;
};

}  // namespace wdrift::detail
