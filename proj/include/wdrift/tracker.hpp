#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bounds.hpp"
#include "oracle.hpp"
#include "prox.hpp"

namespace wdrift {

struct TrackerConfig {
  double alpha = 0.4;
  int q = 1;
  Eigen::Index m = 20;
  int horizon = 100;
  ProxSpec prox;
  Vector x0;  // empty means the origin
  std::uint64_t seed = 1;
  Eigen::Index oracle_samples = 100000;
  std::uint64_t oracle_seed = 2;

  void validate(const ObjectiveConstants& c) const {
    if (!(alpha > 0.0 && alpha < 2.0 / c.lipschitz_x))
      throw std::invalid_argument("tracker: alpha must lie in the open interval (0, 2/L_x) = (0, " +
                                  std::to_string(2.0 / c.lipschitz_x) + ")");
    if (q < 1) throw std::invalid_argument("tracker: q must be >= 1");
    if (m < 1) throw std::invalid_argument("tracker: m must be >= 1");
    if (horizon < 1) throw std::invalid_argument("tracker: horizon T must be >= 1");
    if (oracle_samples < 1) throw std::invalid_argument("tracker: J_oracle must be >= 1");
    prox.validate();
  }

  [[nodiscard]] Vector initial_point(Eigen::Index n) const {
    return x0.size() == 0 ? Vector::Zero(n) : x0;
  }
};

struct TrackerState {
  std::int64_t t = 1;
  Vector x;
  SampleWindow window;
};

inline TrackerState make_state(const TrackerConfig& cfg, Eigen::Index n_x) {
  return {1, cfg.initial_point(n_x), SampleWindow(cfg.q, cfg.m)};
}

/// Seed of the batch observed at time t of the run keyed by `run_seed`.
inline std::uint64_t step_seed(std::uint64_t run_seed, std::int64_t t) {
  return CounterRng(run_seed).fork({0x5eedULL, static_cast<std::uint64_t>(t)}).key();
}

/// Pushes the batch of time state.t into the window.
template <DriftingSampler S>
void observe(TrackerState& state, const TrackerConfig& cfg, const S& sampler) {
  state.window.push_batch(sample_batch(sampler, state.t, cfg.m, step_seed(cfg.seed, state.t)));
}

/// One proximal-gradient update x_{t+1} = prox_{alpha h}(x_t - alpha eta_t(x_t)).
template <StochasticObjective O>
TrackerState step(TrackerState state, const TrackerConfig& cfg, const O& obj) {
  const Vector g = eta(state.window, obj, state.x);
  state.x = prox_apply(cfg.prox, cfg.alpha, state.x - cfg.alpha * g);
  if (!state.x.allFinite()) throw std::runtime_error("tracker: iterate became non-finite");
  ++state.t;
  return state;
}

/// x*_t: minimiser of the J-sample empirical F_t + h.
template <StochasticObjective O, DriftingSampler S>
Vector solve_offline(const O& obj, const S& sampler, std::int64_t t, const ProxSpec& prox,
                     Eigen::Index oracle_samples, std::uint64_t seed, const Vector& x0) {
  const auto model = make_sample_objective(obj, sample_batch(sampler, t, oracle_samples, seed));
  const auto c = obj.constants();
  return minimize_composite(model, prox, x0, c.lipschitz_x, c.sigma).x;
}

/// Reference problem at one time step: the sample objective standing in for
/// F_t, its composite minimiser and the Monte Carlo standard errors.
template <StochasticObjective O>
struct GroundTruthStep {
  SampleObjective<O> model;
  Vector x_star;
  double se_gradient = 0.0;
  double se_x_star = 0.0;
};

template <StochasticObjective O>
struct GroundTruth {
  std::vector<GroundTruthStep<O>> steps;  // index t - 1

  [[nodiscard]] const GroundTruthStep<O>& at(std::int64_t t) const {
    return steps.at(static_cast<std::size_t>(t - 1));
  }
};

template <StochasticObjective O>
void resolve_step(GroundTruthStep<O>& step, const O& obj, const Batch& samples, const ProxSpec& prox,
                  const Vector& warm) {
  const auto c = obj.constants();
  step.x_star = minimize_composite(step.model, prox, warm, c.lipschitz_x, c.sigma).x;
  step.se_gradient = gradient_standard_error(obj, samples, step.x_star);
  step.se_x_star = step.se_gradient / std::max(step.model.min_curvature(), c.sigma);
}

/// Builds x*_1..x*_T from an oracle sample stream independent of every run.
template <StochasticObjective O, DriftingSampler S>
GroundTruth<O> build_ground_truth(const O& obj, const S& sampler, const ProxSpec& prox, int horizon,
                                  Eigen::Index oracle_samples, std::uint64_t oracle_seed) {
  GroundTruth<O> truth;
  truth.steps.reserve(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    Batch samples = sample_batch(sampler, t, oracle_samples, oracle_seed);
    auto model = make_sample_objective(obj, samples);
    truth.steps.push_back({std::move(model), Vector::Zero(obj.dim_x()), 0.0, 0.0});
    resolve_step(truth.steps.back(), obj, samples, prox,
                 t == 1 ? Vector::Zero(obj.dim_x()) : Vector(truth.steps[t - 2].x_star));
  }
  return truth;
}

/// The same sampled objectives re-solved under another nonsmooth term.
template <StochasticObjective O, DriftingSampler S>
GroundTruth<O> resolve_ground_truth(GroundTruth<O> truth, const O& obj, const S& sampler,
                                    const ProxSpec& prox, Eigen::Index oracle_samples,
                                    std::uint64_t oracle_seed) {
  Vector warm = Vector::Zero(obj.dim_x());
  for (std::size_t k = 0; k < truth.steps.size(); ++k) {
    const Batch samples =
        sample_batch(sampler, static_cast<std::int64_t>(k + 1), oracle_samples, oracle_seed);
    resolve_step(truth.steps[k], obj, samples, prox, warm);
    warm = truth.steps[k].x_star;
  }
  return truth;
}

/// Per-step records of one run, t = 1..T. e-bar uses the noncausal
/// convention |x_{t+1} - x*_t|.
struct RunMetrics {
  std::vector<double> e;
  std::vector<double> e_bar;
  std::vector<double> eps_norm;
  std::vector<double> f_gap;        // F_t(x_t) - F_t(x*_t)
  std::vector<double> f_gap_next;   // F_t(x_{t+1}) - F_t(x*_t)
  std::vector<double> phi_gap;      // Phi_t = F_t + h
  std::vector<double> phi_gap_next;
  std::vector<double> grad_norm;    // max(|grad F_t(x_t)|, |grad F_t(x_{t+1})|)
  std::vector<double> oracle_se;    // se(x*_t) + alpha se(grad F_t)
  std::vector<char> feasible;       // x_t in the untightened set
  std::vector<double> optimizer_drift;  // |x*_{t+1} - x*_t|, t = 1..T-1

  double V_T = 0.0;
  double E_T = 0.0;
  double regret_tracking = 0.0;
  double regret_estimation = 0.0;
  double phi_regret_tracking = 0.0;
  double phi_regret_estimation = 0.0;
  double G = 0.0;
  ProxVariant variant = ProxVariant::BoxIndicator;

  [[nodiscard]] std::size_t horizon() const { return e.size(); }

  /// F-gaps for the projected variant, Phi-gaps for penalty variants.
  [[nodiscard]] const char* regret_definition() const {
    return variant == ProxVariant::BoxIndicator ? "F_t" : "Phi_t = F_t + h";
  }

  [[nodiscard]] bounds::RunSums sums() const {
    bounds::RunSums s;
    s.e_1 = e.front();
    s.e_T = e.back();
    s.ebar_1 = e_bar.front();
    s.ebar_T = e_bar.back();
    s.eps_1 = eps_norm.front();
    s.eps_T = eps_norm.back();
    s.E_T = E_T;
    s.V_T = V_T;
    return s;
  }
};

template <StochasticObjective O, DriftingSampler S>
RunMetrics run(const TrackerConfig& cfg, const O& obj, const S& sampler, const GroundTruth<O>& truth) {
  cfg.validate(obj.constants());
  if (truth.steps.size() < static_cast<std::size_t>(cfg.horizon))
    throw std::invalid_argument("run: ground truth shorter than the horizon");

  const ConstraintSet& domain = cfg.prox.constraints;
  const auto T = static_cast<std::size_t>(cfg.horizon);
  RunMetrics out;
  out.variant = cfg.prox.variant;
  for (auto* v : {&out.e, &out.e_bar, &out.eps_norm, &out.f_gap, &out.f_gap_next, &out.phi_gap,
                  &out.phi_gap_next, &out.grad_norm, &out.oracle_se})
    v->reserve(T);
  out.feasible.reserve(T);

  auto penalty = [&](const Vector& x) {
    return cfg.prox.variant == ProxVariant::BoxIndicator ? 0.0 : penalty_value(cfg.prox, x);
  };

  TrackerState state = make_state(cfg, obj.dim_x());
  for (std::size_t k = 0; k < T; ++k) {
    const auto& ref = truth.at(state.t);
    observe(state, cfg, sampler);
    const Vector x = state.x;
    const auto err = epsilon(state.window, obj, ref.model, x);
    state = step(std::move(state), cfg, obj);
    const Vector& x_next = state.x;

    const double f_star = ref.model.value(ref.x_star);
    const double h_star = penalty(ref.x_star);
    out.e.push_back((x - ref.x_star).norm());
    out.e_bar.push_back((x_next - ref.x_star).norm());
    out.eps_norm.push_back(err.norm);
    out.f_gap.push_back(ref.model.value(x) - f_star);
    out.f_gap_next.push_back(ref.model.value(x_next) - f_star);
    out.phi_gap.push_back(out.f_gap.back() + penalty(x) - h_star);
    out.phi_gap_next.push_back(out.f_gap_next.back() + penalty(x_next) - h_star);
    out.grad_norm.push_back(
        std::max(ref.model.gradient(x).norm(), ref.model.gradient(x_next).norm()));
    out.oracle_se.push_back(ref.se_x_star + cfg.alpha * ref.se_gradient);
    out.feasible.push_back(domain.contains(x, 0.0, 1e-12) ? 1 : 0);
    if (k > 0) out.optimizer_drift.push_back((ref.x_star - truth.at(state.t - 2).x_star).norm());
  }

  for (double d : out.optimizer_drift) out.V_T += d;
  for (std::size_t k = 0; k < T; ++k) {
    out.E_T += out.eps_norm[k];
    out.regret_tracking += out.f_gap[k];
    out.regret_estimation += out.f_gap_next[k];
    out.phi_regret_tracking += out.phi_gap[k];
    out.phi_regret_estimation += out.phi_gap_next[k];
    out.G = std::max(out.G, out.grad_norm[k]);
  }
  return out;
}

template <StochasticObjective O, DriftingSampler S>
RunMetrics run(const TrackerConfig& cfg, const O& obj, const S& sampler) {
  const auto truth = build_ground_truth(obj, sampler, cfg.prox, cfg.horizon, cfg.oracle_samples,
                                        cfg.oracle_seed);
  return run(cfg, obj, sampler, truth);
}

/// Outcome of every per-run inequality of the tracking analysis.
struct RunAudit {
  std::size_t steps = 0;
  std::size_t contraction_ok = 0;  // e-bar_t <= r e_t + alpha |eps_t| + tol
  std::size_t chain_ok = 0;        // e_{t+1} <= r e_t + alpha |eps_t| + |x*_{t+1} - x*_t| + tol
  std::size_t chain_steps = 0;
  std::size_t drift_ok = 0;        // |x*_{t+1} - x*_t| <= v
  double max_drift = 0.0;
  bool sum_tracking_ok = false;
  bool sum_estimation_ok = false;
  bool regret_tracking_ok = false;
  bool regret_estimation_ok = false;
  bool penalty_regret_tracking_ok = false;
  bool penalty_regret_estimation_ok = false;
  bounds::ErrorSumBounds sum_bounds;
  bounds::RegretBounds regret_bounds;
  bounds::RegretBounds penalty_regret_bounds;
};

/// Checks a run against the analysis with contraction factor r, drift bound
/// v and subgradient bound g_bar. Per-step tolerances are 3 oracle standard
/// errors; accumulated sums get 1e-6 T.
inline RunAudit audit_run(const RunMetrics& mt, double r, double alpha, double v, double g_bar) {
  RunAudit a;
  const std::size_t T = mt.horizon();
  a.steps = T;
  for (std::size_t k = 0; k < T; ++k) {
    const double tol = 3.0 * mt.oracle_se[k] + 1e-9;
    if (mt.e_bar[k] <= r * mt.e[k] + alpha * mt.eps_norm[k] + tol) ++a.contraction_ok;
    if (k + 1 < T) {
      ++a.chain_steps;
      const double rhs = r * mt.e[k] + alpha * mt.eps_norm[k] + mt.optimizer_drift[k] + tol;
      if (mt.e[k + 1] <= rhs) ++a.chain_ok;
    }
  }
  for (double d : mt.optimizer_drift) {
    a.max_drift = std::max(a.max_drift, d);
    if (d <= v) ++a.drift_ok;
  }

  const auto s = mt.sums();
  const double sum_tol = 1e-6 * static_cast<double>(T);
  double sum_e = 0.0, sum_ebar = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    sum_e += mt.e[k];
    sum_ebar += mt.e_bar[k];
  }
  a.sum_bounds = bounds::error_sum_bounds(r, alpha, s);
  a.sum_tracking_ok = sum_e <= a.sum_bounds.tracking + sum_tol;
  a.sum_estimation_ok = sum_ebar <= a.sum_bounds.estimation + sum_tol;

  a.regret_bounds = bounds::regret_bounds(r, alpha, mt.G, s);
  a.regret_tracking_ok = mt.regret_tracking <= a.regret_bounds.tracking + sum_tol;
  a.regret_estimation_ok = mt.regret_estimation <= a.regret_bounds.estimation + sum_tol;

  a.penalty_regret_bounds = bounds::penalty_regret_bounds(r, alpha, g_bar, s);
  a.penalty_regret_tracking_ok = mt.phi_regret_tracking <= a.penalty_regret_bounds.tracking + sum_tol;
  a.penalty_regret_estimation_ok =
      mt.phi_regret_estimation <= a.penalty_regret_bounds.estimation + sum_tol;
  return a;
}

struct StepSummary {
  double mean_e = 0.0;
  double se_e = 0.0;
  double mean_ebar = 0.0;
  double se_ebar = 0.0;
  double mean_eps = 0.0;
  double se_eps = 0.0;
  double feasible_rate = 0.0;
};

struct MonteCarloResult {
  std::vector<RunMetrics> runs;
  std::vector<StepSummary> per_step;  // t = 1..T
};

/// Seed of run k under a base seed.
inline std::uint64_t run_seed(std::uint64_t base_seed, std::size_t k) {
  return CounterRng(base_seed).fork({0x7275ULL, static_cast<std::uint64_t>(k)}).key();
}

/// Independent seeded runs against a shared ground truth; aggregation is by
/// run index, so the result does not depend on the worker count.
template <StochasticObjective O, DriftingSampler S>
MonteCarloResult monte_carlo(const TrackerConfig& cfg, const O& obj, const S& sampler,
                             const GroundTruth<O>& truth, std::size_t n_runs,
                             std::uint64_t base_seed, unsigned workers = 1) {
  if (n_runs < 1) throw std::invalid_argument("monte_carlo: n_runs must be >= 1");
  cfg.validate(obj.constants());
  MonteCarloResult out;
  out.runs.resize(n_runs);

  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(n_runs));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&](unsigned w) {
    try {
      for (std::size_t k = w; k < n_runs; k += workers) {
        TrackerConfig c = cfg;
        c.seed = run_seed(base_seed, k);
        out.runs[k] = run(c, obj, sampler, truth);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
  }
  if (failure) std::rethrow_exception(failure);

  const auto T = static_cast<std::size_t>(cfg.horizon);
  const double n = static_cast<double>(n_runs);
  auto mean_se = [&](auto field, std::size_t k, double& mean, double& se) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : out.runs) {
      const double v = (r.*field)[k];
      s += v;
      s2 += v * v;
    }
    mean = s / n;
    se = n > 1 ? std::sqrt(std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) / n) : 0.0;
  };
  out.per_step.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    auto& p = out.per_step[k];
    mean_se(&RunMetrics::e, k, p.mean_e, p.se_e);
    mean_se(&RunMetrics::e_bar, k, p.mean_ebar, p.se_ebar);
    mean_se(&RunMetrics::eps_norm, k, p.mean_eps, p.se_eps);
    double feas = 0.0;
    for (const auto& r : out.runs) feas += r.feasible[k];
    p.feasible_rate = feas / n;
  }
  return out;
}

}  // namespace wdrift
