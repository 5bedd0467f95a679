#pragma once

// Closed-form calculators for the tracking guarantees of online proximal
// gradient under Wasserstein-bounded drift. Pure arithmetic, no randomness.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdrift::bounds {

/// Constants of a problem instance. c1, c2 are the measure-concentration
/// constants; they are never instantiated by the theory and default to 1.
struct BoundInputs {
  double rho = 0.0;
  int n_x = 1;
  int n_w = 1;
  double lipschitz_x = 1.0;
  double lipschitz_w = 1.0;
  double sigma = 1.0;
  double alpha = 0.5;
  double m = 1.0;
  double q = 1.0;
  double a = 2.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double lambda_pen = 0.0;
  int n_c = 0;
  double lipschitz_c = 0.0;
  double e_1 = 0.0;
  double theta = 0.0;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("bounds: " + what); };
    if (!(rho >= 0.0)) fail("rho must be nonnegative");
    if (n_x < 1 || n_w < 1) fail("dimensions must be positive");
    if (!(lipschitz_x > 0.0) || !(lipschitz_w > 0.0)) fail("Lipschitz constants must be positive");
    if (!(sigma > 0.0)) fail("sigma must be positive");
    if (!(alpha > 0.0 && alpha < 2.0 / lipschitz_x))
      fail("alpha must lie in the open interval (0, 2/L_x) = (0, " +
           std::to_string(2.0 / lipschitz_x) + ")");
    if (!(m >= 1.0) || !(q >= 1.0)) fail("m and q must be at least 1");
    if (!(a > 1.0)) fail("a must exceed 1");
    if (!(c1 > 0.0) || !(c2 > 0.0)) fail("c1 and c2 must be positive");
    if (!(lambda_pen >= 0.0) || n_c < 0 || !(lipschitz_c >= 0.0)) fail("penalty data must be nonnegative");
    if (!(e_1 >= 0.0) || !(theta >= 0.0)) fail("e_1 and theta must be nonnegative");
  }
};

/// Bound on the optimiser drift |x*_{t+1} - x*_t|: rho n_x L_w / sigma.
inline double drift_bound_v(double rho, int n_x, double lipschitz_w, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("drift_bound_v: sigma must be positive");
  return rho * n_x * lipschitz_w / sigma;
}

inline double drift_bound_v(const BoundInputs& in) {
  return drift_bound_v(in.rho, in.n_x, in.lipschitz_w, in.sigma);
}

/// Contraction factor max(|1 - alpha L_x|, |1 - alpha sigma|) of one
/// gradient step; requires alpha in (0, 2/L_x).
inline double contraction_r(double alpha, double lipschitz_x, double sigma) {
  if (!(alpha > 0.0 && alpha < 2.0 / lipschitz_x))
    throw std::invalid_argument("contraction_r: alpha must lie in the open interval (0, 2/L_x) = (0, " +
                                std::to_string(2.0 / lipschitz_x) + ")");
  return std::max(std::abs(1.0 - alpha * lipschitz_x), std::abs(1.0 - alpha * sigma));
}

/// Step size minimising the contraction factor.
inline double optimal_alpha(double lipschitz_x, double sigma) { return 2.0 / (lipschitz_x + sigma); }

/// Concentration radius zeta(gamma) of an m-sample empirical measure:
/// (log(c1/gamma) / (c2 m))^(1/max(n_w,2)) when m >= log(c1/gamma)/c2,
/// else the same base to the power 1/a. n_w = 2 is excluded.
inline double zeta(double gamma, double m, int n_w, double a, double c1, double c2) {
  if (n_w == 2) throw std::invalid_argument("zeta: n_w = 2 is excluded");
  if (!(gamma > 0.0)) throw std::invalid_argument("zeta: gamma must be positive");
  if (!(gamma < c1)) throw std::invalid_argument("zeta: gamma must be below c1");
  if (!(m >= 1.0)) throw std::invalid_argument("zeta: m must be at least 1");
  if (!(c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("zeta: c1, c2 must be positive");
  if (!(a > 1.0)) throw std::invalid_argument("zeta: a must exceed 1");
  const double log_term = std::log(c1 / gamma);
  const double base = log_term / (c2 * m);
  const double d = std::max(n_w, 2);
  return m >= log_term / c2 ? std::pow(base, 1.0 / d) : std::pow(base, 1.0 / a);
}

/// Radius that |grad F_t - eta_t| stays below with probability at least
/// 1 - q n_x gamma: L_w (zeta(gamma) + (q - 1) rho / 2).
inline double gradient_error_radius(const BoundInputs& in, double gamma) {
  return in.lipschitz_w * (zeta(gamma, in.m, in.n_w, in.a, in.c1, in.c2) + (in.q - 1.0) * in.rho / 2.0);
}

inline double gradient_error_confidence(const BoundInputs& in, double gamma) {
  return 1.0 - in.q * in.n_x * gamma;
}

/// Bound Delta on E|grad F_t(x_t) - eta_t(x_t)|.
inline double delta_bound(const BoundInputs& in) {
  const double d = std::max(2, in.n_w);
  const double drift_term = in.lipschitz_w * (in.q - 1.0) * in.rho / 2.0;
  const double sample_term = std::tgamma(1.0 / d) / (d * std::pow(in.c2 * in.m, 1.0 / d)) +
                             std::tgamma(1.0 / in.a) / (in.a * std::pow(in.c2 * in.m, 1.0 / in.a));
  return drift_term + in.q * in.n_x * in.c1 * in.lipschitz_w * sample_term;
}

struct AsymptoticBounds {
  double tracking = 0.0;
  double estimation = 0.0;
};

/// lim sup E e_t <= (v + alpha Delta)/(1 - r) and
/// lim sup E e-bar_t <= (r v + alpha Delta)/(1 - r).
inline AsymptoticBounds asymptotic_bounds(double v, double r, double alpha, double delta) {
  if (!(r < 1.0)) throw std::invalid_argument("asymptotic_bounds: r must be below 1");
  return {(v + alpha * delta) / (1.0 - r), (r * v + alpha * delta) / (1.0 - r)};
}

/// Measured quantities of one run that enter the finite-horizon bounds.
struct RunSums {
  double e_1 = 0.0;
  double e_T = 0.0;
  double ebar_1 = 0.0;
  double ebar_T = 0.0;
  double eps_1 = 0.0;
  double eps_T = 0.0;
  double E_T = 0.0;  // sum_t |eps_t|
  double V_T = 0.0;  // sum_{t<T} |x*_{t+1} - x*_t|
};

/// Right-hand sides of the finite-horizon error sums:
///   sum e_t    <= [(e_1 - r e_T - alpha|eps_T|) + alpha E_T + V_T] / (1 - r)
///   sum ebar_t <= [(ebar_1 - r ebar_T - alpha|eps_1|) + alpha E_T + r V_T] / (1 - r)
struct ErrorSumBounds {
  double tracking = 0.0;
  double estimation = 0.0;
};

inline ErrorSumBounds error_sum_bounds(double r, double alpha, const RunSums& s) {
  if (!(r < 1.0)) throw std::invalid_argument("error_sum_bounds: r must be below 1");
  return {((s.e_1 - r * s.e_T - alpha * s.eps_T) + alpha * s.E_T + s.V_T) / (1.0 - r),
          ((s.ebar_1 - r * s.ebar_T - alpha * s.eps_1) + alpha * s.E_T + r * s.V_T) / (1.0 - r)};
}

/// Dynamic-regret bounds with a gradient bound G, as stated (tracking,
/// estimation) and in their relaxed U_T forms that drop the -r e_T terms.
struct RegretBounds {
  double tracking = 0.0;
  double estimation = 0.0;
  double u_tracking = 0.0;
  double u_estimation = 0.0;
};

inline RegretBounds regret_bounds(double r, double alpha, double grad_bound, const RunSums& s) {
  if (!(r < 1.0)) throw std::invalid_argument("regret_bounds: r must be below 1");
  const double k = grad_bound / (1.0 - r);
  RegretBounds b;
  b.tracking = k * ((s.e_1 - r * s.e_T - alpha * s.eps_T) + alpha * s.E_T + s.V_T);
  b.estimation = k * ((s.ebar_1 - r * s.ebar_T - alpha * s.eps_1) + alpha * s.E_T + r * s.V_T);
  b.u_tracking = k * ((s.e_1 - alpha * s.eps_T) + alpha * s.E_T + s.V_T);
  b.u_estimation = k * ((s.ebar_1 - alpha * s.eps_1) + alpha * s.E_T + r * s.V_T);
  return b;
}

/// Bound on the expected subgradient norm of F_t + h along the iterates
/// for the exact-penalty formulation.
inline double g_bar(double r, double alpha, double e_1, double delta, double v, double lambda_pen,
                    int n_c, double lipschitz_c) {
  if (!(r < 1.0)) throw std::invalid_argument("g_bar: r must be below 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("g_bar: alpha must be positive");
  return (1.0 + r) / alpha * (r * e_1 + alpha * delta + (alpha * delta + v) / (1.0 - r)) +
         2.0 * delta + 2.0 * lambda_pen * n_c * lipschitz_c;
}

/// Penalised-problem regret bounds with the subgradient bound G-bar:
///   tracking   <= G/(1-r) [e_1 - alpha E|eps_T| + alpha E-bar_T + V_T]
///   estimation <= G/(1-r) [r e_1 + alpha E-bar_T + r V_T]
inline RegretBounds penalty_regret_bounds(double r, double alpha, double g_bar_value,
                                          const RunSums& s) {
  if (!(r < 1.0)) throw std::invalid_argument("penalty_regret_bounds: r must be below 1");
  const double k = g_bar_value / (1.0 - r);
  RegretBounds b;
  b.tracking = k * (s.e_1 - alpha * s.eps_T + alpha * s.E_T + s.V_T);
  b.estimation = k * (r * s.e_1 + alpha * s.E_T + r * s.V_T);
  b.u_tracking = b.tracking;
  b.u_estimation = b.estimation;
  return b;
}

/// Constraint margin theta (r v + alpha Delta)/(1 - r) that keeps iterates
/// feasible with probability at least 1 - 1/theta after burn-in.
inline double tightening_margin(double theta, double r, double v, double alpha, double delta) {
  if (!(r < 1.0)) throw std::invalid_argument("tightening_margin: r must be below 1");
  if (!(theta >= 0.0)) throw std::invalid_argument("tightening_margin: theta must be nonnegative");
  return theta * (r * v + alpha * delta) / (1.0 - r);
}

struct BoundReport {
  double v = 0.0;
  double r = 0.0;
  double alpha_max = 0.0;     // 2 / L_x
  double alpha_star = 0.0;    // 2 / (L_x + sigma)
  double r_star = 0.0;
  double delta = 0.0;
  std::vector<double> gammas;
  std::vector<double> zetas;  // zeta(gamma) per gamma
  std::vector<double> radii;  // L_w (zeta + (q-1) rho / 2)
  std::vector<double> confidences;
  AsymptoticBounds asymptotic;
  double g_bar = 0.0;
  double tightening_margin = 0.0;
  double feasibility_probability = 0.0;  // 1 - 1/theta
};

inline BoundReport make_bound_report(const BoundInputs& in, const std::vector<double>& gammas = {}) {
  in.validate();
  BoundReport rep;
  rep.v = drift_bound_v(in);
  rep.r = contraction_r(in.alpha, in.lipschitz_x, in.sigma);
  rep.alpha_max = 2.0 / in.lipschitz_x;
  rep.alpha_star = optimal_alpha(in.lipschitz_x, in.sigma);
  rep.r_star = contraction_r(rep.alpha_star, in.lipschitz_x, in.sigma);
  rep.delta = delta_bound(in);
  for (double g : gammas) {
    rep.gammas.push_back(g);
    if (in.n_w == 2 || !(g > 0.0 && g < in.c1)) {
      rep.zetas.push_back(std::nan(""));
      rep.radii.push_back(std::nan(""));
    } else {
      rep.zetas.push_back(zeta(g, in.m, in.n_w, in.a, in.c1, in.c2));
      rep.radii.push_back(gradient_error_radius(in, g));
    }
    rep.confidences.push_back(gradient_error_confidence(in, g));
  }
  rep.asymptotic = asymptotic_bounds(rep.v, rep.r, in.alpha, rep.delta);
  rep.g_bar = g_bar(rep.r, in.alpha, in.e_1, rep.delta, rep.v, in.lambda_pen, in.n_c, in.lipschitz_c);
  rep.tightening_margin = tightening_margin(in.theta, rep.r, rep.v, in.alpha, rep.delta);
  rep.feasibility_probability = in.theta > 0.0 ? std::max(0.0, 1.0 - 1.0 / in.theta) : 0.0;
  return rep;
}

}  // namespace wdrift::bounds
