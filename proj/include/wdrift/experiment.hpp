#pragma once

// Config-driven experiment runner behind the wdrift command-line tool.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bounds.hpp"
#include "distributions.hpp"
#include "tracker.hpp"

namespace wdrift::experiment {

/// Invalid configuration; `field` is the dotted key at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Shortest round-trip-free rendering with 12 significant digits,
/// independent of the global locale.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

inline std::string fmt(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(key, "expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& key, std::string_view s) {
  const double v = parse_double(key, s);
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw ConfigError(key, "expected an integer, got '" + std::string(trim(s)) + "'");
  return static_cast<std::int64_t>(v);
}

inline std::uint64_t parse_seed(const std::string& key, std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(key, "expected a nonnegative integer seed, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, std::string_view s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(parse_double(key, part));
  return out;
}

inline Vector parse_vector(const std::string& key, std::string_view s) {
  const auto v = parse_list(key, s);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Flat `section.key = value` text; '#' starts a comment.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source = "config") {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view s = line;
      if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
      s = detail::trim(s);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      const std::string where = source + ":" + std::to_string(lineno);
      if (eq == std::string_view::npos) throw ConfigError(where, "expected 'key = value'");
      const std::string key(detail::trim(s.substr(0, eq)));
      if (key.empty()) throw ConfigError(where, "empty key");
      if (kv.values_.count(key)) throw ConfigError(key, "duplicate key (" + where + ")");
      kv.values_[key] = std::string(detail::trim(s.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValues load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot read '" + path.string() + "'");
    return parse(in, path.filename().string());
  }

  [[nodiscard]] const std::string* find(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class SamplerKind { Rotating, Stationary, PointMass, Alternating };

struct ExperimentConfig {
  // problem
  double lambda_reg = 0.01;
  double x_max = 2.0;
  std::optional<double> lipschitz_x, lipschitz_w, sigma;
  double tail_exponent = 2.0;
  std::string constraint_kind = "box";
  Matrix constraint_rows;
  Vector constraint_offsets;

  // sampler
  SamplerKind sampler = SamplerKind::Rotating;
  int period = 20;
  double declared_rho = 0.33;
  double noise_std = 1.0;
  double sample_bound = 1.0;
  Vector point = Vector::Zero(3);
  Vector even = Vector::Zero(3);
  Vector odd = Vector::Ones(3);

  // tracker
  double alpha = 0.4;
  int m = 20;
  int q = 1;
  int horizon = 100;
  int burn_in = 20;
  Vector x0 = Vector::Zero(2);

  // prox
  ProxVariant variant = ProxVariant::BoxIndicator;
  std::optional<double> lambda_pen = 1.0;  // nullopt: choose from the grid
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
  double theta = 4.0;

  // bounds
  std::optional<double> bound_rho;
  double c1 = 1.0;
  double c2 = 1.0;
  std::optional<double> bound_e1;
  std::vector<double> gammas{0.01, 0.1};

  // montecarlo
  int n_runs = 500;
  int oracle_samples = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  // drift
  int drift_samples = 500;
  int drift_horizon = 20;
  GroundMetric metric = GroundMetric::Euclidean;

  // sweep
  std::string sweep_parameter;
  std::vector<double> sweep_grid;
  int hold_total = 0;

  std::string output_dir = "out";

  [[nodiscard]] RidgeRegression objective() const {
    RidgeRegression obj(lambda_reg, x_max);
    auto c = obj.constants();
    if (lipschitz_x) c.lipschitz_x = *lipschitz_x;
    if (lipschitz_w) c.lipschitz_w = *lipschitz_w;
    if (sigma) c.sigma = *sigma;
    c.tail_exponent = tail_exponent;
    obj.set_constants(c);
    return obj;
  }

  [[nodiscard]] ConstraintSet constraints() const {
    if (constraint_kind == "box") return ConstraintSet::box(2, x_max);
    return ConstraintSet::affine(constraint_rows, constraint_offsets);
  }

  [[nodiscard]] double rho() const { return bound_rho.value_or(declared_rho); }

  /// Seeds of the independent streams derived from the base seed.
  [[nodiscard]] std::uint64_t oracle_seed() const { return CounterRng(seed).fork({1}).key(); }
  [[nodiscard]] std::uint64_t runs_seed() const { return CounterRng(seed).fork({2}).key(); }

  /// Every resolved setting, one `key = value` pair each, for provenance.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> describe() const {
    std::vector<std::pair<std::string, std::string>> d;
    auto add = [&](std::string k, std::string v) { d.emplace_back(std::move(k), std::move(v)); };
    const auto c = objective().constants();
    add("problem.lambda_reg", fmt(lambda_reg));
    add("problem.x_max", fmt(x_max));
    add("problem.L_x", fmt(c.lipschitz_x));
    add("problem.L_w", fmt(c.lipschitz_w));
    add("problem.sigma", fmt(c.sigma));
    add("problem.a", fmt(tail_exponent));
    add("constraints.kind", constraint_kind);
    if (constraint_kind == "affine") {
      std::string rows;
      for (Eigen::Index i = 0; i < constraint_rows.rows(); ++i)
        rows += (i ? ";" : "") + fmt(Vector(constraint_rows.row(i).transpose()));
      add("constraints.rows", rows);
      add("constraints.offsets", fmt(constraint_offsets));
    }
    const char* kinds[] = {"rotating", "stationary", "point_mass", "alternating"};
    add("sampler.kind", kinds[static_cast<int>(sampler)]);
    switch (sampler) {
      case SamplerKind::Rotating:
        add("sampler.period", std::to_string(period));
        add("sampler.noise_std", fmt(noise_std));
        add("sampler.bound", fmt(sample_bound));
        break;
      case SamplerKind::Stationary:
        add("sampler.noise_std", fmt(noise_std));
        add("sampler.bound", fmt(sample_bound));
        break;
      case SamplerKind::PointMass: add("sampler.point", fmt(point)); break;
      case SamplerKind::Alternating:
        add("sampler.even", fmt(even));
        add("sampler.odd", fmt(odd));
        break;
    }
    add("sampler.rho", fmt(declared_rho));
    add("tracker.alpha", fmt(alpha));
    add("tracker.m", std::to_string(m));
    add("tracker.q", std::to_string(q));
    add("tracker.T", std::to_string(horizon));
    add("tracker.burn_in", std::to_string(burn_in));
    add("tracker.x0", fmt(x0));
    add("prox.variant", to_string(variant));
    add("prox.lambda_pen", lambda_pen ? fmt(*lambda_pen) : "auto");
    add("prox.lambda_grid", fmt_list(lambda_grid));
    add("prox.theta", fmt(theta));
    add("bounds.rho", fmt(rho()));
    add("bounds.c1", fmt(c1));
    add("bounds.c2", fmt(c2));
    add("bounds.e_1", bound_e1 ? fmt(*bound_e1) : "measured");
    add("bounds.gammas", fmt_list(gammas));
    add("montecarlo.n_runs", std::to_string(n_runs));
    add("montecarlo.J_oracle", std::to_string(oracle_samples));
    add("montecarlo.seed", std::to_string(seed));
    add("drift.J", std::to_string(drift_samples));
    add("drift.horizon", std::to_string(drift_horizon));
    add("drift.metric", metric == GroundMetric::Euclidean ? "euclidean" : "manhattan");
    if (!sweep_parameter.empty()) {
      add("sweep.parameter", sweep_parameter);
      add("sweep.grid", fmt_list(sweep_grid));
      add("sweep.hold_total", std::to_string(hold_total));
    }
    return d;
  }

  /// Bound-calculator inputs. e_1 falls back to the domain diameter when
  /// no measurement is available.
  [[nodiscard]] bounds::BoundInputs bound_inputs(std::optional<double> measured_e1 = {}) const {
    const auto obj = objective();
    const auto c = obj.constants();
    const auto cs = constraints();
    bounds::BoundInputs in;
    in.rho = rho();
    in.n_x = static_cast<int>(obj.dim_x());
    in.n_w = static_cast<int>(obj.dim_w());
    in.lipschitz_x = c.lipschitz_x;
    in.lipschitz_w = c.lipschitz_w;
    in.sigma = c.sigma;
    in.alpha = alpha;
    in.m = m;
    in.q = q;
    in.a = c.tail_exponent;
    in.c1 = c1;
    in.c2 = c2;
    in.lambda_pen = variant == ProxVariant::BoxIndicator
                        ? 0.0
                        : lambda_pen.value_or(lambda_grid.empty() ? 0.0 : lambda_grid.back());
    in.n_c = static_cast<int>(cs.count());
    in.lipschitz_c = cs.lipschitz();
    if (bound_e1) {
      in.e_1 = *bound_e1;
    } else if (measured_e1) {
      in.e_1 = *measured_e1;
    } else {
      in.e_1 = 2.0 * x_max * std::sqrt(static_cast<double>(in.n_x));
    }
    in.theta = theta;
    return in;
  }

  /// Checks every module precondition; failures name the offending key.
  void validate() const {
    auto wrap = [](const char* key, auto&& fn) {
      try {
        fn();
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
      }
    };
    wrap("problem", [&] { objective().constants().validate(); });
    wrap("constraints", [&] { (void)constraints(); });
    if (constraint_kind == "affine" && constraint_rows.cols() != 2)
      throw ConfigError("constraints.rows", "each row needs 2 entries");
    if (x0.size() != 2) throw ConfigError("tracker.x0", "expected 2 entries");
    if (sampler == SamplerKind::Rotating && period < 1)
      throw ConfigError("sampler.period", "must be >= 1");
    if (!(declared_rho >= 0.0)) throw ConfigError("sampler.rho", "must be nonnegative");
    if (!(noise_std > 0.0)) throw ConfigError("sampler.noise_std", "must be positive");
    if (!(sample_bound > 0.0)) throw ConfigError("sampler.bound", "must be positive");
    if (sampler == SamplerKind::PointMass && point.size() != 3)
      throw ConfigError("sampler.point", "expected 3 entries (w1, w2)");
    if (sampler == SamplerKind::Alternating && (even.size() != 3 || odd.size() != 3))
      throw ConfigError("sampler.even", "expected 3 entries for even and odd");
    const auto c = objective().constants();
    if (!(alpha > 0.0 && alpha < 2.0 / c.lipschitz_x))
      throw ConfigError("tracker.alpha", "alpha must lie in the open interval (0, 2/L_x) = (0, " +
                                             fmt(2.0 / c.lipschitz_x) + ")");
    if (m < 1) throw ConfigError("tracker.m", "must be >= 1");
    if (q < 1) throw ConfigError("tracker.q", "must be >= 1");
    if (horizon < 1) throw ConfigError("tracker.T", "must be >= 1");
    if (burn_in < 1) throw ConfigError("tracker.burn_in", "must be >= 1");
    if (lambda_pen && !(*lambda_pen > 0.0)) throw ConfigError("prox.lambda_pen", "must be positive");
    if (!lambda_pen && lambda_grid.empty()) throw ConfigError("prox.lambda_grid", "empty grid");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i)
      if (!(lambda_grid[i] > 0.0) || (i && !(lambda_grid[i] > lambda_grid[i - 1])))
        throw ConfigError("prox.lambda_grid", "must be positive and strictly increasing");
    if (!(theta >= 0.0)) throw ConfigError("prox.theta", "must be nonnegative");
    if (!(rho() >= 0.0)) throw ConfigError("bounds.rho", "must be nonnegative");
    if (!(c1 > 0.0)) throw ConfigError("bounds.c1", "must be positive");
    if (!(c2 > 0.0)) throw ConfigError("bounds.c2", "must be positive");
    if (bound_e1 && !(*bound_e1 >= 0.0)) throw ConfigError("bounds.e_1", "must be nonnegative");
    wrap("bounds", [&] { bound_inputs().validate(); });
    if (n_runs < 1) throw ConfigError("montecarlo.n_runs", "must be >= 1");
    if (oracle_samples < 1) throw ConfigError("montecarlo.J_oracle", "must be >= 1");
    if (workers < 1) throw ConfigError("montecarlo.workers", "must be >= 1");
    if (drift_samples < 2) throw ConfigError("drift.J", "must be >= 2");
    if (drift_horizon < 2) throw ConfigError("drift.horizon", "must be >= 2");
  }
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "problem.lambda_reg", "problem.x_max", "problem.L_x", "problem.L_w", "problem.sigma",
      "problem.a", "constraints.kind", "constraints.rows", "constraints.offsets", "sampler.kind",
      "sampler.period", "sampler.rho", "sampler.noise_std", "sampler.bound", "sampler.point",
      "sampler.even", "sampler.odd", "tracker.alpha", "tracker.m", "tracker.q", "tracker.T",
      "tracker.burn_in", "tracker.x0", "prox.variant", "prox.lambda_pen", "prox.lambda_grid",
      "prox.theta", "bounds.rho", "bounds.c1", "bounds.c2", "bounds.e_1", "bounds.gammas",
      "montecarlo.n_runs", "montecarlo.J_oracle", "montecarlo.seed", "montecarlo.workers",
      "drift.J", "drift.horizon", "drift.metric", "sweep.parameter", "sweep.grid",
      "sweep.hold_total", "output.dir"};
  return keys;
}

inline ExperimentConfig from_key_values(const KeyValues& kv) {
  for (const auto& [key, value] : kv.values())
    if (!known_keys().count(key)) throw ConfigError(key, "unknown key");

  ExperimentConfig c;
  auto str = [&](const char* key) -> const std::string* { return kv.find(key); };
  auto num = [&](const char* key, double& out) {
    if (auto s = str(key)) out = detail::parse_double(key, *s);
  };
  auto opt = [&](const char* key, std::optional<double>& out) {
    if (auto s = str(key)) out = detail::parse_double(key, *s);
  };
  auto integer = [&](const char* key, int& out) {
    if (auto s = str(key)) {
      const auto v = detail::parse_int(key, *s);
      if (v < -2147483647 || v > 2147483647) throw ConfigError(key, "out of range");
      out = static_cast<int>(v);
    }
  };
  auto vec = [&](const char* key, Vector& out) {
    if (auto s = str(key)) out = detail::parse_vector(key, *s);
  };
  auto list = [&](const char* key, std::vector<double>& out) {
    if (auto s = str(key)) out = detail::parse_list(key, *s);
  };

  num("problem.lambda_reg", c.lambda_reg);
  num("problem.x_max", c.x_max);
  opt("problem.L_x", c.lipschitz_x);
  opt("problem.L_w", c.lipschitz_w);
  opt("problem.sigma", c.sigma);
  num("problem.a", c.tail_exponent);
  if (!(c.lambda_reg > 0.0)) throw ConfigError("problem.lambda_reg", "must be positive");
  if (!(c.x_max > 0.0)) throw ConfigError("problem.x_max", "must be positive");

  if (auto s = str("constraints.kind")) {
    if (*s != "box" && *s != "affine") throw ConfigError("constraints.kind", "expected box or affine");
    c.constraint_kind = *s;
  }
  if (c.constraint_kind == "affine") {
    const auto* rows = str("constraints.rows");
    const auto* offsets = str("constraints.offsets");
    if (!rows || !offsets)
      throw ConfigError("constraints.rows", "affine constraints need rows and offsets");
    std::vector<Vector> parsed;
    for (auto r : detail::split(*rows, ';')) parsed.push_back(detail::parse_vector("constraints.rows", r));
    c.constraint_offsets = detail::parse_vector("constraints.offsets", *offsets);
    if (c.constraint_offsets.size() != static_cast<Eigen::Index>(parsed.size()))
      throw ConfigError("constraints.offsets", "one offset per row required");
    c.constraint_rows.resize(static_cast<Eigen::Index>(parsed.size()), 2);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (parsed[i].size() != 2) throw ConfigError("constraints.rows", "each row needs 2 entries");
      c.constraint_rows.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
    }
  }

  if (auto s = str("sampler.kind")) {
    if (*s == "rotating") c.sampler = SamplerKind::Rotating;
    else if (*s == "stationary") c.sampler = SamplerKind::Stationary;
    else if (*s == "point_mass") c.sampler = SamplerKind::PointMass;
    else if (*s == "alternating") c.sampler = SamplerKind::Alternating;
    else throw ConfigError("sampler.kind", "expected rotating, stationary, point_mass or alternating");
  }
  integer("sampler.period", c.period);
  num("sampler.noise_std", c.noise_std);
  num("sampler.bound", c.sample_bound);
  vec("sampler.point", c.point);
  vec("sampler.even", c.even);
  vec("sampler.odd", c.odd);
  if (c.sampler == SamplerKind::Stationary || c.sampler == SamplerKind::PointMass) c.declared_rho = 0.0;
  if (c.sampler == SamplerKind::Alternating && c.even.size() == c.odd.size())
    c.declared_rho = (c.even - c.odd).norm();
  num("sampler.rho", c.declared_rho);

  num("tracker.alpha", c.alpha);
  integer("tracker.m", c.m);
  integer("tracker.q", c.q);
  integer("tracker.T", c.horizon);
  integer("tracker.burn_in", c.burn_in);
  vec("tracker.x0", c.x0);

  if (auto s = str("prox.variant")) {
    if (*s == "box") c.variant = ProxVariant::BoxIndicator;
    else if (*s == "hinge") c.variant = ProxVariant::AffineHinge;
    else if (*s == "tightened") c.variant = ProxVariant::TightenedHinge;
    else throw ConfigError("prox.variant", "expected box, hinge or tightened");
  }
  if (auto s = str("prox.lambda_pen")) {
    if (*s == "auto") c.lambda_pen.reset();
    else c.lambda_pen = detail::parse_double("prox.lambda_pen", *s);
  }
  list("prox.lambda_grid", c.lambda_grid);
  num("prox.theta", c.theta);

  opt("bounds.rho", c.bound_rho);
  num("bounds.c1", c.c1);
  num("bounds.c2", c.c2);
  opt("bounds.e_1", c.bound_e1);
  list("bounds.gammas", c.gammas);

  integer("montecarlo.n_runs", c.n_runs);
  integer("montecarlo.J_oracle", c.oracle_samples);
  if (auto s = str("montecarlo.seed")) c.seed = detail::parse_seed("montecarlo.seed", *s);
  if (auto s = str("montecarlo.workers")) {
    const auto w = detail::parse_int("montecarlo.workers", *s);
    if (w < 1 || w > 4096) throw ConfigError("montecarlo.workers", "must be in [1, 4096]");
    c.workers = static_cast<unsigned>(w);
  }

  integer("drift.J", c.drift_samples);
  integer("drift.horizon", c.drift_horizon);
  if (auto s = str("drift.metric")) {
    if (*s == "euclidean") c.metric = GroundMetric::Euclidean;
    else if (*s == "manhattan") c.metric = GroundMetric::Manhattan;
    else throw ConfigError("drift.metric", "expected euclidean or manhattan");
  }

  if (auto s = str("sweep.parameter")) c.sweep_parameter = *s;
  list("sweep.grid", c.sweep_grid);
  integer("sweep.hold_total", c.hold_total);
  if (auto s = str("output.dir")) c.output_dir = *s;
  return c;
}

using AnySampler = std::variant<RotatingRegressionSampler, StationaryTruncatedSampler,
                                PointMassSampler, AlternatingDiracSampler>;

inline AnySampler make_sampler(const ExperimentConfig& c) {
  switch (c.sampler) {
    case SamplerKind::Rotating:
      return RotatingRegressionSampler(c.period, c.declared_rho, c.noise_std, c.sample_bound);
    case SamplerKind::Stationary: {
      const TruncatedGaussianSpec g{0.0, c.noise_std, -c.sample_bound, c.sample_bound};
      return StationaryTruncatedSampler({g, g, g});
    }
    case SamplerKind::PointMass: return PointMassSampler(c.point);
    case SamplerKind::Alternating: return AlternatingDiracSampler(c.even, c.odd);
  }
  throw std::logic_error("unknown sampler kind");
}

/// Everything a Monte Carlo experiment measured, with the outcome of each
/// inequality check.
struct ExperimentResult {
  bounds::BoundReport report;
  double lambda_pen = 0.0;  // penalty weight in use (0 for projection)
  double margin = 0.0;      // tightening margin in use
  double g_bar = 0.0;       // with measured e_1
  double r = 0.0;
  double v = 0.0;
  MonteCarloResult mc;
  std::vector<RunAudit> audits;

  std::size_t contraction_ok = 0, contraction_total = 0;
  std::size_t chain_ok = 0, chain_total = 0;
  std::size_t drift_ok = 0, drift_total = 0;
  double max_drift = 0.0;
  std::size_t sums_ok = 0;             // runs passing both error-sum bounds
  std::size_t regret_ok = 0;           // runs passing both regret bounds of the active variant
  std::size_t asymptotic_ok = 0, asymptotic_total = 0;  // mean curves below the limits, t >= burn_in
  std::size_t ebar_below = 0;          // mean e-bar_t < mean e_t, t >= burn_in
  double feasible_rate = 0.0;          // x_t in the untightened set, t >= burn_in
  double mean_E_T = 0.0, V_T = 0.0, mean_G = 0.0;
  double mean_regret_tracking = 0.0, mean_regret_estimation = 0.0;
  double mean_u_tracking = 0.0, mean_u_estimation = 0.0;
  double tail_e = 0.0, tail_ebar = 0.0, tail_eps = 0.0;
};

namespace detail {

template <DriftingSampler S>
ExperimentResult run_with(const ExperimentConfig& c, const S& sampler) {
  const auto obj = c.objective();
  const auto cs = c.constraints();
  ExperimentResult res;

  ProxSpec prox = ProxSpec::indicator(cs);
  auto truth = build_ground_truth(obj, sampler, prox, c.horizon, c.oracle_samples, c.oracle_seed());

  if (c.variant != ProxVariant::BoxIndicator) {
    double lambda = 0.0;
    if (c.lambda_pen) {
      lambda = *c.lambda_pen;
    } else {
      std::vector<SampleObjective<RidgeRegression>> probes;
      const int n_probe = std::min(c.horizon, c.sampler == SamplerKind::Rotating ? c.period : 10);
      for (int k = 0; k < n_probe; ++k) probes.push_back(truth.steps[static_cast<std::size_t>(k)].model);
      const auto k = obj.constants();
      lambda = choose_penalty_weight(probes, cs, c.lambda_grid, k.lipschitz_x, k.sigma,
                                     Vector::Zero(obj.dim_x()));
    }
    res.lambda_pen = lambda;
    auto in = c.bound_inputs();
    in.lambda_pen = lambda;
    const auto rep = bounds::make_bound_report(in);
    if (c.variant == ProxVariant::AffineHinge) {
      prox = ProxSpec::hinge(cs, lambda);
    } else {
      res.margin = rep.tightening_margin;
      prox = ProxSpec::tightened(cs, lambda, res.margin);
    }
    truth = resolve_ground_truth(std::move(truth), obj, sampler, prox, c.oracle_samples,
                                 c.oracle_seed());
  }

  TrackerConfig tc;
  tc.alpha = c.alpha;
  tc.q = c.q;
  tc.m = c.m;
  tc.horizon = c.horizon;
  tc.prox = prox;
  tc.x0 = c.x0;
  tc.oracle_samples = c.oracle_samples;
  tc.oracle_seed = c.oracle_seed();
  res.mc = monte_carlo(tc, obj, sampler, truth, static_cast<std::size_t>(c.n_runs), c.runs_seed(),
                       c.workers);

  const double e1 = (c.x0 - truth.at(1).x_star).norm();
  auto in = c.bound_inputs(e1);
  in.lambda_pen = res.lambda_pen;
  res.report = bounds::make_bound_report(in, c.gammas);
  res.r = res.report.r;
  res.v = res.report.v;
  res.g_bar = res.report.g_bar;

  const auto T = static_cast<std::size_t>(c.horizon);
  const auto tail_from = std::min<std::size_t>(static_cast<std::size_t>(c.burn_in), T);
  const double n = static_cast<double>(c.n_runs);
  double feasible = 0.0;
  for (const auto& run : res.mc.runs) {
    auto a = audit_run(run, res.r, c.alpha, res.v, res.g_bar);
    res.contraction_ok += a.contraction_ok;
    res.contraction_total += a.steps;
    res.chain_ok += a.chain_ok;
    res.chain_total += a.chain_steps;
    res.drift_ok += a.drift_ok;
    res.drift_total += run.optimizer_drift.size();
    res.max_drift = std::max(res.max_drift, a.max_drift);
    if (a.sum_tracking_ok && a.sum_estimation_ok) ++res.sums_ok;
    const bool regret = c.variant == ProxVariant::BoxIndicator
                            ? a.regret_tracking_ok && a.regret_estimation_ok
                            : a.penalty_regret_tracking_ok && a.penalty_regret_estimation_ok;
    if (regret) ++res.regret_ok;
    res.mean_E_T += run.E_T / n;
    res.V_T = run.V_T;
    res.mean_G += run.G / n;
    const bool box = c.variant == ProxVariant::BoxIndicator;
    res.mean_regret_tracking += (box ? run.regret_tracking : run.phi_regret_tracking) / n;
    res.mean_regret_estimation += (box ? run.regret_estimation : run.phi_regret_estimation) / n;
    const auto& b = box ? a.regret_bounds : a.penalty_regret_bounds;
    res.mean_u_tracking += b.u_tracking / n;
    res.mean_u_estimation += b.u_estimation / n;
    for (std::size_t k = tail_from - 1; k < T; ++k) feasible += run.feasible[k];
    res.audits.push_back(std::move(a));
  }
  const double tail_len = static_cast<double>(T - tail_from + 1);
  res.feasible_rate = feasible / (n * tail_len);
  for (std::size_t k = tail_from - 1; k < T; ++k) {
    const auto& p = res.mc.per_step[k];
    ++res.asymptotic_total;
    if (p.mean_e <= res.report.asymptotic.tracking && p.mean_ebar <= res.report.asymptotic.estimation)
      ++res.asymptotic_ok;
    if (p.mean_ebar < p.mean_e) ++res.ebar_below;
    res.tail_e += p.mean_e / tail_len;
    res.tail_ebar += p.mean_ebar / tail_len;
    res.tail_eps += p.mean_eps / tail_len;
  }
  return res;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  return std::visit([&](const auto& s) { return detail::run_with(c, s); }, make_sampler(c));
}

inline DriftEstimate run_drift(const ExperimentConfig& c) {
  c.validate();
  return std::visit(
      [&](const auto& s) { return estimate_drift(s, c.drift_horizon, c.drift_samples, c.seed, c.metric); },
      make_sampler(c));
}

// ---------------------------------------------------------------- output

inline std::string provenance(const std::string& command, const ExperimentConfig& c) {
  std::string s = "# wdrift " + command + "\n";
  for (const auto& [k, v] : c.describe()) s += "# " + k + " = " + v + "\n";
  return s;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string bound_report_text(const bounds::BoundReport& r) {
  std::ostringstream s;
  s << "v = " << fmt(r.v) << "\n";
  s << "r = " << fmt(r.r) << "\n";
  s << "alpha_max = 2/L_x = " << fmt(r.alpha_max) << "\n";
  s << "alpha_star = 2/(L_x+sigma) = " << fmt(r.alpha_star) << "\n";
  s << "r_star = " << fmt(r.r_star) << "\n";
  s << "Delta = " << fmt(r.delta) << "\n";
  for (std::size_t i = 0; i < r.gammas.size(); ++i)
    s << "zeta(" << fmt(r.gammas[i]) << ") = " << fmt(r.zetas[i]) << "  radius = " << fmt(r.radii[i])
      << "  confidence = " << fmt(r.confidences[i]) << "\n";
  s << "asymptotic_tracking = " << fmt(r.asymptotic.tracking) << "\n";
  s << "asymptotic_estimation = " << fmt(r.asymptotic.estimation) << "\n";
  s << "g_bar = " << fmt(r.g_bar) << "\n";
  s << "tightening_margin = " << fmt(r.tightening_margin) << "\n";
  s << "feasibility_probability = " << fmt(r.feasibility_probability) << "\n";
  return s.str();
}

inline std::string metrics_csv(const std::string& command, const ExperimentConfig& c,
                               const MonteCarloResult& mc) {
  std::string s = provenance(command, c);
  s += "t,mean_e,se_e,mean_ebar,se_ebar,mean_eps_norm,feas_rate\n";
  for (std::size_t k = 0; k < mc.per_step.size(); ++k) {
    const auto& p = mc.per_step[k];
    s += std::to_string(k + 1) + "," + fmt(p.mean_e) + "," + fmt(p.se_e) + "," + fmt(p.mean_ebar) + "," +
         fmt(p.se_ebar) + "," + fmt(p.mean_eps) + "," + fmt(p.feasible_rate) + "\n";
  }
  return s;
}

inline std::string run_report_text(const ExperimentConfig& c, const ExperimentResult& r) {
  std::ostringstream s;
  auto pass = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  auto ratio = [](std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); };
  const auto n = static_cast<std::size_t>(c.n_runs);
  s << provenance("run", c);
  s << "\n[bounds]\n" << bound_report_text(r.report);
  s << "\n[prox]\n";
  s << "variant = " << to_string(c.variant) << "\n";
  s << "lambda_pen = " << fmt(r.lambda_pen) << "\n";
  s << "margin = " << fmt(r.margin) << "\n";
  s << "regret_definition = " << (c.variant == ProxVariant::BoxIndicator ? "F_t" : "Phi_t = F_t + h")
    << "\n";
  s << "\n[measured]\n";
  s << "V_T = " << fmt(r.V_T) << "\n";
  s << "max_optimizer_drift = " << fmt(r.max_drift) << "\n";
  s << "mean_E_T = " << fmt(r.mean_E_T) << "\n";
  s << "mean_G = " << fmt(r.mean_G) << "\n";
  s << "mean_regret_tracking = " << fmt(r.mean_regret_tracking) << "\n";
  s << "mean_regret_estimation = " << fmt(r.mean_regret_estimation) << "\n";
  s << "mean_U_tracking = " << fmt(r.mean_u_tracking) << "\n";
  s << "mean_U_estimation = " << fmt(r.mean_u_estimation) << "\n";
  s << "tail_mean_e = " << fmt(r.tail_e) << "\n";
  s << "tail_mean_ebar = " << fmt(r.tail_ebar) << "\n";
  s << "tail_mean_eps_norm = " << fmt(r.tail_eps) << "\n";
  s << "feasible_rate_after_burn_in = " << fmt(r.feasible_rate) << "\n";
  s << "\n[checks]\n";
  s << "contraction_per_step " << pass(r.contraction_ok == r.contraction_total) << " "
    << ratio(r.contraction_ok, r.contraction_total) << "\n";
  s << "chain_per_step " << pass(r.chain_ok == r.chain_total) << " " << ratio(r.chain_ok, r.chain_total)
    << "\n";
  s << "optimizer_drift_le_v " << pass(r.drift_ok == r.drift_total) << " "
    << ratio(r.drift_ok, r.drift_total) << "\n";
  s << "error_sums_per_run " << pass(r.sums_ok == n) << " " << ratio(r.sums_ok, n) << "\n";
  s << "regret_bounds_per_run " << pass(r.regret_ok == n) << " " << ratio(r.regret_ok, n) << "\n";
  s << "asymptotic_limits " << pass(r.asymptotic_ok == r.asymptotic_total) << " "
    << ratio(r.asymptotic_ok, r.asymptotic_total) << "\n";
  s << "mean_ebar_below_mean_e " << ratio(r.ebar_below, r.asymptotic_total) << "\n";
  if (c.variant == ProxVariant::TightenedHinge)
    s << "feasibility_ge_1_minus_1_over_theta "
      << pass(r.feasible_rate >= r.report.feasibility_probability) << " " << fmt(r.feasible_rate) << "\n";

  s << "\n[per_step]\n";
  s << "t,contraction_ok_runs,chain_ok_runs,mean_e_le_limit,mean_ebar_le_limit\n";
  const auto T = static_cast<std::size_t>(c.horizon);
  for (std::size_t k = 0; k < T; ++k) {
    std::size_t contraction = 0, chain = 0;
    for (const auto& run : r.mc.runs) {
      const double tol = 3.0 * run.oracle_se[k] + 1e-9;
      if (run.e_bar[k] <= r.r * run.e[k] + c.alpha * run.eps_norm[k] + tol) ++contraction;
      if (k + 1 < T &&
          run.e[k + 1] <= r.r * run.e[k] + c.alpha * run.eps_norm[k] + run.optimizer_drift[k] + tol)
        ++chain;
    }
    const auto& p = r.mc.per_step[k];
    s << k + 1 << "," << contraction << "," << (k + 1 < T ? std::to_string(chain) : std::string("-"))
      << "," << (p.mean_e <= r.report.asymptotic.tracking ? 1 : 0) << ","
      << (p.mean_ebar <= r.report.asymptotic.estimation ? 1 : 0) << "\n";
  }
  return s.str();
}

// ---------------------------------------------------------------- commands

inline ExperimentResult cmd_run(const ExperimentConfig& c, std::ostream& log) {
  auto res = run_experiment(c);
  const std::filesystem::path dir = c.output_dir;
  write_file(dir / "metrics.csv", metrics_csv("run", c, res.mc));
  write_file(dir / "report.txt", run_report_text(c, res));
  log << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "report.txt").string() << "\n";
  return res;
}

inline DriftEstimate cmd_estimate_drift(const ExperimentConfig& c, std::ostream& out) {
  const auto est = run_drift(c);
  std::string csv = provenance("estimate-drift", c) + "t,wasserstein\n";
  for (std::size_t k = 0; k < est.per_step.size(); ++k) {
    csv += std::to_string(k + 1) + "," + fmt(est.per_step[k]) + "\n";
    out << "W(t=" << k + 1 << ",t=" << k + 2 << ") = " << fmt(est.per_step[k]) << "\n";
  }
  out << "rho_hat = " << fmt(est.rho) << "\n";
  write_file(std::filesystem::path(c.output_dir) / "drift.csv", csv);
  return est;
}

inline bounds::BoundReport cmd_bounds(const ExperimentConfig& c, std::ostream& out) {
  c.validate();
  const auto rep = bounds::make_bound_report(c.bound_inputs(), c.gammas);
  std::string text = provenance("bounds", c) + bound_report_text(rep);
  out << bound_report_text(rep);
  write_file(std::filesystem::path(c.output_dir) / "bounds.txt", text);
  return rep;
}

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"alpha", "m", "q", "theta", "lambda_pen"};
  return names;
}

/// Config with `parameter` set to `value`; hold_total > 0 keeps m q fixed.
inline ExperimentConfig with_parameter(ExperimentConfig c, const std::string& parameter, double value) {
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1)
      throw ConfigError("sweep.grid", std::string(what) + " values must be positive integers");
    return static_cast<int>(value);
  };
  if (parameter == "alpha") {
    c.alpha = value;
  } else if (parameter == "m") {
    c.m = as_int("m");
    if (c.hold_total > 0) {
      if (c.hold_total % c.m) throw ConfigError("sweep.grid", "m must divide sweep.hold_total");
      c.q = c.hold_total / c.m;
    }
  } else if (parameter == "q") {
    c.q = as_int("q");
    if (c.hold_total > 0) {
      if (c.hold_total % c.q) throw ConfigError("sweep.grid", "q must divide sweep.hold_total");
      c.m = c.hold_total / c.q;
    }
  } else if (parameter == "theta") {
    c.theta = value;
  } else if (parameter == "lambda_pen") {
    c.lambda_pen = value;
  } else {
    throw ConfigError("sweep.parameter", "expected one of alpha, m, q, theta, lambda_pen");
  }
  return c;
}

struct SweepRow {
  double value = 0.0;
  ExperimentConfig config;
  ExperimentResult result;
};

inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& c, std::ostream& log) {
  if (c.sweep_parameter.empty()) throw ConfigError("sweep.parameter", "missing (use --param)");
  if (std::find(sweep_parameters().begin(), sweep_parameters().end(), c.sweep_parameter) ==
      sweep_parameters().end())
    throw ConfigError("sweep.parameter", "expected one of alpha, m, q, theta, lambda_pen");
  if (c.sweep_grid.empty()) throw ConfigError("sweep.grid", "missing (use --grid)");
  std::vector<ExperimentConfig> configs;
  for (double value : c.sweep_grid) {
    configs.push_back(with_parameter(c, c.sweep_parameter, value));
    configs.back().validate();
  }

  std::vector<SweepRow> rows;
  std::string csv = provenance("sweep", c);
  csv +=
      "value,alpha,m,q,theta,lambda_pen,r,tail_mean_e,tail_mean_ebar,tail_mean_eps_norm,"
      "mean_regret_tracking,mean_regret_estimation,mean_U_tracking,mean_U_estimation,"
      "asymptotic_tracking,asymptotic_estimation,feas_rate\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cc = configs[i];
    auto res = run_experiment(cc);
    csv += fmt(c.sweep_grid[i]) + "," + fmt(cc.alpha) + "," + std::to_string(cc.m) + "," +
           std::to_string(cc.q) + "," + fmt(cc.theta) + "," + fmt(res.lambda_pen) + "," + fmt(res.r) +
           "," + fmt(res.tail_e) + "," + fmt(res.tail_ebar) + "," + fmt(res.tail_eps) + "," +
           fmt(res.mean_regret_tracking) + "," + fmt(res.mean_regret_estimation) + "," +
           fmt(res.mean_u_tracking) + "," + fmt(res.mean_u_estimation) + "," +
           fmt(res.report.asymptotic.tracking) + "," + fmt(res.report.asymptotic.estimation) + "," +
           fmt(res.feasible_rate) + "\n";
    log << c.sweep_parameter << " = " << fmt(c.sweep_grid[i]) << " done\n";
    rows.push_back({c.sweep_grid[i], cc, std::move(res)});
  }
  write_file(std::filesystem::path(c.output_dir) / "sweep.csv", csv);
  return rows;
}

}  // namespace wdrift::experiment
