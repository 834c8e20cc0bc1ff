// Experiment driver: maps subcommands onto the library and writes
// results.csv + report.json + manifest.json into the output directory.
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "kramers/gaussian.hpp"
#include "kramers/metastability.hpp"
#include "kramers/reporting.hpp"
#include "kramers/samplers.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace kramers;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

double need_number(const ordered_json& obj, const std::string& key,
                   const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return obj[key].get<double>();
}

double opt_number(const ordered_json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? obj[key].get<double>() : fallback;
}

Matrix parse_matrix(const ordered_json& spec, const std::string& where) {
  require_keys(spec, {"rows", "cols", "data"}, where);
  const int rows = static_cast<int>(need_number(spec, "rows", where));
  const int cols = static_cast<int>(need_number(spec, "cols", where));
  if (!spec.contains("data") || !spec["data"].is_array() ||
      static_cast<int>(spec["data"].size()) != rows * cols) {
    throw ConfigError(where + ": 'data' must hold rows*cols row-major entries");
  }
  Matrix m(rows, cols);
  int idx = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = spec["data"][idx++].get<double>();
  }
  return m;
}

Vector parse_vector(const ordered_json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": expected an array");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

std::shared_ptr<QuadraticObjective> parse_quadratic(const ordered_json& spec) {
  require_keys(spec, {"name", "h", "b1", "c1"}, "objective");
  const Matrix h = parse_matrix(spec.at("h"), "objective.h");
  Vector b1 = Vector::Zero(h.rows());
  if (spec.contains("b1")) b1 = parse_vector(spec["b1"], "objective.b1");
  return quadratic(h, b1, opt_number(spec, "c1", 0.0));
}

std::shared_ptr<DoubleWellObjective> parse_double_well(const ordered_json& spec) {
  require_keys(spec, {"name", "dim", "c", "omega", "tilt", "working_radius"},
               "objective");
  const int dim = static_cast<int>(need_number(spec, "dim", "objective"));
  Vector omega(std::max(0, dim - 1));
  if (spec.contains("omega")) {
    omega = parse_vector(spec["omega"], "objective.omega");
  } else if (dim > 1) {
    throw ConfigError("objective: 'omega' required for dim > 1");
  }
  auto [obj, land] =
      double_well(dim, need_number(spec, "c", "objective"), omega,
                  opt_number(spec, "tilt", 0.0),
                  opt_number(spec, "working_radius", 5.0));
  return obj;
}

std::string objective_name(const ordered_json& spec) {
  if (!spec.is_object() || !spec.contains("name")) {
    throw ConfigError("objective: missing 'name'");
  }
  return spec["name"].get<std::string>();
}

DynamicsSpec parse_dynamics(const ordered_json& spec, const Matrix& h_for_search,
                            std::uint64_t seed) {
  require_keys(spec, {"kind", "gamma", "j", "search_iters"}, "dynamics");
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "ld") return DynamicsSpec::ld();
  if (kind == "uld") return DynamicsSpec::uld(need_number(spec, "gamma", "dynamics"));
  if (kind == "nld") {
    if (spec.contains("j")) {
      return DynamicsSpec::nld(parse_matrix(spec["j"], "dynamics.j"));
    }
    if (spec.contains("search_iters")) {
      if (h_for_search.size() == 0) {
        throw ConfigError("dynamics: J search needs a quadratic objective");
      }
      auto [j, rate] = search_j(
          h_for_search, static_cast<int>(spec["search_iters"].get<double>()),
          seed);
      return DynamicsSpec::nld(j);
    }
    throw ConfigError("dynamics: nld requires 'j' or 'search_iters'");
  }
  throw ConfigError("dynamics: unknown kind '" + kind + "'");
}

ordered_json matrix_echo(const Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto data = ordered_json::array();
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

ProblemParams parse_params(const ordered_json& spec) {
  require_keys(spec,
               {"m", "M", "L", "A", "B", "C", "b", "d", "r", "eps", "delta",
                "T", "gamma", "v0_norm", "eta", "beta", "c_H", "c_J", "m_J",
                "norm_J"},
               "params");
  ProblemParams p;
  p.m = need_number(spec, "m", "params");
  p.M = need_number(spec, "M", "params");
  p.L = opt_number(spec, "L", 0.0);
  p.A = opt_number(spec, "A", 0.0);
  p.B = opt_number(spec, "B", 0.0);
  p.C = opt_number(spec, "C", 0.0);
  p.b = opt_number(spec, "b", 0.0);
  p.d = static_cast<int>(opt_number(spec, "d", 1));
  p.r = opt_number(spec, "r", 1.0);
  p.eps = need_number(spec, "eps", "params");
  p.delta = opt_number(spec, "delta", 0.1);
  p.T = opt_number(spec, "T", 1.0);
  p.gamma = opt_number(spec, "gamma", 2.0 * std::sqrt(p.m));
  p.v0_norm = opt_number(spec, "v0_norm", 0.0);
  p.eta = opt_number(spec, "eta", 1e-4);
  p.beta = opt_number(spec, "beta", 1.0);
  p.c_H = opt_number(spec, "c_H", 0.0);
  p.c_J = opt_number(spec, "c_J", 1.0);
  p.m_J = opt_number(spec, "m_J", p.m);
  p.norm_J = opt_number(spec, "norm_J", 0.0);
  return p;
}

RecurrenceMode parse_mode(const ordered_json& cfg) {
  const std::string mode = cfg.contains("mode")
                               ? cfg["mode"].get<std::string>()
                               : "uld-critical";
  if (mode == "uld-critical") return RecurrenceMode::UldCritical;
  if (mode == "uld-small-friction") return RecurrenceMode::UldSmallFriction;
  if (mode == "nld") return RecurrenceMode::Nld;
  throw ConfigError("mode: expected uld-critical | uld-small-friction | nld");
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

struct Outputs {
  Table results;
  ordered_json report;
  std::vector<std::pair<std::string, Table>> extra_csv;
};

Outputs run_mixing(const ordered_json& cfg, std::uint64_t seed) {
  require_keys(cfg,
               {"objective", "dynamics", "beta", "x0", "v0", "t_max",
                "n_points", "gamma_sweep", "seed", "threads"},
               "config");
  auto q = parse_quadratic(cfg.at("objective"));
  const double beta = need_number(cfg, "beta", "config");
  const Vector x0 = parse_vector(cfg.at("x0"), "x0");
  Vector v0 = Vector::Zero(q->dim());
  if (cfg.contains("v0")) v0 = parse_vector(cfg["v0"], "v0");
  const int n_points = static_cast<int>(opt_number(cfg, "n_points", 400));

  Outputs out;
  out.report = ordered_json::object();
  if (cfg.contains("gamma_sweep")) {
    // shared horizon anchored at the critical rate sqrt(m)
    const double t_max =
        opt_number(cfg, "t_max", 14.0 / std::sqrt(q->eig_min()));
    const auto grid = linspace(0.0, t_max, n_points);
    out.results.header = {"gamma", "fitted_rate", "poly_degree", "residual"};
    double best_rate = -1.0, best_gamma = 0.0;
    for (const auto& gj : cfg["gamma_sweep"]) {
      const double gamma = gj.get<double>();
      const MixingCurve c =
          mixing_curve(DynamicsSpec::uld(gamma), *q, beta, x0, v0, grid);
      out.results.rows.push_back({gamma, c.fit.rate,
                                  static_cast<std::int64_t>(c.fit.poly_degree),
                                  c.fit.residual});
      if (c.fit.rate > best_rate) {
        best_rate = c.fit.rate;
        best_gamma = gamma;
      }
    }
    out.report["sweep"] = {{"argmax_gamma", best_gamma},
                           {"argmax_rate", best_rate},
                           {"t_max", t_max},
                           {"n_points", n_points}};
    return out;
  }

  const DynamicsSpec dyn = parse_dynamics(cfg.at("dynamics"), q->h(), seed);
  double rate_hint = q->eig_min();
  if (dyn.kind == DynamicsKind::ULD) {
    rate_hint = uld_spectral(q->h(), dyn.gamma, 0).rate;
  } else if (dyn.kind == DynamicsKind::NLD) {
    rate_hint = lambda1_j(q->h(), dyn.j).lambda1J;
  }
  const double t_max = opt_number(cfg, "t_max", 14.0 / rate_hint);
  const MixingCurve c =
      mixing_curve(dyn, *q, beta, x0, v0, linspace(0.0, t_max, n_points));
  out.results.header = {"t", "w2", "bound", "fitted_model"};
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    const double model =
        std::exp(c.fit.log_prefactor +
                 c.fit.poly_degree * std::log1p(c.times[i]) -
                 c.fit.rate * c.times[i]);
    out.results.rows.push_back({c.times[i], c.w2[i], c.bound[i], model});
  }
  out.report["fit"] = {{"rate", c.fit.rate},
                       {"log_prefactor", c.fit.log_prefactor},
                       {"poly_degree", c.fit.poly_degree},
                       {"residual", c.fit.residual}};
  out.report["init_bound"] = c.init_bound;
  out.report["w2_initial"] = c.w2_initial;
  if (dyn.kind == DynamicsKind::NLD) out.report["j"] = matrix_echo(dyn.j);
  return out;
}

Outputs run_spectral(const ordered_json& cfg, std::uint64_t seed) {
  require_keys(cfg, {"h", "gamma", "j", "eps_tilde", "seed", "threads"},
               "config");
  const Matrix h = parse_matrix(cfg.at("h"), "h");
  Outputs out;
  out.results.header = {"t", "norm_exp", "bound"};
  out.report = ordered_json::object();
  (void)seed;
  if (cfg.contains("gamma")) {
    const double gamma = cfg["gamma"].get<double>();
    const UnderdampedSpectral s = uld_spectral(h, gamma, 200);
    const char* regime = s.regime == FrictionRegime::SubCritical ? "sub-critical"
                         : s.regime == FrictionRegime::Critical  ? "critical"
                                                                 : "super-critical";
    out.report["underdamped"] = {
        {"gamma", gamma},
        {"m", s.m},
        {"M", s.M},
        {"regime", regime},
        {"rate", s.rate},
        {"C_H", s.C_H},
        {"C_eps_hat", s.C_eps_hat ? ordered_json(*s.C_eps_hat) : ordered_json()},
        {"eps_hat", s.eps_hat ? ordered_json(*s.eps_hat) : ordered_json()},
        {"lemma_constants_apply", s.lemma_constants_apply},
        {"envelope_checked", s.envelope_checked},
        {"envelope_max_ratio", s.envelope_max_ratio}};
    const Matrix hg = build_h_gamma(h, gamma);
    for (int i = 0; i <= 100; ++i) {
      const double t = 20.0 / s.rate * i / 100.0;
      out.results.rows.push_back(
          {t, spectral_norm(matrix_exp(-t * hg)),
           s.lemma_constants_apply ? s.bound(t)
                                   : std::numeric_limits<double>::quiet_NaN()});
    }
  }
  if (cfg.contains("j")) {
    const Matrix j = parse_matrix(cfg["j"], "j");
    const NonreversibleSpectral s =
        lambda1_j(h, j, opt_number(cfg, "eps_tilde", 0.0));
    out.report["nonreversible"] = {{"lambda1J", s.lambda1J},
                                   {"n1", s.n1},
                                   {"CJ", s.CJ},
                                   {"eps_tilde", s.eps_tilde},
                                   {"m_J", s.m_J()},
                                   {"c1_holds", s.c1_holds}};
    const OptimalRate opt = optimal_rate(h);
    out.report["optimal"] = {{"lambda1_opt", opt.lambda1},
                             {"speedup_bound", opt.speedup}};
    const Matrix a = (Matrix::Identity(h.rows(), h.cols()) + j) * h;
    for (int i = 0; i <= 100; ++i) {
      const double t = 20.0 / s.lambda1J * i / 100.0;
      out.results.rows.push_back({t, spectral_norm(matrix_exp(-t * a)), s.bound(t)});
    }
  }
  if (out.results.rows.empty()) {
    throw ConfigError("spectral: provide 'gamma' and/or 'j'");
  }
  return out;
}

void push_named(Table& t, const char* name, double v) {
  t.rows.push_back({std::string(name), v});
}

Outputs run_constants(const ordered_json& cfg, std::uint64_t) {
  require_keys(cfg, {"params", "mode", "h", "j", "seed", "threads"}, "config");
  ProblemParams p = parse_params(cfg.at("params"));
  const RecurrenceMode mode = parse_mode(cfg);
  if (cfg.contains("h")) {
    const Matrix h = parse_matrix(cfg["h"], "h");
    const UnderdampedSpectral s = uld_spectral(h, p.gamma, 0);
    p.c_H = s.C_H;
    p.m = s.m;
    p.M = s.M;
    if (cfg.contains("j")) {
      const NonreversibleSpectral ns = lambda1_j(h, parse_matrix(cfg["j"], "j"));
      p.c_J = ns.CJ;
      p.m_J = ns.m_J();
      p.norm_J = spectral_norm(parse_matrix(cfg["j"], "j"));
    }
  }
  Outputs out;
  out.results.header = {"name", "value"};
  out.report = ordered_json::object();
  if (mode == RecurrenceMode::Nld) {
    const NldConstantsTable t = constants_table_nld(p);
    push_named(out.results, "eps1_J", t.eps1);
    push_named(out.results, "eps2_J", t.eps2);
    push_named(out.results, "eps_bar_J", t.eps_bar);
    push_named(out.results, "eta1_J", t.eta1);
    push_named(out.results, "eta2_J", t.eta2);
    push_named(out.results, "eta3_J", t.eta3);
    push_named(out.results, "eta4_J", t.eta4);
    push_named(out.results, "eta_bar_J", t.eta_bar);
    push_named(out.results, "beta1_J", t.beta1);
    push_named(out.results, "beta2_J", t.beta2);
    push_named(out.results, "beta_bar_J", t.beta_bar);
    push_named(out.results, "C_c", t.C_c);
    push_named(out.results, "C_d", t.C_d);
    push_named(out.results, "C_1", t.C_1);
    push_named(out.results, "T_rec_J", t.T_rec);
    push_named(out.results, "T_esc_J", t.T_esc);
  } else {
    const UldConstantsTable t = constants_table_uld(p, mode);
    push_named(out.results, "eps1_U", t.eps1);
    push_named(out.results, "eps2_U", t.eps2);
    push_named(out.results, "eps3_U", t.eps3);
    push_named(out.results, "eps_bar_U", t.eps_bar);
    push_named(out.results, "eta1_U", t.eta1);
    push_named(out.results, "eta2_U", t.eta2);
    push_named(out.results, "eta3_U", t.eta3);
    push_named(out.results, "eta4_U", t.eta4);
    push_named(out.results, "eta_bar_U", t.eta_bar);
    push_named(out.results, "beta1_U", t.beta1);
    push_named(out.results, "beta2_U", t.beta2);
    push_named(out.results, "beta_bar_U", t.beta_bar);
    push_named(out.results, "Cx_c", t.Cx_c);
    push_named(out.results, "Cv_c", t.Cv_c);
    push_named(out.results, "K1", t.K1);
    push_named(out.results, "K2", t.K2);
    push_named(out.results, "Cx_d", t.Cx_d);
    push_named(out.results, "Cv_d", t.Cv_d);
    push_named(out.results, "lambda", t.lambda);
    push_named(out.results, "A_bar", t.A_bar);
    push_named(out.results, "T_rec_U", t.T_rec);
    push_named(out.results, "T_esc_U", t.T_esc);
  }
  for (const auto& row : out.results.rows) {
    out.report["table"][std::get<std::string>(row[0])] = std::get<double>(row[1]);
  }
  return out;
}

Outputs run_recurrence(const ordered_json& cfg, std::uint64_t) {
  require_keys(cfg, {"params", "mode", "h", "j", "seed", "threads"}, "config");
  ProblemParams p = parse_params(cfg.at("params"));
  const RecurrenceMode mode = parse_mode(cfg);
  if (cfg.contains("h")) {
    const Matrix h = parse_matrix(cfg["h"], "h");
    const UnderdampedSpectral s = uld_spectral(h, p.gamma, 0);
    p.c_H = s.C_H;
    p.m = s.m;
    p.M = s.M;
  }
  const double t_rec = recurrence_time(p, mode);
  const AdmissibilityReport adm = admissibility(p, p.eta, p.beta, mode);
  Outputs out;
  out.results.header = {"name", "value"};
  push_named(out.results, "T_rec", t_rec);
  push_named(out.results, "T_esc", t_rec + p.T);
  out.report["T_rec"] = t_rec;
  out.report["T_esc"] = t_rec + p.T;
  out.report["admissible"] = adm.pass;
  auto checks = ordered_json::array();
  for (const auto& e : adm.eta_checks) {
    checks.push_back({{"name", e.name}, {"limit", e.limit}, {"value", e.value},
                      {"pass", e.pass}});
  }
  for (const auto& e : adm.beta_checks) {
    checks.push_back({{"name", e.name}, {"limit", e.limit}, {"value", e.value},
                      {"pass", e.pass}});
  }
  out.report["checks"] = checks;
  auto [eta_rec, beta_rec] = recommend_eta_beta(p, mode);
  out.report["recommended"] = {{"eta", eta_rec}, {"beta", beta_rec}};
  return out;
}

Outputs run_classify(const ordered_json& cfg, std::uint64_t seed) {
  require_keys(cfg,
               {"objective", "params", "mode", "n_seeds", "start_distance",
                "use_recommended", "trajectory_stride", "seed", "threads"},
               "config");
  auto q = parse_quadratic(cfg.at("objective"));
  ProblemParams p = parse_params(cfg.at("params"));
  const RecurrenceMode mode = parse_mode(cfg);
  {
    const UnderdampedSpectral s = uld_spectral(q->h(), p.gamma, 0);
    p.c_H = s.C_H;
  }
  if (opt_number(cfg, "use_recommended", 1.0) != 0.0) {
    auto [eta_rec, beta_rec] = recommend_eta_beta(p, mode);
    p.eta = eta_rec;
    p.beta = beta_rec;
  }
  const int n_seeds = static_cast<int>(opt_number(cfg, "n_seeds", 200));
  const double start_distance = opt_number(cfg, "start_distance", p.r);
  const double t_esc = recurrence_time(p, mode) + p.T;

  SamplerConfig base;
  base.algorithm = Algorithm::ULD;
  base.gamma = p.gamma;
  base.eta = p.eta;
  base.beta = p.beta;
  base.record_stride = 1;
  base.max_steps = static_cast<std::int64_t>(t_esc / p.eta) + 2;

  Outputs out;
  out.results.header = {"seed", "event", "first_violation_step"};
  const auto traj_stride =
      static_cast<std::int64_t>(opt_number(cfg, "trajectory_stride", 0));
  int n1 = 0, n2 = 0, nn = 0;
  for (int s = 0; s < n_seeds; ++s) {
    SamplerConfig cfg_s = base;
    cfg_s.seed = seed + s;
    Vector start = Vector::Zero(q->dim());
    start(0) = start_distance;
    start += q->minimizer();
    const Trajectory traj = simulate(*q, start, cfg_s);
    if (s == 0 && traj_stride > 0) {
      Trajectory thin;
      thin.config = traj.config;
      for (std::size_t k = 0; k < traj.positions.size(); k += traj_stride) {
        thin.positions.push_back(traj.positions[k]);
        thin.velocities.push_back(traj.velocities[k]);
        thin.step_indices.push_back(traj.step_indices[k]);
      }
      out.extra_csv.emplace_back("trajectory.csv", trajectory_table(thin));
    }
    const MetastabilityVerdict v = classify(traj, q->minimizer(), p, mode);
    const char* name = v.event == MetaEvent::Event1   ? "event1"
                       : v.event == MetaEvent::Event2 ? "event2"
                                                      : "neither";
    if (v.event == MetaEvent::Event1) ++n1;
    if (v.event == MetaEvent::Event2) ++n2;
    if (v.event == MetaEvent::Neither) ++nn;
    out.results.rows.push_back(
        {static_cast<std::int64_t>(cfg_s.seed), std::string(name),
         v.first_violation_step ? *v.first_violation_step : std::int64_t(-1)});
  }
  out.report["fractions"] = {{"event1", double(n1) / n_seeds},
                             {"event2", double(n2) / n_seeds},
                             {"neither", double(nn) / n_seeds}};
  out.report["delta"] = p.delta;
  out.report["eta"] = p.eta;
  out.report["beta"] = p.beta;
  out.report["steps_per_seed"] = base.max_steps;
  return out;
}

Outputs run_exit(const ordered_json& cfg, std::uint64_t seed, int threads) {
  require_keys(cfg,
               {"objective", "dynamics", "eta", "beta", "n_paths", "max_steps",
                "neighborhood_radius", "domain_radius", "eta_ladder", "seed",
                "threads"},
               "config");
  auto obj = parse_double_well(cfg.at("objective"));
  const DynamicsSpec dyn = parse_dynamics(cfg.at("dynamics"), Matrix(), seed);
  SamplerConfig base;
  base.eta = need_number(cfg, "eta", "config");
  base.beta = need_number(cfg, "beta", "config");
  base.max_steps = static_cast<std::int64_t>(opt_number(cfg, "max_steps", 5e7));
  base.seed = seed;
  const int n_paths = static_cast<int>(opt_number(cfg, "n_paths", 1000));
  const double nbhd = opt_number(cfg, "neighborhood_radius", 0.2);
  const double dom = opt_number(cfg, "domain_radius", 5.0);

  const ExitExperiment ex =
      exit_experiment(*obj, dyn, base, n_paths, nbhd, dom, threads);
  Outputs out;
  out.results.header = {"path", "exit_steps", "exit_time", "exited_via"};
  for (int pth = 0; pth < n_paths; ++pth) {
    const std::int64_t steps = ex.path_steps[pth];
    const char* via = ex.path_via[pth] == ExitedVia::Target     ? "a2"
                      : ex.path_via[pth] == ExitedVia::Boundary ? "boundary"
                                                                : "timeout";
    out.results.rows.push_back(
        {static_cast<std::int64_t>(pth), steps,
         steps < 0 ? std::numeric_limits<double>::quiet_NaN() : steps * base.eta,
         std::string(via)});
  }
  out.report["mean_exit_time"] = ex.mean_time;
  out.report["mean_exit_steps"] = ex.mean_steps;
  out.report["ci95"] = ex.ci95;
  out.report["eta"] = base.eta;
  out.report["beta"] = base.beta;
  out.report["prediction"] = {{"mean_exit", ex.prediction.mean_exit},
                              {"prefactor", ex.prediction.prefactor},
                              {"barrier_factor", ex.prediction.barrier_factor},
                              {"hessian_factor", ex.prediction.hessian_factor},
                              {"exponent", ex.prediction.exponent},
                              {"asymptotic", ex.prediction.asymptotic},
                              {"general_d_heuristic",
                               ex.prediction.general_d_heuristic}};
  out.report["counts"] = {{"target", ex.n_target},
                          {"boundary", ex.n_boundary},
                          {"timeout", ex.n_timeout}};
  if (ex.ratio_to_reversible) {
    out.report["ratio_to_reversible"] = *ex.ratio_to_reversible;
    out.report["ratio_ci95"] = *ex.ratio_ci95;
  }
  // exit-time histogram for plotting
  std::vector<double> times;
  for (const std::int64_t s : ex.path_steps) {
    if (s >= 0) times.push_back(s * base.eta);
  }
  out.extra_csv.emplace_back("histogram.csv", histogram_table(times, 24));

  if (cfg.contains("eta_ladder")) {
    std::vector<double> ladder;
    for (const auto& e : cfg["eta_ladder"]) ladder.push_back(e.get<double>());
    const RefinementStudy study = stepsize_refinement(
        *obj, dyn, base, ladder, n_paths, nbhd, dom, threads);
    auto rungs = ordered_json::array();
    for (const auto& r : study.rungs) {
      rungs.push_back({{"eta", r.eta}, {"mean_time", r.mean_time},
                       {"stderr", r.stderr_time}});
    }
    out.report["refinement"] = {{"rungs", rungs},
                                {"differences_shrink", study.differences_shrink},
                                {"extrapolated", study.extrapolated},
                                {"extrapolation_gap", study.extrapolation_gap}};
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Langevin dynamics analysis driver"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int threads = 1;
  if (const char* env = std::getenv("KRAMERS_THREADS")) threads = std::atoi(env);

  std::vector<std::string> names = {"mixing",     "spectral", "constants",
                                    "recurrence", "classify", "exit"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_flag, "seed override")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--threads", threads, "worker threads");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  ordered_json cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    cfg = ordered_json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  std::uint64_t seed = seed_given ? seed_flag
                       : cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>()
                                              : 0;
  if (cfg.contains("threads") && threads == 1) {
    threads = cfg["threads"].get<int>();
  }

  const auto t0 = std::chrono::steady_clock::now();
  Outputs out;
  try {
    if (sub == "mixing") out = run_mixing(cfg, seed);
    else if (sub == "spectral") out = run_spectral(cfg, seed);
    else if (sub == "constants") out = run_constants(cfg, seed);
    else if (sub == "recurrence") out = run_recurrence(cfg, seed);
    else if (sub == "classify") out = run_classify(cfg, seed);
    else out = run_exit(cfg, seed, threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error in " << sub << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure in " << sub << ": " << e.what() << "\n";
    return 3;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    fs::create_directories(out_dir);
    const fs::path results_path = fs::path(out_dir) / "results.csv";
    const fs::path report_path = fs::path(out_dir) / "report.json";
    write_csv(results_path, out.results);
    ordered_json report = report_envelope(sub, cfg);
    report["results"] = out.report;
    std::ofstream rep(report_path, std::ios::binary);
    rep << report.dump(2) << "\n";
    rep.close();
    std::vector<fs::path> outputs = {results_path, report_path};
    for (const auto& [name, table] : out.extra_csv) {
      const fs::path p = fs::path(out_dir) / name;
      write_csv(p, table);
      outputs.push_back(p);
    }
    write_manifest(out_dir, cfg, seed, wall, outputs);
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
