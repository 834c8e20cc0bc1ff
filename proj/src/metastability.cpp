#include "kramers/metastability.hpp"

#include <cmath>
#include <stdexcept>

#include "kramers/noise.hpp"

namespace kramers {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sq(double x) { return x * x; }

// sub-critical envelope data; valid only for gamma < 2 sqrt(m)
struct SmallFriction {
  double eps_hat, C_eps, rate;
};

SmallFriction small_friction(const ProblemParams& p) {
  const double crit = 2.0 * std::sqrt(p.m);
  if (!(p.gamma > 0.0 && p.gamma < crit)) {
    throw std::domain_error("small-friction mode requires 0 < gamma < 2 sqrt(m)");
  }
  SmallFriction s;
  s.eps_hat = 1.0 - p.gamma / crit;
  s.C_eps = (1.0 + p.M) / std::sqrt(p.m * (1.0 - sq(1.0 - s.eps_hat)));
  s.rate = std::sqrt(p.m) * (1.0 - s.eps_hat);
  return s;
}

double lambda_of(const ProblemParams& p) {
  return std::min(1.0 / 8.0, p.m / (2.0 * p.M + sq(p.gamma)));
}

double a_bar_of(const ProblemParams& p) {
  const double denom = 2.0 * p.M + sq(p.gamma);
  return p.beta * p.m / denom *
         (sq(p.B) / denom + p.b / p.m * (p.M + sq(p.gamma) / 2.0) + p.A);
}

// shared numerator of the four L^2-bound constants; extra = 1 for the
// continuous-time pair, 4 for the discrete-time pair
double l2_numerator(const ProblemParams& p, double lambda, double a_bar,
                    double extra) {
  const double R = p.R();
  return (p.beta * p.M / 2.0 + p.beta * sq(p.gamma) * (2.0 - lambda) / 4.0) *
             sq(R) +
         p.beta * p.B * R + p.beta * p.A +
         0.75 * p.beta * sq(p.v0_norm) + extra * (p.d + a_bar) / lambda;
}

double uld_eps_bound(const ProblemParams& p, int which) {
  const double ch = p.c_H;
  const double m1 = sq(p.m + 1.0);
  switch (which) {
    case 1:
      return std::sqrt((ch + 2.0 + m1) / ((ch + 2.0) * p.m + m1)) * p.r;
    case 2:
      return 2.0 * std::sqrt(2.0) * std::pow(ch + 2.0 + m1, 0.25) *
             std::exp(-0.5) * p.r / std::pow(p.m, 0.25);
    default: {
      if (p.L == 0.0) return std::numeric_limits<double>::infinity();
      const double term = std::sqrt(ch + 2.0) + (p.m + 1.0) / std::sqrt(p.m) +
                          (std::sqrt((ch + 2.0) * p.m) + (p.m + 1.0)) /
                              (8.0 * std::sqrt(ch + 2.0 + m1));
      return std::sqrt(p.m) / (4.0 * p.L * term);
    }
  }
}

}  // namespace

namespace {

// recurrence horizon without the eps admissibility gate; the public
// operation checks the gate, the constants table stays total
double recurrence_time_ungated(const ProblemParams& p, RecurrenceMode mode) {
  switch (mode) {
    case RecurrenceMode::UldCritical: {
      const double root = std::sqrt(p.c_H + 2.0 + sq(p.m + 1.0));
      const double rhs = sq(p.eps) / (8.0 * sq(p.r) * root);
      const double arg = -rhs * std::sqrt(p.m);
      if (!(arg >= -std::exp(-1.0) && arg < 0.0)) {
        throw std::domain_error("recurrence_time: Lambert argument out of branch domain");
      }
      const double t = -lambert_w_minus1(arg) / std::sqrt(p.m);
      const double resid = std::abs(t * std::exp(-std::sqrt(p.m) * t) - rhs);
      if (!(resid <= 1e-10 * rhs) || !(t >= 1.0 / std::sqrt(p.m))) {
        throw std::runtime_error("recurrence_time: Lambert identity check failed");
      }
      return t;
    }
    case RecurrenceMode::UldSmallFriction: {
      const SmallFriction s = small_friction(p);
      return 2.0 / s.rate * std::log(8.0 * p.r * s.C_eps / p.eps);
    }
    case RecurrenceMode::Nld:
      return 2.0 / p.m_J * std::log(8.0 * p.r / (p.c_J * p.eps));
  }
  throw std::logic_error("recurrence_time: unknown mode");
}

}  // namespace

double recurrence_time(const ProblemParams& p, RecurrenceMode mode) {
  switch (mode) {
    case RecurrenceMode::UldCritical: {
      for (int which = 1; which <= 3; ++which) {
        const double bound = uld_eps_bound(p, which);
        if (!(p.eps < bound)) {
          throw std::runtime_error(
              "recurrence_time: eps >= eps_bar_" + std::to_string(which) +
              "^U = " + std::to_string(bound));
        }
      }
      break;
    }
    case RecurrenceMode::UldSmallFriction: {
      const SmallFriction s = small_friction(p);
      const double eps1 =
          p.L == 0.0 ? std::numeric_limits<double>::infinity()
                     : s.rate / (4.0 * s.C_eps * p.L *
                                 (1.0 + 1.0 / (64.0 * sq(s.C_eps))));
      const double eps2 = 8.0 * p.r * s.C_eps;
      if (!(p.eps < std::min(eps1, eps2))) {
        throw std::runtime_error("recurrence_time: eps >= small-friction eps_bar");
      }
      break;
    }
    case RecurrenceMode::Nld: {
      const double eps1 = p.L == 0.0
                              ? std::numeric_limits<double>::infinity()
                              : p.m_J / (4.0 * p.c_J * (1.0 + p.norm_J) * p.L *
                                         (1.0 + 1.0 / (64.0 * sq(p.c_J))));
      const double eps2 = 8.0 * p.r * p.c_J;
      if (!(p.eps < eps1)) {
        throw std::runtime_error("recurrence_time: eps >= eps_bar_1^J = " +
                                 std::to_string(eps1));
      }
      if (!(p.eps < eps2)) {
        throw std::runtime_error("recurrence_time: eps >= eps_bar_2^J = " +
                                 std::to_string(eps2));
      }
      break;
    }
  }
  return recurrence_time_ungated(p, mode);
}

UldConstantsTable constants_table_uld(const ProblemParams& p,
                                      RecurrenceMode mode) {
  if (mode == RecurrenceMode::Nld) {
    throw std::domain_error("constants_table_uld: ULD modes only");
  }
  UldConstantsTable t;
  t.lambda = lambda_of(p);
  t.A_bar = a_bar_of(p);
  t.eps1 = uld_eps_bound(p, 1);
  t.eps2 = uld_eps_bound(p, 2);
  t.eps3 = uld_eps_bound(p, 3);
  t.eps_bar = std::min({t.eps1, t.eps2, t.eps3});
  t.T_rec = recurrence_time_ungated(p, mode);
  t.T_esc = t.T_rec + p.T;

  const double num_c = l2_numerator(p, t.lambda, t.A_bar, 1.0);
  const double num_d = l2_numerator(p, t.lambda, t.A_bar, 4.0);
  t.Cx_c = num_c / ((1.0 - 2.0 * t.lambda) * p.beta * sq(p.gamma) / 8.0);
  t.Cv_c = num_c / (p.beta * (1.0 - 2.0 * t.lambda) / 4.0);
  t.Cx_d = num_d / ((1.0 - 2.0 * t.lambda) * p.beta * sq(p.gamma) / 8.0);
  t.Cv_d = num_d / (p.beta * (1.0 - 2.0 * t.lambda) / 4.0);
  t.K1 = std::max(
      32.0 * sq(p.M) * (0.5 + p.gamma) / ((1.0 - 2.0 * t.lambda) * p.beta * sq(p.gamma)),
      8.0 * (p.M / 2.0 + sq(p.gamma) / 4.0 - sq(p.gamma) * t.lambda / 4.0 + p.gamma) /
          (p.beta * (1.0 - 2.0 * t.lambda)));
  t.K2 = 2.0 * sq(p.B) * (0.5 + p.gamma);

  const double egm = std::exp(-(1.0 + p.gamma + p.M));
  t.eta1 = p.B == 0.0 ? std::numeric_limits<double>::infinity()
                      : p.eps * egm / (8.0 * p.B);
  t.eta2 = p.delta * sq(p.eps) * sq(egm) /
           (384.0 * (sq(p.M) * t.Cx_c + sq(1.0 + p.gamma) * t.Cv_c) * t.T_rec);
  t.eta3 = 4.0 * p.gamma * sq(p.delta) / (9.0 * p.beta * sq(p.M) * t.Cv_d * t.T_esc);
  t.eta4 = std::min(t.K2 == 0.0 ? std::numeric_limits<double>::infinity()
                                : p.gamma / t.K2 * (p.d / p.beta + t.A_bar / p.beta),
                    p.gamma * t.lambda / (2.0 * t.K1));
  t.eta_bar = std::min({1.0, t.eta1, t.eta2, t.eta3, t.eta4});

  if (mode == RecurrenceMode::UldCritical) {
    t.beta1 = 256.0 * (2.0 * p.c_H * p.m + 4.0 * p.m + sq(p.m + 1.0)) /
              (p.m * sq(p.eps)) *
              (p.d * std::log(2.0) +
               std::log((6.0 * std::sqrt(4.0 * p.m + sq(p.M) + 1.0) * p.T + 3.0) /
                        p.delta));
  } else {
    const SmallFriction s = small_friction(p);
    t.beta1 = 128.0 * p.gamma * sq(s.C_eps) / (s.rate * sq(p.eps)) *
              (p.d * std::log(2.0) +
               std::log((6.0 * std::sqrt(sq(p.gamma) + sq(p.M) + 1.0) * p.T + 3.0) /
                        p.delta));
  }
  t.beta2 = 512.0 * p.d * p.eta * p.gamma *
            std::log(std::pow(2.0, 0.25) * std::exp(0.25) * 6.0 * t.T_rec /
                     (p.delta * p.eta)) /
            (sq(p.eps) * std::exp(-2.0 * (1.0 + p.gamma + p.M) * p.eta));
  t.beta_bar = std::max(t.beta1, t.beta2);
  return t;
}

NldConstantsTable constants_table_nld(const ProblemParams& p) {
  NldConstantsTable t;
  t.eps1 = p.L == 0.0 ? std::numeric_limits<double>::infinity()
                      : p.m_J / (4.0 * p.c_J * (1.0 + p.norm_J) * p.L *
                                 (1.0 + 1.0 / (64.0 * sq(p.c_J))));
  t.eps2 = 8.0 * p.r * p.c_J;
  t.eps_bar = std::min(t.eps1, t.eps2);
  t.T_rec = recurrence_time_ungated(p, RecurrenceMode::Nld);
  t.T_esc = t.T_rec + p.T;

  const double R = p.R();
  const double common = (p.M * sq(R) + 2.0 * p.B * R + p.B + 4.0 * p.A) / p.m +
                        p.b / p.m * std::log(3.0);
  t.C_c = common + 2.0 * p.b * (p.M + p.B) / sq(p.m) +
          4.0 * p.M * p.d * (p.M + p.B) / (p.beta * p.m * sq(p.m));
  t.C_d = common + 2.0 * (p.M + p.B) * p.b / sq(p.m) +
          8.0 * (p.M + p.B) * p.M * p.d / (p.beta * p.m * sq(p.m));
  const double one_j = 1.0 + p.norm_J;
  t.C_1 = 6.0 * (p.beta * (sq(one_j) * sq(p.M) * t.C_d + sq(p.B)) + p.d) *
          sq(one_j) * sq(p.M);

  const double ejm = std::exp(-one_j * p.M);
  t.eta1 = p.B == 0.0 ? std::numeric_limits<double>::infinity()
                      : p.eps * ejm / (8.0 * one_j * p.B);
  t.eta2 = p.delta * sq(p.eps) * sq(ejm) /
           (384.0 * sq(one_j) * sq(p.M) * t.C_c * t.T_rec);
  t.eta3 = 2.0 * sq(p.delta) / (9.0 * t.C_1 * t.T_esc);
  t.eta4 = 1.0 / (p.M * sq(one_j));
  t.eta_bar = std::min({1.0, t.eta1, t.eta2, t.eta3, t.eta4});

  t.beta1 = 128.0 * sq(p.c_J) / (p.m_J * sq(p.eps)) *
            (p.d / 2.0 * std::log(2.0) +
             std::log((6.0 * one_j * p.M * p.T + 3.0) / p.delta));
  t.beta2 = 512.0 * p.d * p.eta *
            std::log(std::pow(2.0, 0.25) * std::exp(0.25) * 6.0 * t.T_rec /
                     (p.delta * p.eta)) /
            (sq(p.eps) * std::exp(-2.0 * one_j * p.M * p.eta));
  t.beta_bar = std::max(t.beta1, t.beta2);
  return t;
}

AdmissibilityReport admissibility(const ProblemParams& p, double eta,
                                  double beta, RecurrenceMode mode) {
  ProblemParams q = p;
  q.eta = eta;
  q.beta = beta;
  AdmissibilityReport rep;
  auto add_eta = [&](const std::string& n, double lim) {
    rep.eta_checks.push_back({n, lim, eta, eta <= lim});
  };
  auto add_beta = [&](const std::string& n, double lim) {
    rep.beta_checks.push_back({n, lim, beta, beta >= lim});
  };
  if (mode == RecurrenceMode::Nld) {
    const NldConstantsTable t = constants_table_nld(q);
    add_eta("one", 1.0);
    add_eta("eta1^J", t.eta1);
    add_eta("eta2^J", t.eta2);
    add_eta("eta3^J", t.eta3);
    add_eta("eta4^J", t.eta4);
    add_beta("beta1^J", t.beta1);
    add_beta("beta2^J", t.beta2);
  } else {
    const UldConstantsTable t = constants_table_uld(q, mode);
    add_eta("one", 1.0);
    add_eta("eta1^U", t.eta1);
    add_eta("eta2^U", t.eta2);
    add_eta("eta3^U", t.eta3);
    add_eta("eta4^U", t.eta4);
    add_beta("beta1^U", t.beta1);
    add_beta("beta2^U", t.beta2);
  }
  rep.pass = true;
  for (const auto& e : rep.eta_checks) rep.pass = rep.pass && e.pass;
  for (const auto& e : rep.beta_checks) rep.pass = rep.pass && e.pass;
  return rep;
}

std::pair<double, double> recommend_eta_beta(const ProblemParams& p,
                                             RecurrenceMode mode) {
  ProblemParams q = p;
  // beta from the eta-free bound, then eta, then the eta-dependent recheck
  double beta, eta;
  for (int round = 0;; ++round) {
    if (mode == RecurrenceMode::Nld) {
      q.eta = 1e-12;  // beta1 does not involve eta
      beta = constants_table_nld(q).beta1;
      q.beta = beta;
      eta = constants_table_nld(q).eta_bar;
      q.eta = eta;
      if (constants_table_nld(q).beta_bar <= beta || round >= 8) break;
      q.beta = constants_table_nld(q).beta_bar;
    } else {
      q.eta = 1e-12;
      beta = constants_table_uld(q, mode).beta1;
      q.beta = beta;
      eta = constants_table_uld(q, mode).eta_bar;
      q.eta = eta;
      if (constants_table_uld(q, mode).beta_bar <= beta || round >= 8) break;
      q.beta = constants_table_uld(q, mode).beta_bar;
    }
  }
  return {eta, beta};
}

MetastabilityVerdict classify(const Trajectory& traj, const Vector& x_star,
                              const ProblemParams& p, RecurrenceMode mode) {
  if (traj.config.record_stride != 1) {
    throw std::domain_error("classify: trajectory must be recorded at stride 1");
  }
  const double eta = traj.config.eta;
  double rate = 0.0, t_rec = 0.0;
  switch (mode) {
    case RecurrenceMode::UldCritical:
      rate = std::sqrt(p.m);
      t_rec = recurrence_time_ungated(p, mode);
      break;
    case RecurrenceMode::UldSmallFriction:
      rate = small_friction(p).rate;
      t_rec = recurrence_time_ungated(p, mode);
      break;
    case RecurrenceMode::Nld:
      rate = p.m_J;
      t_rec = recurrence_time_ungated(p, mode);
      break;
  }
  const auto k_rec = static_cast<std::int64_t>(std::floor(t_rec / eta));
  const auto k_esc = static_cast<std::int64_t>(std::floor((t_rec + p.T) / eta));
  const std::int64_t have = traj.step_indices.empty() ? -1 : traj.step_indices.back();
  if (have < k_esc) {
    throw std::runtime_error("classify: trajectory shorter than the escape window");
  }
  auto envelope = [&](std::int64_t k) {
    return p.eps + p.r * std::exp(-rate * k * eta);
  };
  MetastabilityVerdict v;
  v.rate = rate;
  for (std::int64_t k = 1; k <= k_rec; ++k) {
    if ((traj.positions[k] - x_star).norm() >= envelope(k) / 2.0) {
      v.event = MetaEvent::Event1;
      v.first_violation_step = k;
      return v;
    }
  }
  for (std::int64_t k = k_rec; k <= k_esc; ++k) {
    if ((traj.positions[k] - x_star).norm() > envelope(k)) {
      v.event = MetaEvent::Neither;
      v.first_violation_step = k;
      return v;
    }
  }
  v.event = MetaEvent::Event2;
  return v;
}

LyapunovDriftReport lyapunov_and_drift_check(const Objective& obj,
                                             const ProblemParams& p,
                                             double gamma, int n_samples,
                                             double radius, std::uint64_t seed) {
  ProblemParams q = p;
  q.gamma = gamma;
  const double lambda = lambda_of(q);
  const double a_bar_over_beta = a_bar_of(q) / q.beta;
  CounterRng rng(seed, /*stream=*/55);
  LyapunovDriftReport rep;
  rep.min_drift_slack = std::numeric_limits<double>::infinity();
  const int d = obj.dim();
  for (int k = 0; k < n_samples; ++k) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x(i) = radius * (2.0 * rng.uniform() - 1.0);
    const double lhs = x.dot(obj.gradient(x));
    const double rhs = 2.0 * lambda * (obj.value(x) + sq(gamma) * x.squaredNorm() / 4.0) -
                       2.0 * a_bar_over_beta;
    rep.min_drift_slack = std::min(rep.min_drift_slack, lhs - rhs);
  }
  rep.v_origin = p.beta * obj.value(Vector::Zero(d));
  rep.drift_holds = rep.min_drift_slack >= 0.0;
  return rep;
}

double brownian_tail_bound(double u, int d, double eta) {
  if (!(eta > 0.0) || u < 0.0 || d < 1) {
    throw std::domain_error("brownian_tail_bound: need u >= 0, d >= 1, eta > 0");
  }
  return std::pow(2.0, 0.25) * std::exp(0.25) *
         std::exp(-u * u / (4.0 * d * eta));
}

ExitPrediction ek_prediction(const DoubleWellLandscape& landscape, double beta,
                             const DynamicsSpec& dyn) {
  if (!(beta > 0.0)) throw std::domain_error("ek_prediction: beta > 0 required");
  ExitPrediction pred;
  pred.kind = dyn.kind;
  const long d = landscape.hess_sigma.rows();
  switch (dyn.kind) {
    case DynamicsKind::LD:
      pred.exponent = landscape.mu_star_sigma;
      break;
    case DynamicsKind::ULD:
      pred.exponent = saddle_exponents(landscape.hess_sigma, dyn.gamma,
                                       Matrix::Zero(d, d))
                          .mu_star_uld;
      pred.general_d_heuristic = d > 1;
      break;
    case DynamicsKind::NLD:
      pred.exponent =
          saddle_exponents(landscape.hess_sigma, 1.0, dyn.j).mu_J_star;
      break;
  }
  pred.prefactor = 2.0 * kPi / pred.exponent;
  pred.barrier_factor = std::exp(beta * landscape.delta_f);
  pred.hessian_factor = std::sqrt(std::abs(landscape.hess_sigma.determinant()) /
                                  landscape.hess_a1.determinant());
  pred.mean_exit = pred.prefactor * pred.barrier_factor * pred.hessian_factor;
  return pred;
}

namespace {

SamplerConfig config_for(const DynamicsSpec& dyn, const SamplerConfig& base,
                         int dim) {
  SamplerConfig cfg = base;
  switch (dyn.kind) {
    case DynamicsKind::LD:
      cfg.algorithm = Algorithm::LD;
      break;
    case DynamicsKind::ULD:
      cfg.algorithm = Algorithm::ULD;
      cfg.gamma = dyn.gamma;
      break;
    case DynamicsKind::NLD:
      cfg.algorithm = Algorithm::NLD;
      cfg.j = dyn.j;
      break;
  }
  cfg.validate(dim);
  return cfg;
}

}  // namespace

ExitExperiment exit_experiment(const DoubleWellObjective& obj,
                               const DynamicsSpec& dyn,
                               const SamplerConfig& config, int n_paths,
                               double neighborhood_radius, double domain_radius,
                               int threads) {
  const DoubleWellLandscape& land = obj.landscape();
  const Vector a2 = land.a2;
  auto stop = [a2, neighborhood_radius](const Vector& x) {
    return (x - a2).norm() < neighborhood_radius;
  };
  const SamplerConfig cfg = config_for(dyn, config, obj.dim());
  const BatchHitting hit = batch_hitting(obj, land.a1, stop, domain_radius, cfg,
                                         n_paths, threads);
  ExitExperiment out;
  out.mean_steps = hit.mean_steps;
  out.mean_time = hit.mean_steps * cfg.eta;
  out.ci95 = 1.96 * hit.stderr_steps * cfg.eta;
  out.n_target = hit.n_target;
  out.n_boundary = hit.n_boundary;
  out.n_timeout = hit.n_timeout;
  out.prediction = ek_prediction(land, cfg.beta, dyn);
  out.path_steps = hit.path_steps;
  out.path_via = hit.path_via;

  if (dyn.kind == DynamicsKind::NLD) {
    // reversible baseline with the same noise streams (common random numbers)
    SamplerConfig cfg0 = cfg;
    cfg0.algorithm = Algorithm::LD;
    cfg0.j = Matrix();
    const BatchHitting base = batch_hitting(obj, land.a1, stop, domain_radius,
                                            cfg0, n_paths, threads);
    double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    std::int64_t n = 0;
    for (int p = 0; p < n_paths; ++p) {
      if (hit.path_steps[p] < 0 || base.path_steps[p] < 0) continue;
      const double x = static_cast<double>(hit.path_steps[p]);
      const double y = static_cast<double>(base.path_steps[p]);
      sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
      ++n;
    }
    if (n >= 2 && sy > 0.0) {
      const double mx = sx / n, my = sy / n;
      const double ratio = mx / my;
      const double vx = (sxx - n * mx * mx) / (n - 1);
      const double vy = (syy - n * my * my) / (n - 1);
      const double cxy = (sxy - n * mx * my) / (n - 1);
      const double var_ratio =
          sq(ratio) * (vx / sq(mx) + vy / sq(my) - 2.0 * cxy / (mx * my)) / n;
      out.ratio_to_reversible = ratio;
      out.ratio_ci95 = 1.96 * std::sqrt(std::max(var_ratio, 0.0));
    }
  }
  return out;
}

RefinementStudy stepsize_refinement(const DoubleWellObjective& obj,
                                    const DynamicsSpec& dyn,
                                    const SamplerConfig& config_base,
                                    const std::vector<double>& eta_ladder,
                                    int n_paths, double neighborhood_radius,
                                    double domain_radius, int threads) {
  if (eta_ladder.size() < 3) {
    throw std::domain_error("stepsize_refinement: need >= 3 ladder rungs");
  }
  for (std::size_t i = 1; i < eta_ladder.size(); ++i) {
    if (!(eta_ladder[i] < eta_ladder[i - 1])) {
      throw std::domain_error("stepsize_refinement: ladder must be decreasing");
    }
  }
  if (!std::isfinite(config_base.beta)) {
    throw std::domain_error("stepsize_refinement: zero-noise study is degenerate");
  }
  RefinementStudy study;
  for (double eta : eta_ladder) {
    SamplerConfig cfg = config_base;
    cfg.eta = eta;
    // keep the continuous-time budget constant across rungs
    cfg.max_steps = static_cast<std::int64_t>(
        config_base.max_steps * (config_base.eta / eta));
    const ExitExperiment ex = exit_experiment(obj, dyn, cfg, n_paths,
                                              neighborhood_radius,
                                              domain_radius, threads);
    study.rungs.push_back({eta, ex.mean_time, ex.ci95 / 1.96});
    study.prediction = ex.prediction.mean_exit;
  }
  study.differences_shrink = true;
  for (std::size_t i = 2; i < study.rungs.size(); ++i) {
    const double d_prev =
        std::abs(study.rungs[i - 1].mean_time - study.rungs[i - 2].mean_time);
    const double d_cur =
        std::abs(study.rungs[i].mean_time - study.rungs[i - 1].mean_time);
    if (d_cur > d_prev) study.differences_shrink = false;
  }
  // least squares of mean(eta) = m0 + c sqrt(eta), the leading boundary bias
  const std::size_t n = study.rungs.size();
  double s1 = n, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (const auto& r : study.rungs) {
    const double x = std::sqrt(r.eta);
    sx += x; sxx += x * x; sy += r.mean_time; sxy += x * r.mean_time;
  }
  const double det = s1 * sxx - sx * sx;
  study.extrapolated = (sxx * sy - sx * sxy) / det;
  study.extrapolation_gap = std::abs(study.extrapolated - study.prediction);
  return study;
}

}  // namespace kramers
