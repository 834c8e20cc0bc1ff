#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kramers/gaussian.hpp"
#include "kramers/objectives.hpp"
#include "kramers/samplers.hpp"

namespace kramers {

enum class RecurrenceMode { UldCritical, UldSmallFriction, Nld };

// Inputs of the recurrence/escape machinery. m is the smallest Hessian
// eigenvalue at the minimum and doubles as the dissipativity slope
// (they coincide for the objectives used here); (b, R) complete the
// dissipativity data. eta/beta are the candidate algorithm parameters the
// eta-/beta-dependent table entries are evaluated at. c_H comes from the
// spectrum of H; (c_J, m_J, norm_J) come from the chosen drift J.
struct ProblemParams {
  double m = 0.0, M = 0.0, L = 0.0;
  double A = 0.0, B = 0.0, C = 0.0, b = 0.0;
  int d = 1;
  double r = 1.0;       // initialization distance
  double eps = 0.1;     // target neighborhood radius
  double delta = 0.1;   // failure probability
  double T = 1.0;       // escape window length
  double gamma = 0.0;   // ULD friction
  double v0_norm = 0.0; // ||V(0)||
  double eta = 1e-3;
  double beta = 1.0;
  double c_H = 0.0;     // ULD: C_H of the Hessian spectrum
  double c_J = 1.0;     // NLD: empirical C_J(eps_tilde)
  double m_J = 0.0;     // NLD: lambda1J - eps_tilde
  double norm_J = 0.0;  // NLD: ||J||

  double R() const { return m > 0.0 ? std::sqrt(b / m) : 0.0; }
};

// All Table-1 quantities for the ULD theorems.
struct UldConstantsTable {
  double eps1 = 0.0, eps2 = 0.0, eps3 = 0.0, eps_bar = 0.0;
  double eta1 = 0.0, eta2 = 0.0, eta3 = 0.0, eta4 = 0.0, eta_bar = 0.0;
  double beta1 = 0.0, beta2 = 0.0, beta_bar = 0.0;
  double Cx_c = 0.0, Cv_c = 0.0, K1 = 0.0, K2 = 0.0;
  double Cx_d = 0.0, Cv_d = 0.0;
  double lambda = 0.0, A_bar = 0.0;
  double T_rec = 0.0, T_esc = 0.0;
};

// All Table-2 quantities for the NLD theorem.
struct NldConstantsTable {
  double eps1 = 0.0, eps2 = 0.0, eps_bar = 0.0;
  double eta1 = 0.0, eta2 = 0.0, eta3 = 0.0, eta4 = 0.0, eta_bar = 0.0;
  double beta1 = 0.0, beta2 = 0.0, beta_bar = 0.0;
  double C_c = 0.0, C_d = 0.0, C_1 = 0.0;
  double T_rec = 0.0, T_esc = 0.0;
};

// Recurrence horizon for the requested mode. Critical ULD solves
// T e^{-sqrt(m) T} = eps^2 / (8 r^2 sqrt(C_H + 2 + (m+1)^2)) through the
// lower Lambert branch and verifies the identity to 1e-10 relative.
// Throws when eps >= eps_bar for the mode, naming the violated component.
double recurrence_time(const ProblemParams& p, RecurrenceMode mode);

UldConstantsTable constants_table_uld(const ProblemParams& p,
                                      RecurrenceMode mode = RecurrenceMode::UldCritical);
NldConstantsTable constants_table_nld(const ProblemParams& p);

struct AdmissibilityEntry {
  std::string name;
  double limit = 0.0;  // bound the parameter is checked against
  double value = 0.0;  // parameter value
  bool pass = false;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityEntry> eta_checks;   // eta <= limit
  std::vector<AdmissibilityEntry> beta_checks;  // beta >= limit
  bool pass = false;
};

AdmissibilityReport admissibility(const ProblemParams& p, double eta,
                                  double beta, RecurrenceMode mode);

// The coupled-hypothesis recipe: beta from the eta-free bound first, then
// eta from the table at that beta, then beta rechecked against the
// eta-dependent bound.
std::pair<double, double> recommend_eta_beta(const ProblemParams& p,
                                             RecurrenceMode mode);

enum class MetaEvent { Event1, Event2, Neither };

struct MetastabilityVerdict {
  MetaEvent event = MetaEvent::Neither;
  std::optional<std::int64_t> first_violation_step;
  double rate = 0.0;  // envelope decay exponent used
};

// Envelope classification of a stride-1 trajectory against
// envelope(k) = eps + r e^{-rate k eta}. The trajectory must cover
// floor(T_esc/eta) steps.
MetastabilityVerdict classify(const Trajectory& traj, const Vector& x_star,
                              const ProblemParams& p, RecurrenceMode mode);

struct LyapunovDriftReport {
  double min_drift_slack = 0.0;  // min over samples of the drift inequality slack
  double v_origin = 0.0;         // Lyapunov value at (0, 0)
  bool drift_holds = false;
};

LyapunovDriftReport lyapunov_and_drift_check(const Objective& obj,
                                             const ProblemParams& p,
                                             double gamma, int n_samples,
                                             double radius, std::uint64_t seed);

// P(sup_{[t0,t1]} ||B_t - B_{t1}|| >= u) <= 2^{1/4} e^{1/4} e^{-u^2/(4 d eta)}
double brownian_tail_bound(double u, int d, double eta);

struct ExitPrediction {
  double mean_exit = 0.0;
  double prefactor = 0.0;       // 2 pi / exponent
  double barrier_factor = 0.0;  // e^{beta dF}
  double hessian_factor = 0.0;  // sqrt(|det Hess F(sigma)| / det Hess F(a1))
  double exponent = 0.0;        // mu*(sigma), mu_*, or mu_J*
  DynamicsKind kind = DynamicsKind::LD;
  bool asymptotic = true;       // the o_beta(1) factor is dropped
  // the underdamped formula above dimension one rests on a conjecture;
  // rigorous proofs exist only for d = 1
  bool general_d_heuristic = false;
};

ExitPrediction ek_prediction(const DoubleWellLandscape& landscape, double beta,
                             const DynamicsSpec& dyn);

struct ExitExperiment {
  double mean_time = 0.0;  // continuous time, steps * eta
  double ci95 = 0.0;
  double mean_steps = 0.0;
  ExitPrediction prediction;
  std::int64_t n_target = 0, n_boundary = 0, n_timeout = 0;
  // NLD runs also measure tau_J / tau_{J=0} with common random numbers
  std::optional<double> ratio_to_reversible;
  std::optional<double> ratio_ci95;
  std::vector<std::int64_t> path_steps;
  std::vector<ExitedVia> path_via;
};

// Start at a1, stop on the ball of neighborhood_radius around a2 or on
// leaving the ball of domain_radius around the origin.
ExitExperiment exit_experiment(const DoubleWellObjective& obj,
                               const DynamicsSpec& dyn,
                               const SamplerConfig& config, int n_paths,
                               double neighborhood_radius, double domain_radius,
                               int threads = 1);

struct RefinementRung {
  double eta = 0.0;
  double mean_time = 0.0;
  double stderr_time = 0.0;
};

struct RefinementStudy {
  std::vector<RefinementRung> rungs;
  bool differences_shrink = false;
  double extrapolated = 0.0;      // sqrt(eta) least-squares limit at eta -> 0
  double prediction = 0.0;
  double extrapolation_gap = 0.0; // |extrapolated - prediction|
};

RefinementStudy stepsize_refinement(const DoubleWellObjective& obj,
                                    const DynamicsSpec& dyn,
                                    const SamplerConfig& config_base,
                                    const std::vector<double>& eta_ladder,
                                    int n_paths, double neighborhood_radius,
                                    double domain_radius, int threads = 1);

}  // namespace kramers
