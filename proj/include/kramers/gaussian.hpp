#pragma once

#include <vector>

#include "kramers/mathkit.hpp"
#include "kramers/objectives.hpp"
#include "kramers/spectral.hpp"

namespace kramers {

struct GaussianState {
  Vector mean;
  Matrix cov;
};

enum class DynamicsKind { LD, ULD, NLD };

// Which continuous-time dynamics a law or experiment refers to.
// gamma is used by ULD, j by NLD.
struct DynamicsSpec {
  DynamicsKind kind = DynamicsKind::LD;
  double gamma = 0.0;
  Matrix j;

  static DynamicsSpec ld() { return {DynamicsKind::LD, 0.0, Matrix()}; }
  static DynamicsSpec uld(double gamma) {
    return {DynamicsKind::ULD, gamma, Matrix()};
  }
  static DynamicsSpec nld(Matrix j) {
    return {DynamicsKind::NLD, 0.0, std::move(j)};
  }
};

struct MixingCurve {
  std::vector<double> times;
  std::vector<double> w2;      // W2 of the X-marginal law against pi
  std::vector<double> bound;   // theorem envelope at each time (NaN if none)
  DecayFit fit;
  double init_bound = 0.0;     // closed-form upper bound on W2(pi_0, pi)
  double w2_initial = 0.0;     // exact W2(pi_0, pi) for the deterministic start
};

// Exact joint law of (V, Y) at time t, Y = X - x*_H, velocity block first.
// mean = e^{-t H_gamma} [v0; x0 - x*], cov = lyapunov_integral of the
// underdamped OU generator with Q = 2 gamma beta^{-1} I^{(2)}.
GaussianState uld_law(const QuadraticObjective& q, double gamma, double beta,
                      const Vector& x0, const Vector& v0, double t);

// Exact law of Y = X - x*_H for the drift (I+J) dynamics.
GaussianState nld_law(const QuadraticObjective& q, const Matrix& j, double beta,
                      const Vector& x0, double t);

// 2-Wasserstein distance between Gaussians,
// sqrt(||mu1-mu2||^2 + Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})).
double w2_gaussian(const GaussianState& g1, const GaussianState& g2);

// Stationary X-marginal N(0, beta^{-1} H^{-1}) in Y coordinates.
GaussianState stationary_x_law(const QuadraticObjective& q, double beta);

// W2(law of X(t), pi) on the given grid with the matching theorem envelope
// (LD: e^{-mt}; ULD: regime envelope; NLD: empirical C_J(eps) envelope).
MixingCurve mixing_curve(const DynamicsSpec& dyn, const QuadraticObjective& q,
                         double beta, const Vector& x0, const Vector& v0,
                         const std::vector<double>& t_grid);

}  // namespace kramers
