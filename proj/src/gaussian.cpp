#include "kramers/gaussian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kramers {

GaussianState uld_law(const QuadraticObjective& q, double gamma, double beta,
                      const Vector& x0, const Vector& v0, double t) {
  if (t < 0.0) throw std::domain_error("uld_law: t < 0");
  if (!(beta > 0.0)) throw std::domain_error("uld_law: beta > 0 required");
  const long d = q.h().rows();
  const Matrix hg = build_h_gamma(q.h(), gamma);
  Vector z0(2 * d);
  z0.head(d) = v0;
  z0.tail(d) = x0 - q.minimizer();
  Matrix q_noise = Matrix::Zero(2 * d, 2 * d);
  q_noise.topLeftCorner(d, d) =
      (2.0 * gamma / beta) * Matrix::Identity(d, d);
  GaussianState g;
  g.mean = matrix_exp(-t * hg) * z0;
  g.cov = lyapunov_integral(hg, q_noise, t);
  return g;
}

GaussianState nld_law(const QuadraticObjective& q, const Matrix& j, double beta,
                      const Vector& x0, double t) {
  if (t < 0.0) throw std::domain_error("nld_law: t < 0");
  if (!(beta > 0.0)) throw std::domain_error("nld_law: beta > 0 required");
  const long d = q.h().rows();
  const Matrix a = (Matrix::Identity(d, d) + j) * q.h();
  GaussianState g;
  g.mean = matrix_exp(-t * a) * (x0 - q.minimizer());
  g.cov = lyapunov_integral(a, (2.0 / beta) * Matrix::Identity(d, d), t);
  return g;
}

double w2_gaussian(const GaussianState& g1, const GaussianState& g2) {
  if (g1.mean.size() != g2.mean.size()) {
    throw std::domain_error("w2_gaussian: dimension mismatch");
  }
  // Bures term in its orthogonal-Procrustes form
  //   min_U ||S1^{1/2} - S2^{1/2} U||_F,
  // algebraically equal to Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})
  // but free of the trace cancellation that floors the plain formula
  // near sqrt(machine epsilon).
  const Matrix r1 = psd_sqrt(g1.cov);
  const Matrix r2 = psd_sqrt(g2.cov);
  Eigen::JacobiSVD<Matrix> svd(r2.transpose() * r1,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix u = svd.matrixU() * svd.matrixV().transpose();
  const double bures = (r1 - r2 * u).norm();
  return std::sqrt((g1.mean - g2.mean).squaredNorm() + bures * bures);
}

GaussianState stationary_x_law(const QuadraticObjective& q, double beta) {
  const long d = q.h().rows();
  GaussianState g;
  g.mean = Vector::Zero(d);
  g.cov = q.h().ldlt().solve(Matrix::Identity(d, d)) / beta;
  return g;
}

MixingCurve mixing_curve(const DynamicsSpec& dyn, const QuadraticObjective& q,
                         double beta, const Vector& x0, const Vector& v0,
                         const std::vector<double>& t_grid) {
  if (t_grid.size() < 8) {
    throw std::domain_error("mixing_curve: need >= 8 grid times");
  }
  const long d = q.h().rows();
  const GaussianState pi = stationary_x_law(q, beta);
  const double m = q.eig_min();

  // envelope prefactors of the matching theorem
  UnderdampedSpectral us;
  NonreversibleSpectral ns;
  if (dyn.kind == DynamicsKind::ULD) {
    us = uld_spectral(q.h(), dyn.gamma, /*verify_grid=*/0);
  } else if (dyn.kind == DynamicsKind::NLD) {
    ns = lambda1_j(q.h(), dyn.j);
  }

  MixingCurve curve;
  curve.times = t_grid;
  curve.w2.reserve(t_grid.size());
  curve.bound.reserve(t_grid.size());

  const Vector y0 = x0 - q.minimizer();
  curve.w2_initial = std::sqrt(y0.squaredNorm() + pi.cov.trace());
  curve.init_bound = std::sqrt(
      2.0 * x0.squaredNorm() +
      (4.0 / m) * (q.b1().squaredNorm() / (2.0 * m) + d / beta));

  for (double t : t_grid) {
    GaussianState marginal;
    double envelope = std::numeric_limits<double>::quiet_NaN();
    switch (dyn.kind) {
      case DynamicsKind::LD: {
        marginal = nld_law(q, Matrix::Zero(d, d), beta, x0, t);
        envelope = std::exp(-m * t);
        break;
      }
      case DynamicsKind::ULD: {
        const GaussianState joint = uld_law(q, dyn.gamma, beta, x0, v0, t);
        marginal.mean = joint.mean.tail(d);
        marginal.cov = joint.cov.bottomRightCorner(d, d);
        envelope = us.lemma_constants_apply
                       ? us.bound(t)
                       : std::numeric_limits<double>::quiet_NaN();
        break;
      }
      case DynamicsKind::NLD: {
        marginal = nld_law(q, dyn.j, beta, x0, t);
        envelope = ns.bound(t);
        break;
      }
    }
    curve.w2.push_back(w2_gaussian(marginal, pi));
    curve.bound.push_back(envelope * curve.w2_initial);
  }
  curve.fit = decay_rate_fit(curve.times, curve.w2);
  return curve;
}

}  // namespace kramers
