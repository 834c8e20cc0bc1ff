#include "kramers/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "kramers/noise.hpp"

namespace kramers {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

void require_antisymmetric(const Matrix& j) {
  const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  if ((j + j.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::domain_error("J is not antisymmetric");
  }
}

double c_h_constant(const Vector& eigs) {
  const double m = eigs(0);
  double ch = 0.0;
  for (int i = 0; i < eigs.size(); ++i) {
    if (eigs(i) > m * (1.0 + 1e-12)) {
      ch = std::max(ch, (1.0 + eigs(i)) * (1.0 + eigs(i)) / (eigs(i) - m));
    }
  }
  return ch;
}

// numerical rank of a complex matrix, threshold relative to given scale
long numerical_rank(const ComplexMatrix& a, double scale) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  const auto& sv = svd.singularValues();
  const double tol = 1e-8 * std::max(scale, 1.0);
  long r = 0;
  for (long i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++r;
  }
  return r;
}

// largest Jordan block at eigenvalue lambda: smallest k with
// nullity((A - lambda I)^k) equal to the algebraic multiplicity
int jordan_degree(const Matrix& a, std::complex<double> lambda,
                  int multiplicity, double scale) {
  const long n = a.rows();
  ComplexMatrix b = a.cast<std::complex<double>>();
  b.diagonal().array() -= lambda;
  ComplexMatrix power = b;
  for (int k = 1; k <= multiplicity; ++k) {
    const long nullity = n - numerical_rank(power, scale);
    if (nullity >= multiplicity) return k;
    power = power * b;
  }
  return multiplicity;
}

// f(t) = ||e^{-tA}|| e^{mJ t} on a uniform grid by repeated multiplication,
// then golden-section refinement of the bracket around the grid argmax
double grid_supremum(const Matrix& a, double m_j, double t_max, int grid) {
  const double dt = t_max / grid;
  const Matrix step = matrix_exp(-dt * a);
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  double sup = 1.0;  // t = 0 term
  int k_best = 0;
  for (int k = 1; k <= grid; ++k) {
    power = (power * step).eval();
    const double f = spectral_norm(power) * std::exp(m_j * k * dt);
    if (f > sup) {
      sup = f;
      k_best = k;
    }
  }
  auto f_at = [&](double t) {
    return spectral_norm(matrix_exp(-t * a)) * std::exp(m_j * t);
  };
  double lo = std::max(0.0, (k_best - 1) * dt), hi = std::min(t_max, (k_best + 1) * dt);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = f_at(x1), f2 = f_at(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f_at(x1);
    }
  }
  return std::max({sup, f1, f2});
}

// The transient peak of a non-normal e^{-tA} lives on the 1/lambda1 scale
// while the Jordan-polynomial tail peaks near (n1-1)/eps_tilde, so the
// supremum is scanned on both scales.
double envelope_supremum(const Matrix& a, double m_j, double lambda1,
                         double eps_tilde) {
  const double t_head = 20.0 / std::max(lambda1, 1e-12);
  const double t_tail = 10.0 / std::max(eps_tilde, 1e-12);
  double sup = grid_supremum(a, m_j, t_head, 2048);
  if (t_tail > t_head) {
    sup = std::max(sup, grid_supremum(a, m_j, t_tail, 1024));
  }
  return sup;
}

}  // namespace

double UnderdampedSpectral::bound(double t) const {
  switch (regime) {
    case FrictionRegime::SubCritical:
      return *C_eps_hat * std::exp(-rate * t);
    case FrictionRegime::Critical:
      return std::sqrt(C_H + 2.0 + (m + 1.0) * (m + 1.0) * t * t) *
             std::exp(-rate * t);
    case FrictionRegime::SuperCritical:
      return std::exp(-rate * t);  // no lemma constant in this regime
  }
  return 0.0;
}

double NonreversibleSpectral::bound(double t) const {
  return CJ * std::exp(-m_J() * t);
}

Matrix build_h_gamma(const Matrix& h, double gamma) {
  const long d = h.rows();
  Matrix hg = Matrix::Zero(2 * d, 2 * d);
  hg.topLeftCorner(d, d) = gamma * Matrix::Identity(d, d);
  hg.topRightCorner(d, d) = h;
  hg.bottomLeftCorner(d, d) = -Matrix::Identity(d, d);
  return hg;
}

UnderdampedSpectral uld_spectral(const Matrix& h, double gamma,
                                 int verify_grid) {
  detail::require_symmetric(h, 1e-12, "uld_spectral");
  if (!(gamma > 0.0)) throw std::domain_error("uld_spectral: gamma > 0 required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector eigs = es.eigenvalues();
  if (!(eigs(0) > 0.0)) {
    throw std::domain_error("uld_spectral: H is not positive definite");
  }
  UnderdampedSpectral s;
  s.gamma = gamma;
  s.m = eigs(0);
  s.M = eigs(eigs.size() - 1);
  s.C_H = c_h_constant(eigs);
  const double crit = 2.0 * std::sqrt(s.m);
  const double tol = 1e-12 * std::max(crit, 1.0);
  if (gamma < crit - tol) {
    s.regime = FrictionRegime::SubCritical;
    const double eh = 1.0 - gamma / crit;
    s.eps_hat = eh;
    s.C_eps_hat = (1.0 + s.M) / std::sqrt(s.m * (1.0 - (1.0 - eh) * (1.0 - eh)));
    s.rate = std::sqrt(s.m) * (1.0 - eh);
  } else if (gamma <= crit + tol) {
    s.regime = FrictionRegime::Critical;
    s.rate = std::sqrt(s.m);
  } else {
    s.regime = FrictionRegime::SuperCritical;
    s.rate = (gamma - std::sqrt(gamma * gamma - 4.0 * s.m)) / 2.0;
    s.lemma_constants_apply = false;
  }
  if (verify_grid > 0 && s.lemma_constants_apply) {
    const Matrix hg = build_h_gamma(h, gamma);
    const double t_max = 20.0 / s.rate;
    const double dt = t_max / verify_grid;
    const Matrix step = matrix_exp(-dt * hg);
    Matrix power = Matrix::Identity(hg.rows(), hg.cols());
    double worst = 0.0;
    for (int k = 1; k <= verify_grid; ++k) {
      power = (power * step).eval();
      worst = std::max(worst, spectral_norm(power) / s.bound(k * dt));
    }
    s.envelope_max_ratio = worst;
    s.envelope_checked = worst <= 1.0 + 1e-9;
  }
  return s;
}

NonreversibleSpectral lambda1_j(const Matrix& h, const Matrix& j,
                                double eps_tilde) {
  detail::require_symmetric(h, 1e-12, "lambda1_j");
  require_antisymmetric(j);
  const long d = h.rows();
  const Matrix a = (Matrix::Identity(d, d) + j) * h;
  Eigen::EigenSolver<Matrix> es(a);
  const Eigen::VectorXcd lam = es.eigenvalues();
  double lambda1 = lam(0).real();
  for (long i = 1; i < lam.size(); ++i) lambda1 = std::min(lambda1, lam(i).real());

  NonreversibleSpectral s;
  s.lambda1J = lambda1;
  s.eps_tilde = eps_tilde > 0.0 ? eps_tilde : 0.05 * lambda1;

  // Jordan degree per eigenvalue cluster at minimal real part;
  // ties take the maximum degree.
  const double nrm = spectral_norm(a);
  const double cluster_tol = 1e-6 * std::max(nrm, 1.0);
  std::vector<bool> used(lam.size(), false);
  int n1 = 1;
  for (long i = 0; i < lam.size(); ++i) {
    if (used[i] || lam(i).real() > lambda1 + cluster_tol) continue;
    int mult = 0;
    for (long k = 0; k < lam.size(); ++k) {
      if (std::abs(lam(k) - lam(i)) <= cluster_tol) {
        mult += 1;
        used[k] = true;
      }
    }
    if (mult > 1) n1 = std::max(n1, jordan_degree(a, lam(i), mult, nrm));
  }
  s.n1 = n1;

  s.CJ = std::max(1.0, 1.05 * envelope_supremum(a, s.m_J(), lambda1, s.eps_tilde));
  s.c1_holds = check_condition_c1(h, j, 1e-7);
  return s;
}

bool check_condition_c1(const Matrix& h, const Matrix& j, double tol) {
  detail::require_symmetric(h, 1e-12, "check_condition_c1");
  require_antisymmetric(j);
  const long d = h.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> hs(h);
  const double m = hs.eigenvalues()(0);
  const Matrix a = (Matrix::Identity(d, d) + j) * h;
  Eigen::EigenSolver<Matrix> es(a);
  const Eigen::VectorXcd lam = es.eigenvalues();
  const ComplexMatrix vecs = es.eigenvectors();
  const Eigen::MatrixXcd jc = j.cast<std::complex<double>>();
  const double scale = std::max(1.0, spectral_norm(j));
  for (long i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i).real() - m) > tol * std::max(1.0, m)) continue;
    const Eigen::VectorXcd w = vecs.col(i);
    const std::complex<double> irho(0.0, lam(i).imag());
    if ((jc * w - irho * w).norm() <= tol * scale * w.norm()) return true;
  }
  return false;
}

OptimalRate optimal_rate(const Matrix& h) {
  detail::require_symmetric(h, 1e-12, "optimal_rate");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector eigs = es.eigenvalues();
  if (!(eigs(0) > 0.0)) throw std::domain_error("optimal_rate: H not PD");
  const double d = static_cast<double>(h.rows());
  const double m = eigs(0), M = eigs(eigs.size() - 1);
  return {h.trace() / d, (M * (d - 1.0) + m) / (m * d)};
}

std::pair<Matrix, double> search_j(const Matrix& h, int iters,
                                   std::uint64_t seed) {
  if (iters < 1) throw std::domain_error("search_j: iters >= 1 required");
  detail::require_symmetric(h, 1e-12, "search_j");
  const long d = h.rows();
  auto lambda1_of = [&](const Matrix& j) {
    const Matrix a = (Matrix::Identity(d, d) + j) * h;
    Eigen::VectorXcd lam = Eigen::EigenSolver<Matrix>(a, false).eigenvalues();
    double v = lam(0).real();
    for (long i = 1; i < lam.size(); ++i) v = std::min(v, lam(i).real());
    return v;
  };
  CounterRng rng(seed, /*stream=*/7);
  Matrix best = Matrix::Zero(d, d);
  double best_val = lambda1_of(best);
  const double cap = h.trace() / static_cast<double>(d);
  double sigma = 0.5 * (1.0 + spectral_norm(h));
  for (int it = 0; it < iters; ++it) {
    Matrix cand = best;
    for (long r = 0; r < d; ++r) {
      for (long c = r + 1; c < d; ++c) {
        const double delta = sigma * rng.gaussian();
        cand(r, c) += delta;
        cand(c, r) -= delta;
      }
    }
    const double val = lambda1_of(cand);
    if (val > best_val) {
      best_val = val;
      best = cand;
      sigma *= 1.1;
    } else {
      sigma *= 0.95;
      if (sigma < 1e-8) sigma = 0.5 * (1.0 + spectral_norm(h));
    }
  }
  if (best_val > cap + 1e-6) {
    throw std::runtime_error("search_j: lambda1J exceeded Tr(H)/d");
  }
  return {best, best_val};
}

SaddleExponents saddle_exponents(const Matrix& l_sigma, double gamma,
                                 const Matrix& j) {
  detail::require_symmetric(l_sigma, 1e-12, "saddle_exponents");
  require_antisymmetric(j);
  const long d = l_sigma.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(l_sigma);
  const Vector mu = es.eigenvalues();
  int negatives = 0;
  for (long i = 0; i < d; ++i) {
    if (mu(i) < 0.0) ++negatives;
  }
  if (negatives != 1 || (d > 1 && !(mu(1) > 0.0))) {
    throw std::domain_error("saddle_exponents: L_sigma must have exactly one negative eigenvalue");
  }
  SaddleExponents out;
  out.mu_star_sigma = -mu(0);

  // closed form and the augmented-matrix eigenvalue must agree
  out.mu_star_uld =
      0.5 * (std::sqrt(gamma * gamma + 4.0 * out.mu_star_sigma) - gamma);
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = -gamma * Matrix::Identity(d, d);
  aug.topRightCorner(d, d) = -l_sigma;
  aug.bottomLeftCorner(d, d) = Matrix::Identity(d, d);
  Eigen::VectorXcd aug_eigs = Eigen::EigenSolver<Matrix>(aug, false).eigenvalues();
  int positives = 0;
  double mu_aug = 0.0;
  for (long i = 0; i < aug_eigs.size(); ++i) {
    if (aug_eigs(i).real() > 1e-10 && std::abs(aug_eigs(i).imag()) < 1e-8) {
      ++positives;
      mu_aug = aug_eigs(i).real();
    }
  }
  if (positives != 1 || std::abs(mu_aug - out.mu_star_uld) > 1e-9 *
                            std::max(1.0, out.mu_star_uld)) {
    throw std::runtime_error("saddle_exponents: augmented-matrix eigenvalue mismatch");
  }

  const Matrix ajl = (Matrix::Identity(d, d) + j) * l_sigma;
  Eigen::VectorXcd lam = Eigen::EigenSolver<Matrix>(ajl, false).eigenvalues();
  int neg_real = 0;
  double mu_j = 0.0;
  for (long i = 0; i < lam.size(); ++i) {
    if (lam(i).real() < -1e-12 * std::max(1.0, spectral_norm(ajl))) {
      ++neg_real;
      if (std::abs(lam(i).imag()) <= 1e-8) mu_j = -lam(i).real();
    }
  }
  if (neg_real != 1 || mu_j == 0.0) {
    throw std::runtime_error("saddle_exponents: A_J L^sigma does not have a unique real negative eigenvalue");
  }
  out.mu_J_star = mu_j;
  out.ratio_uld = out.mu_star_sigma / out.mu_star_uld;
  out.ratio_nld = out.mu_star_sigma / out.mu_J_star;
  return out;
}

}  // namespace kramers
