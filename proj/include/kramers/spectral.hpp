#pragma once

#include <cstdint>
#include <optional>

#include "kramers/mathkit.hpp"

namespace kramers {

enum class FrictionRegime { SubCritical, Critical, SuperCritical };

// Decay envelope data for ||e^{-t H_gamma}||.
struct UnderdampedSpectral {
  double gamma = 0.0;
  double m = 0.0;  // smallest eigenvalue of H
  double M = 0.0;  // largest eigenvalue of H
  FrictionRegime regime = FrictionRegime::Critical;
  std::optional<double> C_eps_hat;  // sub-critical envelope constant
  std::optional<double> eps_hat;    // 1 - gamma / (2 sqrt(m))
  double C_H = 0.0;                 // max_{lambda_i > m} (1+lambda_i)^2/(lambda_i - m)
  double rate = 0.0;                // decay exponent of the envelope
  bool lemma_constants_apply = true;  // false in the super-critical regime
  bool envelope_checked = false;      // grid verification of the bound ran
  double envelope_max_ratio = 0.0;    // max ||e^{-tHg}|| / bound(t) on the grid

  // envelope value at time t (super-critical: plain e^{-rate t})
  double bound(double t) const;
};

// Spectral data of A_J H = (I + J) H.
struct NonreversibleSpectral {
  double lambda1J = 0.0;   // min real part of eig(A_J H)
  int n1 = 1;              // Jordan-degree estimate at lambda1J
  double CJ = 1.0;         // empirical envelope constant for eps_tilde
  double eps_tilde = 0.0;  // envelope slack
  bool c1_holds = false;   // condition (C1): equality lambda1J = m

  double m_J() const { return lambda1J - eps_tilde; }
  double bound(double t) const;
};

// Saddle exit-rate exponents for the three dynamics.
struct SaddleExponents {
  double mu_star_sigma = 0.0;  // -(negative eigenvalue of L^sigma)
  double mu_star_uld = 0.0;    // positive eigenvalue of [[-gI, -L],[I, 0]]
  double mu_J_star = 0.0;      // -(unique negative eigenvalue of A_J L^sigma)
  double ratio_uld = 0.0;      // mu_star_sigma / mu_star_uld
  double ratio_nld = 0.0;      // mu_star_sigma / mu_J_star
};

// 2d x 2d block matrix [[gamma I, H], [-I, 0]].
Matrix build_h_gamma(const Matrix& h, double gamma);

// Classifies gamma against 2 sqrt(m) and produces the envelope constants.
// When verify_grid > 0 the envelope is checked against
// spectral_norm(matrix_exp(-t H_gamma)) on that many grid points.
UnderdampedSpectral uld_spectral(const Matrix& h, double gamma,
                                 int verify_grid = 64);

// J must be antisymmetric within 1e-12 relative. eps_tilde <= 0 selects the
// default 0.05 * lambda1J. CJ is the refined grid supremum of
// ||e^{-tA_JH}|| e^{(lambda1J - eps_tilde) t} plus 5% headroom, scanned on
// both the transient (1/lambda1) and Jordan-tail (1/eps_tilde) time scales.
NonreversibleSpectral lambda1_j(const Matrix& h, const Matrix& j,
                                double eps_tilde = 0.0);

// Condition (C1): some eigenpair (m + i rho, u + iv) of A_J H is also an
// eigenvector of J with eigenvalue i rho.
bool check_condition_c1(const Matrix& h, const Matrix& j, double tol);

struct OptimalRate {
  double lambda1 = 0.0;  // Tr(H)/d, the rate of the optimal drift
  double speedup = 0.0;  // (M(d-1) + m) / (m d)
};

OptimalRate optimal_rate(const Matrix& h);

// Random-perturbation hill climbing on lambda1J over antisymmetric J.
std::pair<Matrix, double> search_j(const Matrix& h, int iters,
                                   std::uint64_t seed);

// L_sigma: symmetric with exactly one negative eigenvalue.
SaddleExponents saddle_exponents(const Matrix& l_sigma, double gamma,
                                 const Matrix& j);

}  // namespace kramers
