#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kramers {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Least-squares model  log v = log_prefactor + poly_degree*log(1+t) - rate*t
// fitted over the trailing half of the samples.
struct DecayFit {
  double rate = 0.0;
  double log_prefactor = 0.0;
  int poly_degree = 0;
  double residual = 0.0;  // RMS of the log-space fit error
};

// e^{A} by scaling-and-squaring with a degree-13 Pade approximant.
// Safe for defective matrices. Throws std::overflow_error when the result
// leaves the representable range, std::domain_error on non-finite input.
Matrix matrix_exp(const Matrix& a);

// Symmetric PSD square root. Input must be symmetric within 1e-12 relative
// and have eigenvalues >= -1e-10 * ||S||; otherwise std::domain_error.
Matrix psd_sqrt(const Matrix& s);

// Lower branch W_{-1} on [-1/e, 0). Halley iteration, residual stop 1e-14,
// at most 50 iterations. Throws std::domain_error outside the branch domain.
double lambert_w_minus1(double x);

// Sigma_t = int_0^t e^{-sA} Q e^{-sA^T} ds. Computed from the augmented
// block exponential exp([[-A, Q],[0, A^T]] tau) at a scaled tau, then
// propagated to t by the semigroup identity
// Sigma_{2t} = e^{-tA} Sigma_t e^{-tA^T} + Sigma_t.
// Requires t >= 0 and symmetric Q.
Matrix lyapunov_integral(const Matrix& a, const Matrix& q, double t);

// Largest singular value.
double spectral_norm(const Matrix& a);

// Requires >= 8 samples, strictly increasing times, positive values.
// poly_degree chosen from {0,...,4} by minimum residual.
DecayFit decay_rate_fit(const std::vector<double>& times,
                        const std::vector<double>& values);

namespace detail {
// Shared symmetry gate for PSD inputs: relative asymmetry above tol throws.
void require_symmetric(const Matrix& s, double tol, const char* who);
}  // namespace detail

}  // namespace kramers
