#include "kramers/mathkit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace kramers {

namespace detail {

void require_symmetric(const Matrix& s, double tol, const char* who) {
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (((s - s.transpose()).cwiseAbs().maxCoeff()) > tol * scale) {
    throw std::domain_error(std::string(who) + ": matrix is not symmetric");
  }
}

// [13/13] Pade approximant of e^A for the scaled matrix.
Matrix pade13(const Matrix& a) {
  static const double b[] = {64764752532480000.0, 32382376266240000.0,
                             7771770303897600.0,  1187353796428800.0,
                             129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,
                             1323241920.0,        40840800.0,
                             960960.0,            16380.0,
                             182.0,               1.0};
  const long n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
           b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

Matrix matrix_exp(const Matrix& a) {
  if (!a.allFinite()) throw std::domain_error("matrix_exp: non-finite input");
  if (a.rows() != a.cols()) throw std::domain_error("matrix_exp: non-square input");
  const double theta13 = 5.371920351148152;  // Higham's bound for degree 13
  const double nrm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  Matrix scaled = a;
  if (nrm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    if (squarings > 1023) throw std::overflow_error("matrix_exp: norm too large");
    scaled *= std::ldexp(1.0, -squarings);
  }
  Matrix r = detail::pade13(scaled);
  for (int i = 0; i < squarings; ++i) r = r * r;
  if (!r.allFinite()) throw std::overflow_error("matrix_exp: result overflowed");
  return r;
}

Matrix psd_sqrt(const Matrix& s) {
  detail::require_symmetric(s, 1e-12, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (ev(0) < -1e-10 * std::max(scale, 1.0)) {
    throw std::domain_error("psd_sqrt: matrix is not positive semi-definite");
  }
  Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double lambert_w_minus1(double x) {
  const double branch = -std::exp(-1.0);
  if (!(x >= branch && x < 0.0)) {
    throw std::domain_error("lambert_w_minus1: x outside [-1/e, 0)");
  }
  if (x == branch) return -1.0;
  double w;
  const double p2 = 2.0 * (std::exp(1.0) * x + 1.0);
  if (p2 < 0.5) {
    // series about the branch point, W = -1 - p - p^2/3 - ..., p = sqrt(2(ex+1))
    const double p = std::sqrt(std::max(p2, 0.0));
    w = -1.0 - p - p * p / 3.0;
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 1e-14 * std::max(std::abs(x), 1e-300)) break;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    w -= f / denom;
  }
  if (w > -1.0) w = -1.0;  // branch guard against terminal rounding
  return w;
}

Matrix lyapunov_integral(const Matrix& a, const Matrix& q, double t) {
  if (t < 0.0) throw std::domain_error("lyapunov_integral: t < 0");
  detail::require_symmetric(q, 1e-12, "lyapunov_integral");
  const long n = a.rows();
  if (t == 0.0) return Matrix::Zero(n, n);
  // pick tau = t / 2^k with ||A|| tau <= 1 so the Van Loan block stays tame
  int k = 0;
  double tau = t;
  const double nrm = std::max(a.cwiseAbs().colwise().sum().maxCoeff(), 1.0);
  while (tau * nrm > 1.0 && k < 200) {
    tau *= 0.5;
    ++k;
  }
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -a;
  block.topRightCorner(n, n) = q;
  block.bottomRightCorner(n, n) = a.transpose();
  const Matrix f = matrix_exp(block * tau);
  Matrix sigma = f.topRightCorner(n, n) *
                 f.bottomRightCorner(n, n).partialPivLu().solve(
                     Matrix::Identity(n, n));
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  Matrix propagator = matrix_exp(-tau * a);
  for (int i = 0; i < k; ++i) {
    sigma = (propagator * sigma * propagator.transpose() + sigma).eval();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    propagator = (propagator * propagator).eval();
  }
  return sigma;
}

double spectral_norm(const Matrix& a) {
  if (!a.allFinite()) throw std::domain_error("spectral_norm: non-finite input");
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

DecayFit decay_rate_fit(const std::vector<double>& times,
                        const std::vector<double>& values) {
  const std::size_t n = times.size();
  if (n < 8 || values.size() != n) {
    throw std::domain_error("decay_rate_fit: need >= 8 (t, v) samples");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] > 0.0)) throw std::domain_error("decay_rate_fit: v must be > 0");
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::domain_error("decay_rate_fit: t must be strictly increasing");
    }
  }
  const std::size_t lo = n / 2;
  const std::size_t m = n - lo;
  Vector t(m), logv(m);
  for (std::size_t i = 0; i < m; ++i) {
    t(i) = times[lo + i];
    logv(i) = std::log(values[lo + i]);
  }
  Eigen::MatrixX2d design(m, 2);
  design.col(0).setOnes();
  design.col(1) = -t;
  DecayFit best;
  double best_res = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= 4; ++p) {
    Vector y = logv;
    for (std::size_t i = 0; i < m; ++i) y(i) -= p * std::log1p(t(i));
    Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
    const double res = std::sqrt((design * coef - y).squaredNorm() / m);
    if (res < best_res) {
      best_res = res;
      best = DecayFit{coef(1), coef(0), p, res};
    }
  }
  return best;
}

}  // namespace kramers
