#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kramers/mathkit.hpp"
#include "kramers/noise.hpp"
#include "kramers/spectral.hpp"

using namespace kramers;

namespace {

Matrix random_matrix(int n, CounterRng& rng, double scale) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = scale * rng.gaussian();
  return a;
}

Matrix random_psd(int n, CounterRng& rng) {
  Matrix a = random_matrix(n, rng, 1.0);
  return a * a.transpose();
}

// independent oracle: bisection on w e^w = x over (-50, -1)
double lambert_wm1_bisect(double x) {
  auto f = [x](double w) { return w * std::exp(w) - x; };
  double lo = -50.0, hi = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) * f(hi) <= 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// independent oracle: power iteration on A^T A
double spectral_norm_power(const Matrix& a, int iters = 2000) {
  const Matrix ata = a.transpose() * a;
  Vector v = Vector::Ones(a.cols());
  v.normalize();
  for (int i = 0; i < iters; ++i) {
    v = ata * v;
    v.normalize();
  }
  return std::sqrt(v.dot(ata * v));
}

// independent oracle: composite Simpson quadrature of the covariance integrand
Matrix lyapunov_simpson(const Matrix& a, const Matrix& q, double t, int n) {
  if (n % 2 == 1) ++n;
  const double h = t / n;
  auto f = [&](double s) {
    const Matrix e = matrix_exp(-s * a);
    return Matrix(e * q * e.transpose());
  };
  Matrix acc = f(0.0) + f(t);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return acc * (h / 3.0);
}

}  // namespace

TEST_CASE("matrix_exp basic values") {
  CHECK((matrix_exp(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm() ==
        doctest::Approx(0.0).epsilon(1e-14));

  Matrix d(2, 2);
  d << 1.0, 0.0, 0.0, -2.0;
  const Matrix ed = matrix_exp(d);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(std::abs(ed(0, 1)) < 1e-15);

  Matrix nil(2, 2);
  nil << 0.0, 1.0, 0.0, 0.0;
  const Matrix en = matrix_exp(nil);
  CHECK(en(0, 0) == doctest::Approx(1.0));
  CHECK(en(0, 1) == doctest::Approx(1.0));
  CHECK(en(1, 0) == doctest::Approx(0.0));
  CHECK(en(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("matrix_exp semigroup property on random matrices") {
  CounterRng rng(2024, 1);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    Matrix a = random_matrix(n, rng, 1.0);
    const double nrm = spectral_norm(a);
    if (nrm > 5.0) a *= 5.0 / nrm;
    const Matrix e1 = matrix_exp(a);
    const Matrix e2 = matrix_exp(2.0 * a);
    CHECK((e1 * e1 - e2).norm() <= 1e-9 * e2.norm());
  }
}

TEST_CASE("matrix_exp error paths") {
  Matrix bad(2, 2);
  bad << 1.0, std::nan(""), 0.0, 1.0;
  CHECK_THROWS_AS(matrix_exp(bad), std::domain_error);
  Matrix huge = Matrix::Identity(2, 2) * 1e9;
  CHECK_THROWS_AS(matrix_exp(huge), std::overflow_error);
}

TEST_CASE("psd_sqrt diagonal and random") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Matrix r = psd_sqrt(d);
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));

  CHECK((psd_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() <
        1e-14);

  CounterRng rng(7, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = random_psd(3, rng);
    const Matrix root = psd_sqrt(s);
    CHECK((root * root - s).norm() <= 1e-10 * std::max(1.0, s.norm()));
    CHECK((root - root.transpose()).norm() < 1e-12 * std::max(1.0, root.norm()));
  }
}

TEST_CASE("psd_sqrt rejects bad input") {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(psd_sqrt(asym), std::domain_error);
  Matrix indef = Matrix::Identity(2, 2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(psd_sqrt(indef), std::domain_error);
}

TEST_CASE("psd_sqrt idempotence for diagonal roots") {
  Matrix r = Matrix::Zero(3, 3);
  r(0, 0) = 0.3; r(1, 1) = 1.7; r(2, 2) = 0.0;
  CHECK((psd_sqrt(r * r) - r).norm() <= 1e-10);
}

TEST_CASE("lambert_w_minus1 branch point, oracle match, identity") {
  CHECK(lambert_w_minus1(-std::exp(-1.0)) == doctest::Approx(-1.0));

  const double w01 = lambert_w_minus1(-0.1);
  CHECK(w01 == doctest::Approx(lambert_wm1_bisect(-0.1)).epsilon(1e-8));
  CHECK(w01 == doctest::Approx(-3.577152).epsilon(1e-6));

  CounterRng rng(11, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = -std::exp(-1.0) * rng.uniform();
    if (x >= 0.0 || x < -std::exp(-1.0)) continue;
    const double w = lambert_w_minus1(x);
    CHECK(w <= -1.0);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-12);
  }
}

TEST_CASE("lambert_w_minus1 monotone decreasing and domain errors") {
  double prev = lambert_w_minus1(-0.367);
  for (double x = -0.35; x < -0.0005; x += 0.01) {
    const double w = lambert_w_minus1(x);
    CHECK(w < prev);
    prev = w;
  }
  CHECK_THROWS_AS(lambert_w_minus1(0.0), std::domain_error);
  CHECK_THROWS_AS(lambert_w_minus1(-0.5), std::domain_error);
  CHECK_THROWS_AS(lambert_w_minus1(0.1), std::domain_error);
}

TEST_CASE("lyapunov_integral boundary cases") {
  Matrix a = Matrix::Identity(1, 1);
  Matrix q(1, 1);
  q << 2.0;
  CHECK(lyapunov_integral(a, q, 0.0).norm() == 0.0);
  // scalar OU variance q/(2a) in the long-time limit
  CHECK(lyapunov_integral(a, q, 40.0)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(lyapunov_integral(a, q, -1.0), std::domain_error);
}

TEST_CASE("lyapunov_integral matches Simpson quadrature for the OU block") {
  Matrix h(1, 1);
  h << 1.0;
  const Matrix hg = build_h_gamma(h, 2.0);
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 2.0 * 2.0 / 1.0;  // 2 gamma / beta
  const Matrix sig = lyapunov_integral(hg, q, 1.0);
  const Matrix oracle = lyapunov_simpson(hg, q, 1.0, 2000);
  CHECK((sig - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
}

TEST_CASE("lyapunov_integral ODE residual and additivity") {
  CounterRng rng(5, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(3));
    const Matrix stable = random_psd(n, rng) + Matrix::Identity(n, n);
    const Matrix a = stable + 0.3 * random_matrix(n, rng, 1.0);
    const Matrix q = random_psd(n, rng);
    const double t = 0.4 + rng.uniform();
    const Matrix sig = lyapunov_integral(a, q, t);
    // residual of dSigma/dt = -A Sigma - Sigma A^T + Q via central difference
    const double h = 1e-5;
    const Matrix dsig =
        (lyapunov_integral(a, q, t + h) - lyapunov_integral(a, q, t - h)) /
        (2.0 * h);
    const Matrix resid = dsig + a * sig + sig * a.transpose() - q;
    CHECK(resid.norm() <= 1e-6 * std::max(1.0, q.norm()));
    // additivity: Sigma_{t+s} = e^{-tA} Sigma_s e^{-tA^T} + Sigma_t
    const double s = 0.3 + rng.uniform();
    const Matrix lhs = lyapunov_integral(a, q, t + s);
    const Matrix e = matrix_exp(-t * a);
    const Matrix rhs = e * lyapunov_integral(a, q, s) * e.transpose() + sig;
    CHECK((lhs - rhs).norm() <= 1e-8 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("spectral_norm examples and power-iteration oracle") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0; d(1, 1) = -5.0;
  CHECK(spectral_norm(d) == doctest::Approx(5.0));
  CHECK(spectral_norm(Matrix::Zero(3, 3)) == doctest::Approx(0.0));
  CounterRng rng(13, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(4, rng, 1.0);
    CHECK(spectral_norm(a) ==
          doctest::Approx(spectral_norm_power(a)).epsilon(1e-9));
  }
}

TEST_CASE("decay_rate_fit recovers constructed decays") {
  std::vector<double> ts, vs;
  for (int i = 0; i <= 50; ++i) {
    const double t = 0.1 * i;
    ts.push_back(t);
    vs.push_back(std::exp(-2.0 * t));
  }
  DecayFit fit = decay_rate_fit(ts, vs);
  CHECK(fit.rate == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fit.poly_degree == 0);

  vs.clear();
  for (double t : ts) vs.push_back((1.0 + t) * std::exp(-t));
  fit = decay_rate_fit(ts, vs);
  CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fit.poly_degree == 1);
}

TEST_CASE("decay_rate_fit on the critical H_gamma envelope") {
  // oracle: spectral_norm(matrix_exp(-t H_gamma)) on a dense grid
  const double m = 0.01;
  Matrix h(1, 1);
  h << m;
  const Matrix hg = build_h_gamma(h, 2.0 * std::sqrt(m));
  std::vector<double> ts, vs;
  for (int i = 0; i <= 160; ++i) {
    const double t = i * (140.0 / 160.0);
    ts.push_back(t);
    vs.push_back(spectral_norm(matrix_exp(-t * hg)));
  }
  const DecayFit fit = decay_rate_fit(ts, vs);
  CHECK(fit.rate >= 0.09);
  CHECK(fit.rate <= 0.11);
}

TEST_CASE("decay_rate_fit input validation") {
  std::vector<double> ts{0, 1, 2, 3, 4, 5, 6}, vs{1, 1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(decay_rate_fit(ts, vs), std::domain_error);  // < 8 samples
  ts.push_back(7.0);
  vs.push_back(-1.0);
  CHECK_THROWS_AS(decay_rate_fit(ts, vs), std::domain_error);  // v <= 0
  vs.back() = 1.0;
  ts.back() = 5.0;
  CHECK_THROWS_AS(decay_rate_fit(ts, vs), std::domain_error);  // not increasing
}

TEST_CASE("counter noise statistics and inverse CDF") {
  // inverse CDF round trip against erfc-based CDF
  for (double p : {1e-12, 1e-6, 0.001, 0.3, 0.5, 0.7, 0.999, 1 - 1e-9}) {
    const double x = noise::inverse_normal_cdf(p);
    const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(back == doctest::Approx(p).epsilon(1e-10));
  }
  // moments of the keyed stream
  double s1 = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = noise::gaussian(99, 0, i, 0);
    s1 += g; s2 += g * g; s4 += g * g * g * g;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
  // determinism and stream separation
  CHECK(noise::gaussian(1, 2, 3, 0) == noise::gaussian(1, 2, 3, 0));
  CHECK(noise::gaussian(1, 2, 3, 0) != noise::gaussian(1, 2, 4, 0));
  CHECK(noise::gaussian(1, 2, 3, 0) != noise::gaussian(2, 2, 3, 0));
}
