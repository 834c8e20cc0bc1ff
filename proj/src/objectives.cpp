#include "kramers/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "kramers/noise.hpp"

namespace kramers {

namespace {

Vector ball_sample(int dim, double radius, CounterRng& rng) {
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.gaussian();
  const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
  const double n = x.norm();
  return n > 0 ? Vector(x * (r / n)) : x;
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix h, Vector b1, double c1)
    : Objective(static_cast<int>(h.rows()), SmoothnessMeta{}, "quadratic"),
      h_(std::move(h)),
      b1_(std::move(b1)),
      c1_(c1) {
  detail::require_symmetric(h_, 1e-12, "quadratic");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h_);
  eig_min_ = es.eigenvalues()(0);
  eig_max_ = es.eigenvalues()(dim_ - 1);
  if (!(eig_min_ > 0.0)) {
    throw std::domain_error("quadratic: H is not positive definite");
  }
  x_star_ = h_.ldlt().solve(b1_);
  const double bn = b1_.norm();
  meta_.M = eig_max_;
  meta_.L = 0.0;
  meta_.A = std::abs(c1_);
  meta_.B = bn;
  meta_.C = eig_max_;
  if (bn == 0.0) {
    meta_.m = eig_min_;
    meta_.b = 0.0;
  } else {
    meta_.m = eig_min_ / 2.0;
    meta_.b = bn * bn / (2.0 * eig_min_);
  }
  meta_.R = std::sqrt(meta_.b / meta_.m);
}

double QuadraticObjective::value(const Vector& x) const {
  return 0.5 * x.dot(h_ * x) - b1_.dot(x) + c1_;
}

Matrix QuadraticObjective::hessian(const Vector&) const { return h_; }

void QuadraticObjective::gradient_into(const double* x, double* g) const {
  Eigen::Map<const Vector> xm(x, dim_);
  Eigen::Map<Vector> gm(g, dim_);
  gm.noalias() = h_ * xm;
  gm -= b1_;
}

DoubleWellObjective::DoubleWellObjective(int dim, double c, Vector omega,
                                         double tilt, double working_radius)
    : Objective(dim, SmoothnessMeta{}, "double_well"),
      c_(c),
      tilt_(tilt),
      working_radius_(working_radius) {
  if (dim < 1) throw std::domain_error("double_well: dim >= 1 required");
  if (!(c > 0.0)) throw std::domain_error("double_well: c > 0 required");
  if (omega.size() != dim - 1) {
    throw std::domain_error("double_well: need dim-1 transverse frequencies");
  }
  if (dim > 1 && omega.minCoeff() <= 0.0) {
    throw std::domain_error("double_well: omega > 0 required");
  }
  omega_sq_ = omega.cwiseProduct(omega);

  // true double well iff the cubic c(x^3 - x) = tilt has three real roots
  const double tilt_max = 2.0 * c / (3.0 * std::sqrt(3.0));
  if (std::abs(tilt) >= tilt_max) {
    throw std::runtime_error("double_well: tilt destroys the double-well structure");
  }

  landscape_.c = c;
  landscape_.omega = omega;
  landscape_.tilt = tilt;
  double r1 = -1.0, r2 = 0.0, r3 = 1.0;  // Newton from the untilted seeds
  if (tilt != 0.0) {
    auto polish = [&](double x0) {
      double x = x0;
      for (int it = 0; it < 100; ++it) {
        const double f = c * (x * x * x - x) - tilt;
        if (std::abs(f) < 1e-12) break;
        x -= f / (c * (3.0 * x * x - 1.0));
      }
      return x;
    };
    r1 = polish(-1.0);
    r2 = polish(0.0);
    r3 = polish(1.0);
  }
  auto embed = [&](double x1) {
    Vector v = Vector::Zero(dim);
    v(0) = x1;
    return v;
  };
  landscape_.a1 = embed(r1);
  landscape_.sigma = embed(r2);
  landscape_.a2 = embed(r3);
  auto hess_at = [&](double x1) {
    Matrix h = Matrix::Zero(dim, dim);
    h(0, 0) = c * (3.0 * x1 * x1 - 1.0);
    for (int i = 1; i < dim; ++i) h(i, i) = omega_sq_(i - 1);
    return h;
  };
  landscape_.hess_a1 = hess_at(r1);
  landscape_.hess_sigma = hess_at(r2);
  landscape_.mu_star_sigma = -landscape_.hess_sigma(0, 0);
  if (!(landscape_.mu_star_sigma > 0.0) || !(landscape_.hess_a1(0, 0) > 0.0)) {
    throw std::runtime_error("double_well: critical-point signature check failed");
  }
  landscape_.delta_f = value(landscape_.sigma) - value(landscape_.a1);

  // metadata on the working ball |x| <= rho
  const double rho = working_radius;
  const double omax = dim > 1 ? omega_sq_.maxCoeff() : 0.0;
  meta_.M = std::max({c * std::abs(3.0 * rho * rho - 1.0), c, omax});
  meta_.L = 6.0 * c * rho;
  meta_.A = 0.0;  // F(0) = 0
  meta_.B = std::abs(tilt);
  meta_.C = std::max(c, omax);
  const double omin = dim > 1 ? omega_sq_.minCoeff() : c / 2.0;
  meta_.m = std::min(c / 2.0, omin);
  // b = max_x1 [ -c x1^4 + (c+m) x1^2 + tilt x1 ]: grid seed, Newton polish
  auto neg_part = [&](double x1) {
    return -c * std::pow(x1, 4) + (c + meta_.m) * x1 * x1 + tilt * x1;
  };
  double b = 0.0, xb = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x1 = -rho + 2.0 * rho * i / 400.0;
    if (neg_part(x1) > b) {
      b = neg_part(x1);
      xb = x1;
    }
  }
  for (int it = 0; it < 60; ++it) {
    const double d1 = -4.0 * c * xb * xb * xb + 2.0 * (c + meta_.m) * xb + tilt;
    const double d2 = -12.0 * c * xb * xb + 2.0 * (c + meta_.m);
    if (d2 >= 0.0 || std::abs(d1) < 1e-15) break;
    xb -= d1 / d2;
  }
  b = std::max(b, neg_part(xb));
  meta_.b = b * (1.0 + 1e-9) + 1e-12;
  meta_.R = std::sqrt(meta_.b / meta_.m);
}

double DoubleWellObjective::value(const Vector& x) const {
  const double x1 = x(0);
  double v = c_ * (std::pow(x1, 4) / 4.0 - x1 * x1 / 2.0) - tilt_ * x1;
  for (int i = 1; i < dim_; ++i) v += 0.5 * omega_sq_(i - 1) * x(i) * x(i);
  return v;
}

Matrix DoubleWellObjective::hessian(const Vector& x) const {
  Matrix h = Matrix::Zero(dim_, dim_);
  h(0, 0) = c_ * (3.0 * x(0) * x(0) - 1.0);
  for (int i = 1; i < dim_; ++i) h(i, i) = omega_sq_(i - 1);
  return h;
}

void DoubleWellObjective::gradient_into(const double* x, double* g) const {
  const double x1 = x[0];
  g[0] = c_ * (x1 * x1 * x1 - x1) - tilt_;
  for (int i = 1; i < dim_; ++i) g[i] = omega_sq_(i - 1) * x[i];
}

std::shared_ptr<QuadraticObjective> quadratic(const Matrix& h, const Vector& b1,
                                              double c1) {
  return std::make_shared<QuadraticObjective>(h, b1, c1);
}

std::pair<std::shared_ptr<DoubleWellObjective>, DoubleWellLandscape>
double_well(int dim, double c, const Vector& omega, double tilt,
            double working_radius) {
  auto obj = std::make_shared<DoubleWellObjective>(dim, c, omega, tilt,
                                                   working_radius);
  return {obj, obj->landscape()};
}

SmoothnessReport verify_smoothness(const Objective& obj, int n_samples,
                                   double radius, std::uint64_t seed) {
  if (n_samples < 10) throw std::domain_error("verify_smoothness: n_samples >= 10");
  CounterRng rng(seed, /*stream=*/101);
  SmoothnessReport rep;
  for (int k = 0; k < n_samples; ++k) {
    const Vector x = ball_sample(obj.dim(), radius, rng);
    const Vector y = ball_sample(obj.dim(), radius, rng);
    const double dxy = (x - y).norm();
    if (dxy < 1e-12) continue;
    rep.grad_ratio_max = std::max(
        rep.grad_ratio_max, (obj.gradient(x) - obj.gradient(y)).norm() / dxy);
    rep.hess_ratio_max =
        std::max(rep.hess_ratio_max,
                 spectral_norm(obj.hessian(x) - obj.hessian(y)) / dxy);
  }
  rep.grad_violation = rep.grad_ratio_max > 1.01 * obj.meta().M;
  rep.hess_violation = rep.hess_ratio_max > 1.01 * obj.meta().L;
  return rep;
}

double dissipativity_margin(const Objective& obj, int n_samples, double radius,
                            std::uint64_t seed, std::optional<double> m,
                            std::optional<double> b) {
  const double mm = m.value_or(obj.meta().m);
  const double bb = b.value_or(obj.meta().b);
  CounterRng rng(seed, /*stream=*/102);
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_samples; ++k) {
    const Vector x = ball_sample(obj.dim(), radius, rng);
    margin = std::min(margin,
                      x.dot(obj.gradient(x)) - mm * x.squaredNorm() + bb);
  }
  return margin;
}

}  // namespace kramers
