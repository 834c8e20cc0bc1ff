#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "kramers/mathkit.hpp"

namespace kramers {

// Assumption-style metadata: (m, b)-dissipativity, gradient Lipschitz
// constant M, Hessian Lipschitz constant L, bounds at the origin A, B, C,
// and the initialization radius R = sqrt(b/m).
struct SmoothnessMeta {
  double m = 0.0;
  double b = 0.0;
  double M = 0.0;
  double L = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double R = 0.0;
};

class Objective {
 public:
  virtual ~Objective() = default;

  int dim() const { return dim_; }
  const SmoothnessMeta& meta() const { return meta_; }
  const std::string& name() const { return name_; }

  virtual double value(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
  // allocation-free gradient for the sampler hot loop
  virtual void gradient_into(const double* x, double* g) const = 0;

  Vector gradient(const Vector& x) const {
    Vector g(dim_);
    gradient_into(x.data(), g.data());
    return g;
  }

 protected:
  Objective(int dim, SmoothnessMeta meta, std::string name)
      : dim_(dim), meta_(meta), name_(std::move(name)) {}
  int dim_;
  SmoothnessMeta meta_;
  std::string name_;
};

// F(x) = x^T H x / 2 - b1^T x + c1 with H symmetric positive definite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix h, Vector b1, double c1);

  double value(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  void gradient_into(const double* x, double* g) const override;

  const Matrix& h() const { return h_; }
  const Vector& b1() const { return b1_; }
  double c1() const { return c1_; }
  const Vector& minimizer() const { return x_star_; }
  // extreme eigenvalues of H
  double eig_min() const { return eig_min_; }
  double eig_max() const { return eig_max_; }

 private:
  Matrix h_;
  Vector b1_;
  double c1_;
  Vector x_star_;
  double eig_min_, eig_max_;
};

// Critical-point summary of the quartic double well
// F(x) = c (x1^4/4 - x1^2/2) + sum_i omega_i^2 x_i^2 / 2 - tilt * x1.
struct DoubleWellLandscape {
  double c = 1.0;
  Vector omega;          // transverse frequencies, d-1 entries
  double tilt = 0.0;
  Vector a1, a2, sigma;  // left minimum, right minimum, saddle
  double delta_f = 0.0;          // F(sigma) - F(a1)
  double mu_star_sigma = 0.0;    // -(negative Hessian eigenvalue at sigma)
  Matrix hess_a1, hess_sigma;
};

class DoubleWellObjective final : public Objective {
 public:
  DoubleWellObjective(int dim, double c, Vector omega, double tilt,
                      double working_radius);

  double value(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  void gradient_into(const double* x, double* g) const override;

  const DoubleWellLandscape& landscape() const { return landscape_; }
  double working_radius() const { return working_radius_; }

 private:
  double c_;
  Vector omega_sq_;
  double tilt_;
  double working_radius_;
  DoubleWellLandscape landscape_;
};

// H must be symmetric positive definite. meta: M = lambda_max, L = 0,
// A = |c1|, B = ||b1||, C = ||H||; dissipativity pair (lambda_min, 0) when
// b1 = 0, else (lambda_min/2, ||b1||^2/(2 lambda_min)).
std::shared_ptr<QuadraticObjective> quadratic(const Matrix& h,
                                              const Vector& b1, double c1);

// Quartic double well; omega holds the dim-1 transverse frequencies.
// Hessian-Lipschitz metadata is stated relative to working_radius (the
// third derivative of the quartic is unbounded globally). Throws a
// structure error when the tilt destroys the two-minima shape.
std::pair<std::shared_ptr<DoubleWellObjective>, DoubleWellLandscape>
double_well(int dim, double c, const Vector& omega, double tilt,
            double working_radius = 5.0);

struct SmoothnessReport {
  double grad_ratio_max = 0.0;   // empirical sup ||grad F(x)-grad F(y)||/||x-y||
  double hess_ratio_max = 0.0;   // same for the Hessian
  bool grad_violation = false;   // empirical > 1.01 * meta.M
  bool hess_violation = false;   // empirical > 1.01 * meta.L
};

SmoothnessReport verify_smoothness(const Objective& obj, int n_samples,
                                   double radius, std::uint64_t seed);

// min over sampled x of <x, grad F(x)> - m ||x||^2 + b
double dissipativity_margin(const Objective& obj, int n_samples, double radius,
                            std::uint64_t seed, std::optional<double> m = {},
                            std::optional<double> b = {});

}  // namespace kramers
