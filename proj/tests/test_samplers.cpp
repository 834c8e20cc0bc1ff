#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kramers/noise.hpp"
#include "kramers/samplers.hpp"

using namespace kramers;

namespace {

std::shared_ptr<QuadraticObjective> unit_quadratic(int d) {
  return quadratic(Matrix::Identity(d, d), Vector::Zero(d), 0.0);
}

}  // namespace

TEST_CASE("step rules on worked examples") {
  Vector x = Vector::Zero(2), grad = Vector::Zero(2), xi = Vector::Zero(2);

  // LD: grad = 0, xi = 0 is a fixed point
  CHECK((ld_step(x, grad, 0.1, 1.0, xi) - x).norm() == 0.0);
  grad << 1.0, 0.0;
  const Vector x1 = ld_step(x, grad, 0.1, 1.0, xi);
  CHECK(x1(0) == doctest::Approx(-0.1));
  CHECK(x1(1) == doctest::Approx(0.0));

  // ULD fixed point and position update with the old velocity
  Vector v = Vector::Zero(2);
  auto [xu, vu] = uld_step(x, v, Vector::Zero(2), 0.5, 2.0, 1.0, xi);
  CHECK((xu - x).norm() == 0.0);
  CHECK((vu - v).norm() == 0.0);
  v << 1.0, 0.0;
  auto [xu2, vu2] = uld_step(x, v, grad, 0.5, 2.0, 1.0, xi);
  CHECK(xu2(0) == doctest::Approx(0.5));  // x + eta * v_old
  // hand arithmetic: v' = v - eta (gamma v + grad) = 1 - 0.5 (2 + 1) = -0.5
  CHECK(vu2(0) == doctest::Approx(-0.5));

  // NLD drift rotation: x - eta (I + J) grad
  Matrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  const Vector xn = nld_step(x, grad, 0.1, 1.0, j, xi);
  CHECK(xn(0) == doctest::Approx(-0.1));
  CHECK(xn(1) == doctest::Approx(0.1));
  // antisymmetry: <grad, J grad> = 0
  CHECK(grad.dot(j * grad) == doctest::Approx(0.0));
}

TEST_CASE("NLD with J = 0 reproduces LD bit for bit") {
  auto obj = unit_quadratic(2);
  Vector start(2);
  start << 1.3, -0.4;
  SamplerConfig ld;
  ld.algorithm = Algorithm::LD;
  ld.eta = 0.05;
  ld.beta = 2.0;
  ld.max_steps = 2000;
  ld.seed = 42;
  SamplerConfig nld = ld;
  nld.algorithm = Algorithm::NLD;
  nld.j = Matrix::Zero(2, 2);
  const Trajectory a = simulate(*obj, start, ld);
  const Trajectory b = simulate(*obj, start, nld);
  REQUIRE(a.positions.size() == b.positions.size());
  for (std::size_t k = 0; k < a.positions.size(); ++k) {
    CHECK(a.positions[k](0) == b.positions[k](0));
    CHECK(a.positions[k](1) == b.positions[k](1));
  }
}

TEST_CASE("simulate is deterministic given the seed") {
  auto obj = unit_quadratic(1);
  Vector start(1);
  start << 2.0;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::ULD;
  cfg.gamma = 2.0;
  cfg.eta = 0.01;
  cfg.beta = 5.0;
  cfg.max_steps = 5000;
  cfg.seed = 7;
  const Trajectory a = simulate(*obj, start, cfg);
  const Trajectory b = simulate(*obj, start, cfg);
  for (std::size_t k = 0; k < a.positions.size(); ++k) {
    CHECK(a.positions[k](0) == b.positions[k](0));
    CHECK(a.velocities[k](0) == b.velocities[k](0));
  }
  cfg.seed = 8;
  const Trajectory c = simulate(*obj, start, cfg);
  CHECK(a.positions.back()(0) != c.positions.back()(0));
}

TEST_CASE("simulate matches the public step rules exactly") {
  Matrix h(2, 2);
  h << 1.0, 0.2, 0.2, 2.0;
  auto obj = quadratic(h, Vector::Ones(2), 0.0);
  Vector start(2);
  start << 0.4, -1.1;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.03;
  cfg.beta = 1.7;
  cfg.max_steps = 3;
  cfg.seed = 99;
  const Trajectory traj = simulate(*obj, start, cfg);
  Vector x = start;
  for (int k = 1; k <= 3; ++k) {
    Vector xi(2);
    for (int i = 0; i < 2; ++i) xi(i) = noise::gaussian(cfg.seed, 0, k, i);
    x = ld_step(x, obj->gradient(x), cfg.eta, cfg.beta, xi);
    CHECK((traj.positions[k] - x).norm() == 0.0);
  }
}

TEST_CASE("noiseless LD contracts to the minimizer at the expected pace") {
  auto obj = unit_quadratic(2);
  Vector start(2);
  start << 3.0, -1.0;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.1;
  cfg.beta = 1e18;  // effectively noiseless
  cfg.max_steps = 1000;
  cfg.seed = 1;
  cfg.record_stride = 1;
  const Trajectory traj = simulate(*obj, start, cfg);
  // contraction-rate oracle (1 - eta m)^k against the relative target
  const double target = 1e-6;
  const long k_pred =
      static_cast<long>(std::ceil(std::log(target) / std::log(1.0 - 0.1)));
  long k_hit = -1;
  for (long k = 0; k < static_cast<long>(traj.positions.size()); ++k) {
    if (traj.positions[k].norm() <= target * start.norm()) {
      k_hit = k;
      break;
    }
  }
  REQUIRE(k_hit >= 0);
  CHECK(std::abs(k_hit - k_pred) <= 3);
}

TEST_CASE("divergence guard throws instead of producing NaNs") {
  auto obj = unit_quadratic(1);
  Vector start(1);
  start << 1.0;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 3.0;  // unstable for m = 1: |1 - eta m| = 2
  cfg.beta = 1e12;
  cfg.max_steps = 200;
  cfg.seed = 3;
  CHECK_THROWS_AS(simulate(*obj, start, cfg), std::runtime_error);
}

TEST_CASE("hitting_time start-inside and timeout") {
  auto obj = unit_quadratic(1);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.01;
  cfg.beta = 1e6;
  cfg.max_steps = 100;
  cfg.seed = 5;
  Vector start(1);
  start << 0.0;
  auto stop_always = [](const Vector&) { return true; };
  const HitResult r0 = hitting_time(*obj, start, stop_always, 100.0, cfg);
  CHECK(r0.steps == 0);
  CHECK(r0.via == ExitedVia::Target);

  auto stop_never = [](const Vector&) { return false; };
  const HitResult rt = hitting_time(*obj, start, stop_never, 100.0, cfg);
  CHECK(rt.via == ExitedVia::Timeout);
  CHECK(rt.steps == cfg.max_steps);
}

TEST_CASE("hitting_time deterministic contraction matches the oracle") {
  auto obj = unit_quadratic(1);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.05;
  cfg.beta = 1e12;
  cfg.max_steps = 10000;
  cfg.seed = 5;
  Vector start(1);
  start << 4.0;
  const double ball = 0.01;
  auto stop = [ball](const Vector& x) { return x.norm() < ball; };
  const HitResult r = hitting_time(*obj, start, stop, 100.0, cfg);
  const double k_pred = std::log(ball / 4.0) / std::log(1.0 - 0.05);
  CHECK(r.via == ExitedVia::Target);
  CHECK(std::abs(static_cast<double>(r.steps) - k_pred) <= 2.0);
}

TEST_CASE("batch_hitting streams, thread independence, MC scaling") {
  Vector omega(0);
  auto [dw, land] = double_well(1, 1.0, omega, 0.0);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.01;
  cfg.beta = 3.0;
  cfg.max_steps = 400000;
  cfg.seed = 11;
  auto stop = [&](const Vector& x) { return (x - land.a2).norm() < 0.2; };

  const BatchHitting one = batch_hitting(*dw, land.a1, stop, 5.0, cfg, 64, 1);
  const BatchHitting four = batch_hitting(*dw, land.a1, stop, 5.0, cfg, 64, 4);
  REQUIRE(one.path_steps.size() == four.path_steps.size());
  for (std::size_t p = 0; p < one.path_steps.size(); ++p) {
    CHECK(one.path_steps[p] == four.path_steps[p]);  // schedule independent
  }
  // distinct derived streams: not all equal
  bool distinct = false;
  for (std::size_t p = 1; p < one.path_steps.size(); ++p) {
    distinct = distinct || one.path_steps[p] != one.path_steps[0];
  }
  CHECK(distinct);

  // doubling n_paths shrinks stderr by about sqrt(2)
  const BatchHitting big = batch_hitting(*dw, land.a1, stop, 5.0, cfg, 512, 4);
  const BatchHitting small = batch_hitting(*dw, land.a1, stop, 5.0, cfg, 256, 4);
  CHECK(big.stderr_steps < small.stderr_steps);
  CHECK(big.stderr_steps / small.stderr_steps ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.35));

  CHECK_THROWS_AS(batch_hitting(*dw, land.a1, stop, 5.0, cfg, 1, 1),
                  std::domain_error);
}

TEST_CASE("batch_hitting zero-noise limit is degenerate and exact") {
  auto obj = unit_quadratic(1);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.05;
  cfg.beta = 1e30;
  cfg.max_steps = 2000;
  cfg.seed = 2;
  Vector start(1);
  start << 4.0;
  auto stop = [](const Vector& x) { return x.norm() < 0.01; };
  const BatchHitting b = batch_hitting(*obj, start, stop, 100.0, cfg, 16, 2);
  CHECK(b.stderr_steps == 0.0);
  for (auto s : b.path_steps) CHECK(s == b.path_steps[0]);
}

TEST_CASE("LD stationary variance matches the AR(1) closed form") {
  // X' = (1 - eta m) X + sqrt(2 eta / beta) xi has stationary variance
  // 2 eta / (beta (1 - (1 - eta m)^2)) = 2 / (beta m (2 - eta m))
  auto obj = unit_quadratic(1);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::LD;
  cfg.eta = 0.01;
  cfg.beta = 1.0;
  cfg.max_steps = 2'200'000;
  cfg.seed = 31;
  cfg.record_stride = 1;
  Vector start(1);
  start << 0.0;
  const Trajectory traj = simulate(*obj, start, cfg);
  const std::size_t burn = 200000;
  double s1 = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = burn; k < traj.positions.size(); ++k) {
    s1 += traj.positions[k](0);
    s2 += traj.positions[k](0) * traj.positions[k](0);
    ++n;
  }
  const double var = s2 / n - (s1 / n) * (s1 / n);
  const double ar1 = 2.0 / (1.0 * 1.0 * (2.0 - 0.01));
  CHECK(var == doctest::Approx(ar1).epsilon(0.05));
}

TEST_CASE("config validation rejects bad parameters") {
  auto obj = unit_quadratic(2);
  SamplerConfig cfg;
  cfg.eta = -1.0;
  CHECK_THROWS_AS(cfg.validate(2), std::domain_error);
  cfg.eta = 0.1;
  cfg.algorithm = Algorithm::ULD;
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(2), std::domain_error);
  cfg.algorithm = Algorithm::NLD;
  cfg.j = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(cfg.validate(2), std::domain_error);
}
