#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kramers/gaussian.hpp"
#include "kramers/objectives.hpp"

namespace kramers {

enum class Algorithm { LD, ULD, NLD };

struct SamplerConfig {
  Algorithm algorithm = Algorithm::LD;
  double eta = 1e-3;
  double beta = 1.0;
  double gamma = 0.0;       // ULD only
  Matrix j;                 // NLD only, antisymmetric
  std::int64_t max_steps = 1'000'000;
  std::uint64_t seed = 0;
  std::int64_t record_stride = 1;

  void validate(int dim) const;
};

struct Trajectory {
  std::vector<Vector> positions;
  std::vector<Vector> velocities;  // ULD only
  std::vector<std::int64_t> step_indices;
  SamplerConfig config;
};

// One discrete step of each algorithm; xi is the caller-supplied standard
// normal draw. These are the exact update rules the samplers iterate.
Vector ld_step(const Vector& x, const Vector& grad, double eta, double beta,
               const Vector& xi);
std::pair<Vector, Vector> uld_step(const Vector& x, const Vector& v,
                                   const Vector& grad, double eta, double gamma,
                                   double beta, const Vector& xi);
Vector nld_step(const Vector& x, const Vector& grad, double eta, double beta,
                const Matrix& j, const Vector& xi);

// Deterministic given config.seed. Initial ULD velocity defaults to zero.
// Aborts with a divergence error when ||X_k|| exceeds 1e6 * (1 + meta.R).
Trajectory simulate(const Objective& obj, const Vector& start,
                    const SamplerConfig& config,
                    const std::optional<Vector>& v_start = {});

enum class ExitedVia { Target, Boundary, Timeout };

struct HitResult {
  std::int64_t steps = 0;
  ExitedVia via = ExitedVia::Timeout;
};

// First k with stop(X_k) true, or with X_k outside the ball of radius
// domain_radius, or a timeout marker at max_steps.
HitResult hitting_time(const Objective& obj, const Vector& start,
                       const std::function<bool(const Vector&)>& stop,
                       double domain_radius, const SamplerConfig& config,
                       const std::optional<Vector>& v_start = {},
                       std::uint64_t stream = 0);

struct BatchHitting {
  double mean_steps = 0.0;    // over non-timeout paths
  double stderr_steps = 0.0;
  std::int64_t n_target = 0;
  std::int64_t n_boundary = 0;
  std::int64_t n_timeout = 0;
  double timeout_fraction = 0.0;
  std::vector<std::int64_t> path_steps;  // -1 marks timeout
  std::vector<ExitedVia> path_via;
};

// Runs n_paths independent chains; path p uses the noise stream derived
// from (config.seed, p), so results do not depend on the thread schedule.
BatchHitting batch_hitting(const Objective& obj, const Vector& start,
                           const std::function<bool(const Vector&)>& stop,
                           double domain_radius, const SamplerConfig& config,
                           int n_paths, int threads = 1,
                           const std::optional<Vector>& v_start = {});

}  // namespace kramers
