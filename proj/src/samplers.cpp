#include "kramers/samplers.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "kramers/noise.hpp"

namespace kramers {

void SamplerConfig::validate(int dim) const {
  if (!(eta > 0.0)) throw std::domain_error("SamplerConfig: eta > 0 required");
  if (!(beta > 0.0)) throw std::domain_error("SamplerConfig: beta > 0 required");
  if (algorithm == Algorithm::ULD && !(gamma > 0.0)) {
    throw std::domain_error("SamplerConfig: ULD requires gamma > 0");
  }
  if (algorithm == Algorithm::NLD) {
    if (j.rows() != dim || j.cols() != dim) {
      throw std::domain_error("SamplerConfig: NLD requires a dim x dim J");
    }
    const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
    if ((j + j.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::domain_error("SamplerConfig: J must be antisymmetric");
    }
  }
  if (max_steps < 1) throw std::domain_error("SamplerConfig: max_steps >= 1");
  if (record_stride < 1) throw std::domain_error("SamplerConfig: record_stride >= 1");
}

Vector ld_step(const Vector& x, const Vector& grad, double eta, double beta,
               const Vector& xi) {
  return x - eta * grad + std::sqrt(2.0 * eta / beta) * xi;
}

std::pair<Vector, Vector> uld_step(const Vector& x, const Vector& v,
                                   const Vector& grad, double eta, double gamma,
                                   double beta, const Vector& xi) {
  Vector v_next =
      v - eta * (gamma * v + grad) + std::sqrt(2.0 * gamma * eta / beta) * xi;
  Vector x_next = x + eta * v;  // position update uses the old velocity
  return {x_next, v_next};
}

Vector nld_step(const Vector& x, const Vector& grad, double eta, double beta,
                const Matrix& j, const Vector& xi) {
  const Vector drift = grad + j * grad;
  return x - eta * drift + std::sqrt(2.0 * eta / beta) * xi;
}

namespace {

// Shared single-chain driver. Calls on_state(k, x, v) after every step
// (and for k = 0); returns the first step where stop_now fired, or -1.
template <typename StateFn>
std::int64_t run_chain(const Objective& obj, const Vector& start,
                       const SamplerConfig& cfg, const Vector& v_start,
                       std::uint64_t stream, StateFn&& on_state) {
  const int d = obj.dim();
  const double guard = 1e6 * (1.0 + obj.meta().R);
  const double guard2 = guard * guard;
  std::vector<double> x(start.data(), start.data() + d);
  std::vector<double> v(d, 0.0);
  if (cfg.algorithm == Algorithm::ULD) {
    for (int i = 0; i < d; ++i) v[i] = v_start(i);
  }
  std::vector<double> g(d), jg(d);
  const bool is_uld = cfg.algorithm == Algorithm::ULD;
  const bool is_nld = cfg.algorithm == Algorithm::NLD;
  const double noise_scale = is_uld
                                 ? std::sqrt(2.0 * cfg.gamma * cfg.eta / cfg.beta)
                                 : std::sqrt(2.0 * cfg.eta / cfg.beta);
  if (on_state(0, x.data(), v.data())) return 0;
  for (std::int64_t k = 1; k <= cfg.max_steps; ++k) {
    obj.gradient_into(x.data(), g.data());
    if (is_nld) {
      for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        for (int c = 0; c < d; ++c) acc += cfg.j(r, c) * g[c];
        jg[r] = acc;
      }
      for (int i = 0; i < d; ++i) g[i] += jg[i];
    }
    if (is_uld) {
      for (int i = 0; i < d; ++i) {
        const double xi = noise::gaussian(cfg.seed, stream, k, i);
        const double v_old = v[i];
        v[i] = v_old - cfg.eta * (cfg.gamma * v_old + g[i]) + noise_scale * xi;
        x[i] += cfg.eta * v_old;
      }
    } else {
      for (int i = 0; i < d; ++i) {
        const double xi = noise::gaussian(cfg.seed, stream, k, i);
        x[i] = x[i] - cfg.eta * g[i] + noise_scale * xi;
      }
    }
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += x[i] * x[i];
    if (!(n2 < guard2)) {
      if (!std::isfinite(n2)) {
        throw std::runtime_error("simulate: non-finite state encountered");
      }
      throw std::runtime_error("simulate: trajectory diverged past the guard radius");
    }
    if (on_state(k, x.data(), v.data())) return k;
  }
  return -1;
}

}  // namespace

Trajectory simulate(const Objective& obj, const Vector& start,
                    const SamplerConfig& config,
                    const std::optional<Vector>& v_start) {
  config.validate(obj.dim());
  const int d = obj.dim();
  const Vector v0 = v_start.value_or(Vector::Zero(d));
  Trajectory traj;
  traj.config = config;
  const bool keep_v = config.algorithm == Algorithm::ULD;
  run_chain(obj, start, config, v0, /*stream=*/0,
            [&](std::int64_t k, const double* x, const double* v) {
              if (k % config.record_stride == 0 || k == config.max_steps) {
                traj.positions.emplace_back(Eigen::Map<const Vector>(x, d));
                if (keep_v) {
                  traj.velocities.emplace_back(Eigen::Map<const Vector>(v, d));
                }
                traj.step_indices.push_back(k);
              }
              return false;
            });
  return traj;
}

HitResult hitting_time(const Objective& obj, const Vector& start,
                       const std::function<bool(const Vector&)>& stop,
                       double domain_radius, const SamplerConfig& config,
                       const std::optional<Vector>& v_start,
                       std::uint64_t stream) {
  config.validate(obj.dim());
  const int d = obj.dim();
  const Vector v0 = v_start.value_or(Vector::Zero(d));
  const double dom2 = domain_radius * domain_radius;
  HitResult res;
  Vector buf(d);
  const std::int64_t hit =
      run_chain(obj, start, config, v0, stream,
                [&](std::int64_t, const double* x, const double*) {
                  buf = Eigen::Map<const Vector>(x, d);
                  if (stop(buf)) {
                    res.via = ExitedVia::Target;
                    return true;
                  }
                  if (buf.squaredNorm() > dom2) {
                    res.via = ExitedVia::Boundary;
                    return true;
                  }
                  return false;
                });
  if (hit < 0) {
    res.via = ExitedVia::Timeout;
    res.steps = config.max_steps;
  } else {
    res.steps = hit;
  }
  return res;
}

BatchHitting batch_hitting(const Objective& obj, const Vector& start,
                           const std::function<bool(const Vector&)>& stop,
                           double domain_radius, const SamplerConfig& config,
                           int n_paths, int threads,
                           const std::optional<Vector>& v_start) {
  if (n_paths < 2) throw std::domain_error("batch_hitting: n_paths >= 2 required");
  config.validate(obj.dim());
  BatchHitting out;
  out.path_steps.assign(n_paths, -1);
  out.path_via.assign(n_paths, ExitedVia::Timeout);

  auto worker = [&](int first, int last) {
    for (int p = first; p < last; ++p) {
      const HitResult r = hitting_time(obj, start, stop, domain_radius, config,
                                       v_start, /*stream=*/1 + p);
      out.path_via[p] = r.via;
      out.path_steps[p] = r.via == ExitedVia::Timeout ? -1 : r.steps;
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    worker(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_paths + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int first = t * chunk;
      const int last = std::min(n_paths, first + chunk);
      if (first < last) pool.emplace_back(worker, first, last);
    }
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sum2 = 0.0;
  std::int64_t n_ok = 0;
  for (int p = 0; p < n_paths; ++p) {
    switch (out.path_via[p]) {
      case ExitedVia::Target: ++out.n_target; break;
      case ExitedVia::Boundary: ++out.n_boundary; break;
      case ExitedVia::Timeout: ++out.n_timeout; break;
    }
    if (out.path_steps[p] >= 0) {
      sum += static_cast<double>(out.path_steps[p]);
      sum2 += static_cast<double>(out.path_steps[p]) * out.path_steps[p];
      ++n_ok;
    }
  }
  out.timeout_fraction = static_cast<double>(out.n_timeout) / n_paths;
  if (n_ok == 0) throw std::runtime_error("batch_hitting: all paths timed out");
  out.mean_steps = sum / n_ok;
  if (n_ok > 1) {
    const double var = (sum2 - sum * sum / n_ok) / (n_ok - 1);
    out.stderr_steps = std::sqrt(std::max(var, 0.0) / n_ok);
  }
  return out;
}

}  // namespace kramers
