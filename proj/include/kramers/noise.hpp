#pragma once

#include <cstdint>

namespace kramers {

// Counter-based Gaussian noise. Every draw is a pure function of
// (seed, stream, step, slot), so trajectories are reproducible across
// platforms and thread schedules, and reusing a seed across two
// algorithms yields common random numbers.
namespace noise {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t step, std::uint64_t slot) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ step);
  h = mix64(h ^ slot);
  return h;
}

// uniform in the open interval (0, 1)
inline double uniform01(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse of the standard normal CDF (Wichura's AS 241, PPND16).
// Relative accuracy about 1e-16 over (0,1).
double inverse_normal_cdf(double p);

inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t step, std::uint64_t slot) {
  return inverse_normal_cdf(uniform01(hash_counter(seed, stream, step, slot)));
}

}  // namespace noise

// Convenience stateful wrapper for code that just needs a seeded stream
// (parameter draws in tests, random search). Still counter-based.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  double uniform() { return noise::uniform01(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian() { return noise::inverse_normal_cdf(uniform()); }
  std::uint64_t integer() { return next(); }
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t next() { return noise::hash_counter(seed_, stream_, counter_++, 0); }
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace kramers
