/**
 * Shared vocabulary for the planning library: fixed-size real vectors,
 * axis-aligned boxes, the seeded random source and the error types.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace vmcts {

template <std::size_t D>
using Vec = std::array<double, D>;

/// Axis-aligned box [lo, hi] in D dimensions.
template <std::size_t D>
struct Box {
  Vec<D> lo{};
  Vec<D> hi{};

  double volume() const {
    double v = 1.0;
    for (std::size_t d = 0; d < D; ++d) v *= hi[d] - lo[d];
    return v;
  }

  double side(std::size_t d) const { return hi[d] - lo[d]; }

  bool contains(const Vec<D>& p) const {
    for (std::size_t d = 0; d < D; ++d)
      if (!(p[d] >= lo[d] && p[d] <= hi[d])) return false;
    return true;
  }
};

template <std::size_t D>
double squared_distance(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

template <std::size_t D>
bool all_finite(const Vec<D>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta + std::numbers::pi, two_pi);
  if (t < 0.0) t += two_pi;
  t -= std::numbers::pi;
  if (t >= std::numbers::pi) t -= two_pi;
  return t;
}

/**
 * Seeded random source. The engine is mt19937_64, whose output sequence is
 * fixed by the standard; the real-valued transforms below are spelled out so
 * that results do not depend on the standard library's distribution code.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derives an independent stream for a sub-task.
  Rng split(std::uint64_t salt) {
    std::seed_seq seq{engine_(), salt, engine_()};
    std::array<std::uint64_t, 1> out{};
    seq.generate(out.begin(), out.end());
    return Rng(out[0] ^ (salt * 0x9E3779B97F4A7C15ULL));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a run seed with a stream tag so that sub-streams never collide.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct EmptyTreeError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vmcts
