#pragma once

#include "safenet/linalg.hpp"

#include <cstdint>
#include <random>

namespace safenet {

// Deterministic random number generator. All stochastic components of the
// toolkit draw through this wrapper so that a (master seed, stream id) pair
// reproduces a run bit-for-bit on any platform: the raw engine is the
// portable std::mt19937_64 and every distribution is implemented here
// instead of relying on implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent child stream: mixes (seed, stream) through splitmix64 so
  // that derived streams do not overlap for distinct stream ids.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal via Box-Muller.
  double normal();

  Vector uniform_vector(const Vector& lo, const Vector& hi);
  Vector normal_vector(int n);
  // Uniform direction on the unit sphere in R^n.
  Vector unit_direction(int n);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace safenet
