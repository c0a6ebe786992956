#include "safenet/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safenet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(~stream)));
}

double Rng::uniform() {
  // 53 bits of mantissa -> uniform double in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("Rng::uniform: lo > hi");
  return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span);
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return lo + static_cast<std::int64_t>(v % span);
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

Vector Rng::uniform_vector(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Rng::uniform_vector: size mismatch");
  Vector out(lo.size());
  for (Eigen::Index k = 0; k < lo.size(); ++k) out[k] = uniform(lo[k], hi[k]);
  return out;
}

Vector Rng::normal_vector(int n) {
  Vector out(n);
  for (int k = 0; k < n; ++k) out[k] = normal();
  return out;
}

Vector Rng::unit_direction(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::unit_direction: n must be positive");
  Vector v = normal_vector(n);
  double norm = v.norm();
  while (norm < 1e-12) {
    v = normal_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace safenet
