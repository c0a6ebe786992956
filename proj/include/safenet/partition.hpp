#pragma once

#include "safenet/model.hpp"

#include <cstdint>
#include <vector>

namespace safenet {

// One Voronoi cell in halfspace form { x : A x <= b }: the bisector rows
// against every other seed, the sampling-box faces, and the model's state
// constraint rows lifted to the global frame. Pinned sampling coordinates
// (lo == hi) appear as an opposing row pair, so cells live on the sampling
// slice.
struct Region {
  int index = -1;
  Vector seed;
  Matrix A;
  Vector b;

  double residual(const Vector& x) const { return (A * x - b).maxCoeff(); }
  bool contains(const Vector& x, double tol = 0.0) const { return residual(x) <= tol; }
};

struct Partition {
  std::uint64_t model_fingerprint = 0;
  std::uint64_t seed = 0;
  std::vector<Region> regions;

  int size() const { return static_cast<int>(regions.size()); }
  const Region& region(int k) const { return regions.at(k); }
  std::vector<Vector> seeds() const;

  nlohmann::json to_json() const;
  static Partition from_json(const nlohmann::json& j);
};

// i.i.d. seeds from the model's sampling distribution.
std::vector<Vector> sample_seeds(const NetworkModel& model, int count, Rng& rng);

// Halfspace descriptions of the Voronoi cells of `seeds`, clipped to the
// sampling box and the state constraints. Every cell contains its own seed.
std::vector<Region> voronoi_cells(const std::vector<Vector>& seeds, const NetworkModel& model);

// Index of the seed nearest to x (Euclidean); ties resolve to the lowest
// index, so every point maps to exactly one cell.
int locate(const Vector& x, const std::vector<Vector>& seeds);
int locate(const Vector& x, const Partition& partition);

Partition make_partition(const NetworkModel& model, int count, std::uint64_t seed);

}  // namespace safenet
