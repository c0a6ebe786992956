#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/benchmarks.hpp"
#include "safenet/partition.hpp"
#include "safenet/rng.hpp"

#include <cmath>

using namespace safenet;

TEST_CASE("every cell contains its own seed") {
  const NetworkModel model = build_planar_coupled_masses({});
  for (const std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const Partition partition = make_partition(model, 8, seed);
    REQUIRE(partition.size() == 8);
    for (const Region& region : partition.regions) {
      CHECK(region.contains(region.seed, 1e-9));
      CHECK(model.state_admissible(region.seed, 1e-9));
    }
  }
}

TEST_CASE("cell membership agrees with nearest-seed classification") {
  // Monte-Carlo oracle: a sampled admissible point lies in the cell of its
  // nearest seed and (strictly inside) in no other cell.
  Rng rng(123);
  const NetworkModel model = build_planar_coupled_masses({});
  const Partition partition = make_partition(model, 6, 77);
  const auto seeds = partition.seeds();

  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vector x = model.sample_state(rng);
    int nearest = 0;
    double best = (x - seeds[0]).squaredNorm();
    bool ambiguous = false;
    for (int j = 1; j < partition.size(); ++j) {
      const double d = (x - seeds[j]).squaredNorm();
      if (std::abs(d - best) < 1e-9) ambiguous = true;
      if (d < best) {
        best = d;
        nearest = j;
        ambiguous = false;
      }
    }
    if (ambiguous) continue;  // knife-edge draws prove nothing either way
    ++checked;
    CHECK(locate(x, partition) == nearest);
    CHECK(partition.region(nearest).contains(x, 1e-9));
    for (int j = 0; j < partition.size(); ++j) {
      if (j == nearest) continue;
      // strictly interior to another cell would contradict the bisectors
      CHECK_FALSE(partition.region(j).contains(x, -1e-7));
    }
  }
  CHECK(checked > 1900);
}

TEST_CASE("single-region partition covers the admissible samples") {
  Rng rng(5);
  const NetworkModel model = build_mass_spring_damper_chain({});
  const Partition partition = make_partition(model, 1, 3);
  REQUIRE(partition.size() == 1);
  for (int trial = 0; trial < 500; ++trial) {
    CHECK(partition.region(0).contains(model.sample_state(rng), 1e-9));
  }
}

TEST_CASE("locate breaks exact ties toward the lowest index") {
  std::vector<Vector> seeds;
  Vector a(2), b(2);
  a << -1.0, 0.0;
  b << 1.0, 0.0;
  seeds.push_back(a);
  seeds.push_back(b);
  Vector mid(2);
  mid << 0.0, 5.0;  // equidistant
  CHECK(locate(mid, seeds) == 0);
  Vector right(2);
  right << 0.1, 0.0;
  CHECK(locate(right, seeds) == 1);
}

TEST_CASE("partitions serialize exactly") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  const Partition partition = make_partition(model, 5, 11);
  const Partition back = Partition::from_json(partition.to_json());
  CHECK(back.model_fingerprint == partition.model_fingerprint);
  CHECK(back.seed == partition.seed);
  REQUIRE(back.size() == partition.size());
  for (int k = 0; k < partition.size(); ++k) {
    CHECK((back.region(k).seed - partition.region(k).seed).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.region(k).A - partition.region(k).A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.region(k).b - partition.region(k).b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.region(k).index == k);
  }
  CHECK(partition.model_fingerprint == model.fingerprint());
}

TEST_CASE("partitions are deterministic in the seed") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  const Partition p1 = make_partition(model, 4, 123);
  const Partition p2 = make_partition(model, 4, 123);
  const Partition p3 = make_partition(model, 4, 124);
  REQUIRE(p1.size() == p2.size());
  bool identical = true;
  bool differs_from_p3 = false;
  for (int k = 0; k < p1.size(); ++k) {
    identical = identical && (p1.region(k).seed - p2.region(k).seed).cwiseAbs().maxCoeff() == 0.0;
    differs_from_p3 =
        differs_from_p3 || (p1.region(k).seed - p3.region(k).seed).cwiseAbs().maxCoeff() > 0.0;
  }
  CHECK(identical);
  CHECK(differs_from_p3);
}

TEST_CASE("pinned coordinates confine cells to the sampling slice") {
  const NetworkModel model = build_planar_coupled_masses({});
  const Partition partition = make_partition(model, 3, 9);
  // a point off the zero-velocity slice violates the slice rows
  Vector x = partition.region(0).seed;
  x[1] += 0.5;
  CHECK_FALSE(partition.region(0).contains(x, 1e-9));
}
