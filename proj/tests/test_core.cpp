#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/graph.hpp"
#include "safenet/linalg.hpp"
#include "safenet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace safenet;

TEST_CASE("fnv1a64 matches reference digests") {
  // Oracle: FNV-1a 64-bit reference values computed by hand from the
  // published offset basis and prime.
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 12638187200555641996ull);
  CHECK(fnv1a64("hello") == 11831194018420276491ull);
}

TEST_CASE("to_hex is fixed-width lowercase") {
  CHECK(to_hex(0) == "0000000000000000");
  CHECK(to_hex(0xdeadbeefull) == "00000000deadbeef");
  CHECK(to_hex(~0ull) == "ffffffffffffffff");
}

TEST_CASE("symmetrize and eigen helpers") {
  Matrix m(2, 2);
  m << 1.0, 3.0, 1.0, 2.0;
  const Matrix s = symmetrize(m);
  CHECK(s(0, 1) == doctest::Approx(2.0));
  CHECK(s(1, 0) == doctest::Approx(2.0));

  Matrix spd(2, 2);
  spd << 2.0, 0.5, 0.5, 1.0;
  CHECK(is_positive_definite(spd));
  CHECK(min_eigenvalue(spd) > 0.0);
  Matrix indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK(min_eigenvalue(indef) == doctest::Approx(-1.0));
  CHECK_FALSE(is_positive_definite(indef));
}

TEST_CASE("block_diag stacks blocks") {
  Matrix a(1, 2);
  a << 1.0, 2.0;
  Matrix b(2, 1);
  b << 3.0, 4.0;
  const Matrix d = block_diag({a, b});
  REQUIRE(d.rows() == 3);
  REQUIRE(d.cols() == 3);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(0, 1) == 2.0);
  CHECK(d(1, 2) == 3.0);
  CHECK(d(2, 2) == 4.0);
  CHECK(d(1, 0) == 0.0);
  CHECK(d(0, 2) == 0.0);
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a = Rng::derive(42, 1);
  Rng b = Rng::derive(42, 1);
  Rng c = Rng::derive(42, 2);
  bool all_equal = true;
  bool any_cross_equal = false;
  for (int i = 0; i < 64; ++i) {
    const double va = a.uniform();
    const double vb = b.uniform();
    const double vc = c.uniform();
    all_equal = all_equal && (va == vb);
    any_cross_equal = any_cross_equal || (va == vc);
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK_FALSE(any_cross_equal);
}

TEST_CASE("rng ranges and vectors") {
  Rng r(7);
  for (int i = 0; i < 200; ++i) {
    const double u = r.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    const int k = r.uniform_int(0, 5);
    CHECK(k >= 0);
    CHECK(k <= 5);
  }
  Vector lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vector v = r.uniform_vector(lo, hi);
    CHECK(v[0] >= -1.0);
    CHECK(v[0] <= 1.0);
    CHECK(v[1] == 0.0);  // degenerate interval pins the coordinate
  }
  const Vector dir = r.unit_direction(5);
  CHECK(dir.norm() == doctest::Approx(1.0));
}

TEST_CASE("rng normal has sane first moments") {
  Rng r(123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("line graph structure") {
  const CommGraph g = CommGraph::line(4);
  CHECK(g.num_nodes() == 4);
  CHECK(static_cast<int>(g.edges().size()) == 3);
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0, 2});
  CHECK(g.closed_neighborhood(2) == std::vector<int>{1, 2, 3});
  CHECK(g.degree(1) == 2);
  CHECK(g.adjacent(0, 1));
  CHECK_FALSE(g.adjacent(0, 2));
  CHECK(g.is_connected());
  CHECK(g.diameter() == 3);
}

TEST_CASE("graph normalizes and validates edges") {
  const CommGraph g(3, {{2, 0}, {0, 2}, {1, 0}});
  CHECK(static_cast<int>(g.edges().size()) == 2);  // duplicate collapsed, orientation normalized
  CHECK(g.adjacent(0, 2));
  CHECK(g.adjacent(1, 0));
  CHECK_THROWS_AS(CommGraph(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(CommGraph(3, {{0, 3}}), std::invalid_argument);
  const CommGraph disconnected(4, {{0, 1}, {2, 3}});
  CHECK_FALSE(disconnected.is_connected());
  CHECK_THROWS_AS(disconnected.diameter(), std::runtime_error);
}

TEST_CASE("single node graph") {
  const CommGraph g = CommGraph::line(1);
  CHECK(g.num_nodes() == 1);
  CHECK(static_cast<int>(g.edges().size()) == 0);
  CHECK(g.is_connected());
  CHECK(g.diameter() == 0);
  CHECK(g.closed_neighborhood(0) == std::vector<int>{0});
}
