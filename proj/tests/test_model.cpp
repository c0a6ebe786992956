#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/benchmarks.hpp"
#include "safenet/model.hpp"
#include "safenet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace safenet;

namespace {

// Compares two unordered vertex collections entrywise within `tol`.
bool same_corners(std::vector<Vector> got, std::vector<std::pair<double, double>> expect, double tol) {
  if (got.size() != expect.size()) return false;
  auto key = [](double a, double b) { return std::make_pair(a, b); };
  std::vector<std::pair<double, double>> flat;
  for (const Vector& v : got) flat.push_back(key(v[0], v[1]));
  std::sort(flat.begin(), flat.end());
  std::sort(expect.begin(), expect.end());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    if (std::abs(flat[k].first - expect[k].first) > tol) return false;
    if (std::abs(flat[k].second - expect[k].second) > tol) return false;
  }
  return true;
}

bool is_selection_matrix(const Matrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    int ones = 0;
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c) == 1.0)
        ++ones;
      else if (m(r, c) != 0.0)
        return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lifting matrices select own state and sorted neighborhoods") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  REQUIRE(model.num_agents() == 3);
  CHECK(model.state_dim() == 6);
  CHECK(model.input_dim() == 3);

  for (int i = 0; i < model.num_agents(); ++i) {
    const Matrix& t = model.T(i);
    const Matrix& w = model.W(i);
    CHECK(is_selection_matrix(t));
    CHECK(is_selection_matrix(w));
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 6);
    CHECK(w.rows() == model.neighborhood_dim(i));
    // own state appears inside the neighborhood at the advertised offset
    const int at = model.offset_in_neighborhood(i, i);
    CHECK((w.middleRows(at, 2) - t).cwiseAbs().maxCoeff() == 0.0);
  }

  // interior agent of a 3-chain sees everyone, ends see two agents
  CHECK(model.neighborhood_members(0) == std::vector<int>{0, 1});
  CHECK(model.neighborhood_members(1) == std::vector<int>{0, 1, 2});
  CHECK(model.neighborhood_members(2) == std::vector<int>{1, 2});
  CHECK(model.neighborhood_dim(1) == 6);
  CHECK(model.offset_in_neighborhood(1, 2) == 4);
  CHECK_THROWS_AS(model.offset_in_neighborhood(0, 2), std::exception);

  Vector x(6);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(model.own_state(x, 2) == Vector(x.segment(4, 2)));
  const Vector nbr = model.neighborhood_state(x, 2);
  REQUIRE(nbr.size() == 4);
  CHECK(nbr[0] == 3.0);
  CHECK(nbr[3] == 6.0);
}

TEST_CASE("chain interior dynamics at nominal parameters") {
  // Forward-Euler mass with two nominal spring/damper couplings
  // (k = 2, d = 1, dt = 0.05, m = 1): the own-state block is
  //   [[1, 0.05], [-(dt/m)(k+k), 1 - (dt/m)(d+d)]] = [[1, 0.05], [-0.2, 0.9]].
  const NetworkModel model = build_mass_spring_damper_chain({});
  const int i = 1;
  const Vector theta_i = model.theta_slice(model.nominal_theta(), i);
  const auto [a_nbr, b_own] = model.agent(i).dynamics.eval(theta_i);
  const int at = model.offset_in_neighborhood(i, i);
  const Matrix own = a_nbr.middleCols(at, 2);
  Matrix expect(2, 2);
  expect << 1.0, 0.05, -0.2, 0.9;
  CHECK((own - expect).cwiseAbs().maxCoeff() < 1e-15);

  // neighbor blocks carry the reaction terms +dt·k and +dt·d
  const Matrix left = a_nbr.middleCols(model.offset_in_neighborhood(i, 0), 2);
  CHECK(left(1, 0) == doctest::Approx(0.1));
  CHECK(left(1, 1) == doctest::Approx(0.05));
  CHECK(left(0, 0) == 0.0);

  Matrix b_expect(2, 1);
  b_expect << 0.0, 0.05;
  CHECK((b_own - b_expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-agent chain assembles the frozen global matrices") {
  ChainParams params;
  params.num_agents = 2;
  const NetworkModel model = build_mass_spring_damper_chain(params);
  const auto [a, b] = model.assemble_global(model.nominal_theta());

  Matrix a_expect(4, 4);
  // hand-assembled forward-Euler chain with k = 2, d = 1, dt = 0.05:
  a_expect << 1.0, 0.05, 0.0, 0.0,      //
      -0.1, 0.95, 0.1, 0.05,            //
      0.0, 0.0, 1.0, 0.05,              //
      0.1, 0.05, -0.1, 0.95;
  Matrix b_expect = Matrix::Zero(4, 2);
  b_expect(1, 0) = 0.05;
  b_expect(3, 1) = 0.05;

  CHECK((a - a_expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((b - b_expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("per-agent stepping matches the assembled global dynamics") {
  Rng rng(2024);
  ChainParams params;
  params.num_agents = 5;
  const NetworkModel model = build_mass_spring_damper_chain(params);
  for (int trial = 0; trial < 25; ++trial) {
    const Vector theta = model.sample_theta(rng);
    const auto [a, b] = model.assemble_global(theta);
    const Vector x = rng.uniform_vector(-Vector::Ones(10), Vector::Ones(10));
    const Vector u = rng.uniform_vector(-Vector::Ones(5), Vector::Ones(5));
    const Vector direct = model.step(x, u, theta);
    const Vector via_global = a * x + b * u;
    CHECK((direct - via_global).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("parameter boxes and vertex enumeration") {
  ChainParams params;
  const NetworkModel model = build_mass_spring_damper_chain(params);
  // end agent: one neighbor, parameters (k, d) with ±20% intervals
  const UncertainDynamics& dyn = model.agent(0).dynamics;
  REQUIRE(dyn.param_count() == 2);
  CHECK(dyn.theta_lo[0] == doctest::Approx(1.6));
  CHECK(dyn.theta_hi[0] == doctest::Approx(2.4));
  CHECK(dyn.theta_lo[1] == doctest::Approx(0.8));
  CHECK(dyn.theta_hi[1] == doctest::Approx(1.2));

  const auto vertices = theta_vertices(dyn);
  REQUIRE(vertices.size() == 4);
  CHECK(same_corners(vertices, {{1.6, 0.8}, {1.6, 1.2}, {2.4, 0.8}, {2.4, 1.2}}, 1e-12));

  // interior agent couples to two edges: 4 parameters, 16 corners
  CHECK(theta_vertices(model.agent(1).dynamics).size() == 16);
  CHECK_THROWS_AS(theta_vertices(model.agent(1).dynamics, 8), std::length_error);

  // degenerate dimensions collapse
  UncertainDynamics flat = dyn;
  flat.theta_lo[1] = flat.theta_hi[1] = 1.0;
  CHECK(theta_vertices(flat).size() == 2);

  CHECK(dyn.theta_in_box(dyn.nominal_theta()));
  Vector outside = dyn.nominal_theta();
  outside[0] = 3.0;
  CHECK_FALSE(dyn.theta_in_box(outside));
}

TEST_CASE("planar benchmark parameter corners") {
  PlanarParams params;
  params.gamma = 0.2;
  const NetworkModel model = build_planar_coupled_masses(params);
  // end agent: own drag plus one coupling, each within ±20%
  const auto vertices = theta_vertices(model.agent(0).dynamics);
  REQUIRE(vertices.size() == 4);
  CHECK(same_corners(vertices, {{0.08, 0.4}, {0.08, 0.6}, {0.12, 0.4}, {0.12, 0.6}}, 1e-12));
}

TEST_CASE("planar drag damps and coupling attracts at nominal") {
  const NetworkModel model = build_planar_coupled_masses({});
  const int i = 0;  // end agent, one neighbor
  const Vector theta_i = model.theta_slice(model.nominal_theta(), i);
  const auto [a_nbr, b_own] = model.agent(i).dynamics.eval(theta_i);
  const int own = model.offset_in_neighborhood(i, i);
  const int other = model.offset_in_neighborhood(i, 1);
  // vx row: 1 - dt·drag - dt·coupling on own vx, +dt·coupling on neighbor vx
  CHECK(a_nbr(1, own + 1) == doctest::Approx(1.0 - 0.05 * 0.1 - 0.05 * 0.5));
  CHECK(a_nbr(1, other + 1) == doctest::Approx(0.05 * 0.5));
  CHECK(a_nbr(3, own + 3) == doctest::Approx(1.0 - 0.05 * 0.1 - 0.05 * 0.5));
  CHECK(a_nbr(3, other + 3) == doctest::Approx(0.05 * 0.5));
  // positions integrate their own velocities only
  CHECK(a_nbr(0, own) == 1.0);
  CHECK(a_nbr(0, own + 1) == doctest::Approx(0.05));
  CHECK(a_nbr(0, own + 3) == 0.0);
  // one thrust input drives both axes
  REQUIRE(b_own.cols() == 1);
  CHECK(b_own(1, 0) == doctest::Approx(0.05));
  CHECK(b_own(3, 0) == doctest::Approx(0.05));
  CHECK(b_own(0, 0) == 0.0);
}

TEST_CASE("constraint residuals and admissibility") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  Vector x = Vector::Zero(6);
  CHECK(model.state_residual(x) == doctest::Approx(-1.0));  // slack of |p| <= 1
  CHECK(model.state_admissible(x));
  x[0] = 1.2;
  CHECK(model.state_residual(x) == doctest::Approx(0.2));
  CHECK_FALSE(model.state_admissible(x));
  CHECK(model.state_admissible(x, 0.25));

  Vector u = Vector::Zero(3);
  CHECK(model.input_residual(u) == doctest::Approx(-1.0));
  u[2] = -1.01;
  CHECK(model.input_residual(u) == doctest::Approx(0.01));
  CHECK_FALSE(model.input_admissible(u));
}

TEST_CASE("sampling respects boxes, pins, and constraints") {
  Rng rng(77);
  const NetworkModel chain = build_mass_spring_damper_chain({});
  for (int k = 0; k < 100; ++k) {
    const Vector x = chain.sample_state(rng);
    CHECK(chain.state_admissible(x, 1e-12));
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(x[2 * i]) <= 1.0);
      CHECK(std::abs(x[2 * i + 1]) <= 3.0);
    }
  }
  const NetworkModel planar = build_planar_coupled_masses({});
  for (int k = 0; k < 100; ++k) {
    const Vector x = planar.sample_state(rng);
    CHECK(planar.state_admissible(x, 1e-12));
    for (int i = 0; i < 4; ++i) {
      CHECK(x[4 * i + 1] == 0.0);  // velocities pinned at zero
      CHECK(x[4 * i + 3] == 0.0);
      CHECK(std::abs(x[4 * i]) + std::abs(x[4 * i + 2]) <= 10.0);
    }
  }
  const Vector theta = planar.sample_theta(rng);
  for (int i = 0; i < 4; ++i) {
    CHECK(planar.agent(i).dynamics.theta_in_box(planar.theta_slice(theta, i)));
  }
}

TEST_CASE("serialization round-trips exactly") {
  Rng rng(31);
  for (const bool planar : {false, true}) {
    const NetworkModel model =
        planar ? build_planar_coupled_masses({}) : build_mass_spring_damper_chain({});
    const NetworkModel back = NetworkModel::from_json(model.to_json());
    CHECK(back.fingerprint() == model.fingerprint());
    CHECK(back.name() == model.name());
    CHECK(back.num_agents() == model.num_agents());
    const Vector theta = model.sample_theta(rng);
    const Vector x = rng.uniform_vector(-Vector::Ones(model.state_dim()), Vector::Ones(model.state_dim()));
    const Vector u = rng.uniform_vector(-Vector::Ones(model.input_dim()), Vector::Ones(model.input_dim()));
    CHECK((model.step(x, u, theta) - back.step(x, u, theta)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fingerprints separate different models") {
  ChainParams a, b;
  b.stiffness = 2.0000001;
  CHECK(build_mass_spring_damper_chain(a).fingerprint() !=
        build_mass_spring_damper_chain(b).fingerprint());
}

TEST_CASE("model construction validates shapes") {
  const NetworkModel good = build_mass_spring_damper_chain({});
  // rebuild with a corrupted agent: A0 must map the neighborhood, not own state
  std::vector<Agent> agents;
  for (int i = 0; i < good.num_agents(); ++i) agents.push_back(good.agent(i));
  agents[0].dynamics.A0 = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(NetworkModel(good.graph(), agents, good.sampling_lo(), good.sampling_hi(), "bad"),
                  std::invalid_argument);

  PolytopicSet not_interior;
  not_interior.A = Matrix::Identity(1, 1);
  not_interior.b = Vector::Zero(1);
  CHECK_THROWS_AS(not_interior.require_origin_interior("test"), std::invalid_argument);
}
