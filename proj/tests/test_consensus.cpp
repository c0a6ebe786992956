#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/benchmarks.hpp"
#include "safenet/consensus.hpp"
#include "safenet/rng.hpp"

#include <cmath>

using namespace safenet;

TEST_CASE("averaging weights are symmetric and doubly stochastic") {
  for (const int n : {2, 3, 7, 12}) {
    const CommGraph graph = CommGraph::line(n);
    const Matrix w = metropolis_weights(graph);
    REQUIRE(w.rows() == n);
    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((w.rowwise().sum() - Vector::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(w.minCoeff() >= 0.0);
    // off-diagonal entries only on edges, with the stated value
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (graph.adjacent(i, j)) {
          CHECK(w(i, j) ==
                doctest::Approx(1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)))));
        } else {
          CHECK(w(i, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("averaging converges to the exact mean on path graphs") {
  Rng rng(17);
  for (const int n : {3, 25}) {
    const CommGraph graph = CommGraph::line(n);
    for (int trial = 0; trial < 20; ++trial) {
      Vector values(n);
      for (int i = 0; i < n; ++i) values[i] = rng.uniform(-10.0, 10.0);
      const double exact = values.mean();
      const ConsensusRun run = average_consensus(graph, values, 1e-12);
      REQUIRE(run.converged);
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(run.final_values[i] - exact) <= 1e-8);
      }
      // every sweep preserves the network sum
      CHECK(run.final_values.mean() == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("flooding minimum reaches every node in diameter rounds") {
  Rng rng(3);
  for (const int n : {2, 6, 13}) {
    const CommGraph graph = CommGraph::line(n);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<std::pair<double, int>> local;
      for (int i = 0; i < n; ++i) local.push_back({rng.uniform(0.0, 5.0), rng.uniform_int(0, 9)});
      const MinConsensusResult result = min_consensus(graph, local);
      CHECK(result.rounds == graph.diameter());
      CHECK(result.agree);
      auto best = local[0];
      for (const auto& lv : local) best = std::min(best, lv);
      for (int i = 0; i < n; ++i) {
        CHECK(result.values[i] == best.first);
        CHECK(result.keys[i] == best.second);
      }
    }
  }
}

TEST_CASE("flooding minimum breaks value ties by key") {
  const CommGraph graph = CommGraph::line(3);
  const MinConsensusResult result = min_consensus(graph, {{2.0, 5}, {2.0, 1}, {2.0, 7}});
  for (int i = 0; i < 3; ++i) CHECK(result.keys[i] == 1);
}

namespace {

struct Family {
  NetworkModel model;
  CertifiedSetFamily family;

  explicit Family(int num_agents, int regions) : model(make(num_agents)), family() {
    SynthesisOptions options;
    options.workers = 2;
    family = synthesize_family(model, make_partition(model, regions, 5), options);
  }
  static NetworkModel make(int num_agents) {
    ChainParams params;
    params.num_agents = num_agents;
    return build_mass_spring_damper_chain(params);
  }
};

}  // namespace

TEST_CASE("distributed membership matches the centralized test") {
  const Family fx(3, 2);
  REQUIRE(fx.family.size() >= 1);
  Rng rng(29);
  int inside_checked = 0, outside_checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    // mix states inside the sets with arbitrary admissible ones
    Vector x;
    if (trial % 2 == 0) {
      const int j = rng.uniform_int(0, fx.family.size() - 1);
      x = rng.uniform(0.0, 1.2) * sample_boundary_state(fx.family.sets[j].P, fx.model, rng);
      if (!fx.model.state_admissible(x)) continue;
    } else {
      x = fx.model.sample_state(rng);
    }
    for (int j = 0; j < fx.family.size(); ++j) {
      const double value = set_value(fx.family, fx.model, j, x);
      if (std::abs(value - 1.0) < 1e-6) continue;  // knife-edge: either verdict is fine
      const bool centralized = value <= 1.0 + 1e-9;
      const DistributedMembership dm = distributed_membership(fx.family, fx.model, j, x);
      CHECK(dm.agree);
      REQUIRE(dm.decisions.size() == 3);
      for (const bool d : dm.decisions) CHECK(d == centralized);
      (centralized ? inside_checked : outside_checked)++;
    }
  }
  CHECK(inside_checked >= 20);
  CHECK(outside_checked >= 20);
}

TEST_CASE("distributed backup selection matches the centralized filter") {
  const Family fx(3, 3);
  REQUIRE(fx.family.size() >= 2);
  Rng rng(41);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 40; ++trial) {
    const int j = rng.uniform_int(0, fx.family.size() - 1);
    const Vector x = rng.uniform(0.0, 0.98) * sample_boundary_state(fx.family.sets[j].P, fx.model, rng);
    Vector u(fx.model.input_dim());
    for (int d = 0; d < u.size(); ++d) u[d] = rng.uniform(-1.0, 1.0);
    const int centralized = best_backup(fx.family, fx.model, x, u);
    const DistributedBackupResult distributed = distributed_best_backup(fx.family, fx.model, x, u);
    CHECK(distributed.agree);
    CHECK(distributed.candidate_count >= 1);
    REQUIRE(distributed.selection.size() == 3);
    for (const int s : distributed.selection) CHECK(s == centralized);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("distributed backup faults outside the family") {
  const Family fx(3, 1);
  REQUIRE(fx.family.size() == 1);
  Vector x = Vector::Zero(fx.model.state_dim());
  x[0] = 40.0;
  const Vector u = Vector::Zero(fx.model.input_dim());
  CHECK_THROWS_AS(distributed_best_backup(fx.family, fx.model, x, u), SafetyFault);
}

TEST_CASE("consensus rejects disconnected graphs") {
  const CommGraph disconnected(4, {{0, 1}, {2, 3}});
  Vector v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  CHECK_THROWS_AS(average_consensus(disconnected, v), std::invalid_argument);
}
