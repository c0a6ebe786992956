#pragma once

#include "safenet/explicit_filter.hpp"
#include "safenet/graph.hpp"

#include <utility>
#include <vector>

namespace safenet {

// Metropolis-Hastings averaging weights: symmetric, doubly stochastic,
// w_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal absorbs the rest.
// Powers of this matrix drive every node's value to the network average on a
// connected graph.
Matrix metropolis_weights(const CommGraph& graph);

struct ConsensusRun {
  Vector initial;
  Vector final_values;  // per-node estimates after the last sweep
  int iterations = 0;
  double last_change = 0.0;  // max per-node change in the final sweep
  bool converged = false;
};

// Synchronous averaging sweeps v <- W v until the largest per-node change
// drops below `tol` (or max_iterations). The exact average is preserved by
// every sweep, so converged values approximate mean(values) at every node.
ConsensusRun average_consensus(const CommGraph& graph, const Vector& values, double tol = 1e-10,
                               int max_iterations = 200000);

// Distributed membership test for set j of a certified family: each agent
// contributes its own piece |x_i|²_{P_i}, averaging consensus estimates the
// mean, and every agent compares it against (1 + tol)/N. On convergence this
// equals the centralized test Σ_i |x_i|²_{P_i} <= 1 + tol.
struct DistributedMembership {
  std::vector<bool> decisions;  // per agent
  ConsensusRun run;
  bool agree = true;  // all agents reached the same verdict
};

DistributedMembership distributed_membership(const CertifiedSetFamily& family, const NetworkModel& model,
                                             int j, const Vector& x, double tol = 1e-9,
                                             double consensus_tol = 1e-12);

// Flooding minimum over (value, key) pairs, compared lexicographically so
// distinct keys break value ties deterministically. After graph-diameter
// rounds every node holds the global minimum.
struct MinConsensusResult {
  std::vector<double> values;  // per node, after flooding
  std::vector<int> keys;       // per node
  int rounds = 0;
  bool agree = true;
};

MinConsensusResult min_consensus(const CommGraph& graph, const std::vector<std::pair<double, int>>& local);

// Fully distributed backup selection, mirroring best_backup():
//   stage 1, per candidate set b: averaging consensus over the membership
//     pieces |x_i|²_{P_i^b} decides x ∈ set b, and over the tracking costs
//     |u_{L,i} - K_i^b x_{N_i}| estimates the network cost of b;
//   stage 2: flooding min-consensus over each agent's best (cost, b) pair
//     aligns every agent on one winner.
// Returns the per-agent selections (identical on convergence). Throws
// SafetyFault when no set contains x.
struct DistributedBackupResult {
  std::vector<int> selection;  // chosen set index per agent
  bool agree = true;
  int candidate_count = 0;  // sets that passed the membership stage
};

DistributedBackupResult distributed_best_backup(const CertifiedSetFamily& family, const NetworkModel& model,
                                                const Vector& x, const Vector& u_learning,
                                                double tol = 1e-9, double consensus_tol = 1e-12);

}  // namespace safenet
