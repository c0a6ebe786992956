#include "safenet/consensus.hpp"

#include <algorithm>
#include <stdexcept>

namespace safenet {

Matrix metropolis_weights(const CommGraph& graph) {
  const int N = graph.num_nodes();
  Matrix W = Matrix::Zero(N, N);
  for (const auto& [a, b] : graph.edges()) {
    const double w = 1.0 / (1.0 + std::max(graph.degree(a), graph.degree(b)));
    W(a, b) = w;
    W(b, a) = w;
  }
  for (int i = 0; i < N; ++i) {
    double off = 0.0;
    for (int j : graph.neighbors(i)) off += W(i, j);
    W(i, i) = 1.0 - off;
  }
  return W;
}

ConsensusRun average_consensus(const CommGraph& graph, const Vector& values, double tol, int max_iterations) {
  if (values.size() != graph.num_nodes())
    throw std::invalid_argument("average_consensus: one value per node required");
  if (!graph.is_connected())
    throw std::invalid_argument("average_consensus: graph must be connected");

  const Matrix W = metropolis_weights(graph);
  ConsensusRun run;
  run.initial = values;
  Vector v = values;
  for (int k = 0; k < max_iterations; ++k) {
    const Vector next = W * v;
    run.last_change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    run.iterations = k + 1;
    if (run.last_change <= tol) {
      run.converged = true;
      break;
    }
  }
  run.final_values = v;
  return run;
}

DistributedMembership distributed_membership(const CertifiedSetFamily& family, const NetworkModel& model,
                                             int j, const Vector& x, double tol, double consensus_tol) {
  const Vector pieces = agent_values(family, model, j, x);
  DistributedMembership out;
  out.run = average_consensus(model.graph(), pieces, consensus_tol);
  const double threshold = (1.0 + tol) / static_cast<double>(model.num_agents());
  out.decisions.resize(static_cast<std::size_t>(model.num_agents()));
  for (int i = 0; i < model.num_agents(); ++i) {
    out.decisions[static_cast<std::size_t>(i)] = out.run.final_values[i] <= threshold;
  }
  out.agree = std::all_of(out.decisions.begin(), out.decisions.end(),
                          [&](bool d) { return d == out.decisions.front(); });
  return out;
}

MinConsensusResult min_consensus(const CommGraph& graph, const std::vector<std::pair<double, int>>& local) {
  const int N = graph.num_nodes();
  if (static_cast<int>(local.size()) != N)
    throw std::invalid_argument("min_consensus: one (value, key) pair per node required");
  if (!graph.is_connected()) throw std::invalid_argument("min_consensus: graph must be connected");

  std::vector<std::pair<double, int>> state = local;
  const int rounds = graph.diameter();
  auto lex_less = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  };
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::pair<double, int>> next = state;
    for (int i = 0; i < N; ++i) {
      for (int nb : graph.neighbors(i)) {
        if (lex_less(state[static_cast<std::size_t>(nb)], next[static_cast<std::size_t>(i)]))
          next[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(nb)];
      }
    }
    state = std::move(next);
  }

  MinConsensusResult out;
  out.rounds = rounds;
  out.values.resize(static_cast<std::size_t>(N));
  out.keys.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    out.values[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].first;
    out.keys[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].second;
  }
  out.agree = std::all_of(out.keys.begin(), out.keys.end(), [&](int k) { return k == out.keys.front(); });
  return out;
}

DistributedBackupResult distributed_best_backup(const CertifiedSetFamily& family, const NetworkModel& model,
                                                const Vector& x, const Vector& u_learning, double tol,
                                                double consensus_tol) {
  const int N = model.num_agents();
  const double threshold = (1.0 + tol) / static_cast<double>(N);

  DistributedBackupResult out;
  // Stage 1: per-set membership and cost averages.
  std::vector<std::pair<double, int>> best_local(static_cast<std::size_t>(N),
                                                 {std::numeric_limits<double>::infinity(), -1});
  for (int b = 0; b < family.size(); ++b) {
    const ConsensusRun member = average_consensus(model.graph(), agent_values(family, model, b, x), consensus_tol);
    Vector costs(N);
    const CertifiedRegion& cert = family.sets.at(b);
    for (int i = 0; i < N; ++i) {
      costs[i] = (u_learning.segment(model.input_offset(i), model.input_dim(i)) -
                  cert.K.at(i) * model.neighborhood_state(x, i))
                     .norm();
    }
    const ConsensusRun cost = average_consensus(model.graph(), costs, consensus_tol);
    bool any_member = false;
    for (int i = 0; i < N; ++i) {
      if (member.final_values[i] > threshold) continue;
      any_member = true;
      const std::pair<double, int> candidate{cost.final_values[i], b};
      auto& best = best_local[static_cast<std::size_t>(i)];
      if (candidate.first < best.first || (candidate.first == best.first && candidate.second < best.second))
        best = candidate;
    }
    if (any_member) ++out.candidate_count;
  }
  if (out.candidate_count == 0) {
    throw SafetyFault("distributed backup selection: state is outside every certified set");
  }

  // Stage 2: align every agent on the globally best (cost, index) pair.
  const MinConsensusResult aligned = min_consensus(model.graph(), best_local);
  out.selection = aligned.keys;
  out.agree = aligned.agree && std::all_of(out.selection.begin(), out.selection.end(),
                                           [](int b) { return b >= 0; });
  return out;
}

}  // namespace safenet
