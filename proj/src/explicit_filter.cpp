#include "safenet/explicit_filter.hpp"

#include <limits>
#include <stdexcept>

namespace safenet {

const char* to_string(MembershipMode mode) {
  switch (mode) {
    case MembershipMode::GlobalSum: return "global-sum";
    case MembershipMode::LocalConservative: return "local-conservative";
  }
  return "unknown";
}

MembershipMode membership_mode_from_string(const std::string& name) {
  if (name == "global-sum") return MembershipMode::GlobalSum;
  if (name == "local-conservative") return MembershipMode::LocalConservative;
  throw std::invalid_argument("unknown membership mode: " + name +
                              " (expected global-sum or local-conservative)");
}

Vector agent_values(const CertifiedSetFamily& family, const NetworkModel& model, int j, const Vector& x) {
  const CertifiedRegion& cert = family.sets.at(j);
  Vector values(model.num_agents());
  for (int i = 0; i < model.num_agents(); ++i) {
    const Vector xi = model.own_state(x, i);
    values[i] = xi.dot(cert.P.at(i) * xi);
  }
  return values;
}

double set_value(const CertifiedSetFamily& family, const NetworkModel& model, int j, const Vector& x) {
  return agent_values(family, model, j, x).sum();
}

std::optional<int> member_set(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                              double tol) {
  for (int j = 0; j < family.size(); ++j) {
    if (set_value(family, model, j, x) <= 1.0 + tol) return j;
  }
  return std::nullopt;
}

namespace {

// Worst-case per-agent successor pieces max_{θ_i vertex} |x⁺_i|²_{P_i} for a
// fixed input. Exact for the whole parameter box: the piece is convex in
// θ_i, and agent i's successor depends on no other agent's parameters.
Vector worst_agent_successor_values(const CertifiedRegion& cert, const NetworkModel& model, const Vector& x,
                                    const Vector& u) {
  Vector worst(model.num_agents());
  for (int i = 0; i < model.num_agents(); ++i) {
    const Vector x_nbr = model.neighborhood_state(x, i);
    const Vector u_i = u.segment(model.input_offset(i), model.input_dim(i));
    double w = -std::numeric_limits<double>::infinity();
    for (const Vector& theta : theta_vertices(model.agent(i).dynamics)) {
      const auto [A, B] = model.agent(i).dynamics.eval(theta);
      const Vector next = A * x_nbr + B * u_i;
      w = std::max(w, next.dot(cert.P.at(i) * next));
    }
    worst[i] = w;
  }
  return worst;
}

}  // namespace

std::optional<int> certify_onestep(const CertifiedSetFamily& family, const NetworkModel& model,
                                   const Vector& x, const Vector& u, MembershipMode mode) {
  if (!model.input_admissible(u, 0.0)) return std::nullopt;
  for (int j = 0; j < family.size(); ++j) {
    const Vector worst = worst_agent_successor_values(family.sets.at(j), model, x, u);
    const bool ok = mode == MembershipMode::GlobalSum
                        ? worst.sum() <= 1.0
                        : worst.maxCoeff() <= 1.0 / static_cast<double>(model.num_agents());
    if (ok) return j;
  }
  return std::nullopt;
}

int best_backup(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                const Vector& u_learning, double tol) {
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int j = 0; j < family.size(); ++j) {
    if (set_value(family, model, j, x) > 1.0 + tol) continue;
    const CertifiedRegion& cert = family.sets.at(j);
    double cost = 0.0;
    for (int i = 0; i < model.num_agents(); ++i) {
      const Vector diff = u_learning.segment(model.input_offset(i), model.input_dim(i)) -
                          cert.K.at(i) * model.neighborhood_state(x, i);
      cost += diff.norm();
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = j;
    }
  }
  if (best < 0) {
    throw SafetyFault("explicit filter: state is outside every certified set; no safe backup exists");
  }
  return best;
}

FilterDecision explicit_step(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                             const Vector& u_learning, MembershipMode mode) {
  FilterDecision decision;
  if (const std::optional<int> j = certify_onestep(family, model, x, u_learning, mode); j.has_value()) {
    decision.u_applied = u_learning;
    decision.intervened = false;
    decision.set_index = *j;
    return decision;
  }
  const int b = best_backup(family, model, x, u_learning);
  decision.u_applied = backup_input(family.sets.at(b), model, x);
  decision.intervened = true;
  decision.set_index = b;
  return decision;
}

}  // namespace safenet
