#include "safenet/benchmarks.hpp"

#include <stdexcept>
#include <string>

namespace safenet {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string("benchmark builder: ") + what + " must be positive");
}

// Index of agent j's block inside the stacked neighborhood of i, when every
// member contributes `block` states and members are sorted ascending.
int member_offset(const std::vector<int>& members, int j, int block) {
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k] == j) return static_cast<int>(k) * block;
  }
  throw std::logic_error("benchmark builder: agent not found in neighborhood");
}

}  // namespace

NetworkModel build_mass_spring_damper_chain(const ChainParams& p) {
  if (p.num_agents < 1) throw std::invalid_argument("benchmark builder: need at least one agent");
  require_positive(p.mass, "mass");
  require_positive(p.stiffness, "stiffness");
  require_positive(p.damping, "damping");
  require_positive(p.dt, "dt");
  require_positive(p.pos_max, "pos_max");
  require_positive(p.vel_max, "vel_max");
  require_positive(p.input_max, "input_max");
  if (!(p.gamma >= 0.0 && p.gamma < 1.0))
    throw std::invalid_argument("benchmark builder: gamma must lie in [0, 1)");

  CommGraph graph = CommGraph::line(p.num_agents);
  const double rate = p.dt / p.mass;

  std::vector<Agent> agents;
  Vector lo(2 * p.num_agents), hi(2 * p.num_agents);
  for (int i = 0; i < p.num_agents; ++i) {
    const std::vector<int>& members = graph.closed_neighborhood(i);
    const int width = 2 * static_cast<int>(members.size());
    const int own = member_offset(members, i, 2);

    Agent a;
    a.state_dim = 2;
    a.input_dim = 1;

    Matrix A0 = Matrix::Zero(2, width);
    A0(0, own) = 1.0;
    A0(0, own + 1) = p.dt;
    A0(1, own + 1) = 1.0;
    a.dynamics.A0 = std::move(A0);
    a.dynamics.B0 = Matrix::Zero(2, 1);
    a.dynamics.B0(1, 0) = rate;

    // Two parameters per incident edge, neighbor-ascending: (k_ij, d_ij).
    const std::vector<int>& nbrs = graph.neighbors(i);
    const int params = 2 * static_cast<int>(nbrs.size());
    a.dynamics.theta_lo = Vector(params);
    a.dynamics.theta_hi = Vector(params);
    int v = 0;
    for (int j : nbrs) {
      const int other = member_offset(members, j, 2);
      Matrix k_sens = Matrix::Zero(2, width);
      k_sens(1, own) = -rate;
      k_sens(1, other) = rate;
      Matrix d_sens = Matrix::Zero(2, width);
      d_sens(1, own + 1) = -rate;
      d_sens(1, other + 1) = rate;
      a.dynamics.A_sens.push_back(std::move(k_sens));
      a.dynamics.A_sens.push_back(std::move(d_sens));
      a.dynamics.B_sens.push_back(Matrix::Zero(2, 1));
      a.dynamics.B_sens.push_back(Matrix::Zero(2, 1));
      a.dynamics.theta_lo[v] = p.stiffness * (1.0 - p.gamma);
      a.dynamics.theta_hi[v] = p.stiffness * (1.0 + p.gamma);
      a.dynamics.theta_lo[v + 1] = p.damping * (1.0 - p.gamma);
      a.dynamics.theta_hi[v + 1] = p.damping * (1.0 + p.gamma);
      v += 2;
    }

    Matrix H = Matrix::Zero(4, width);
    Vector h(4);
    H(0, own) = 1.0;
    H(1, own) = -1.0;
    h[0] = h[1] = p.pos_max;
    H(2, own + 1) = 1.0;
    H(3, own + 1) = -1.0;
    h[2] = h[3] = p.vel_max;
    a.state_set = {std::move(H), std::move(h)};

    Matrix O(2, 1);
    O << 1.0, -1.0;
    Vector o(2);
    o << p.input_max, p.input_max;
    a.input_set = {std::move(O), std::move(o)};

    lo[2 * i] = -p.pos_max;
    hi[2 * i] = p.pos_max;
    lo[2 * i + 1] = -p.vel_max;
    hi[2 * i + 1] = p.vel_max;
    agents.push_back(std::move(a));
  }

  return NetworkModel(std::move(graph), std::move(agents), std::move(lo), std::move(hi),
                      "mass_spring_damper_chain_" + std::to_string(p.num_agents));
}

NetworkModel build_planar_coupled_masses(const PlanarParams& p) {
  if (p.num_agents < 1) throw std::invalid_argument("benchmark builder: need at least one agent");
  require_positive(p.mass, "mass");
  require_positive(p.drag, "drag");
  require_positive(p.coupling, "coupling");
  require_positive(p.dt, "dt");
  require_positive(p.pos_max, "pos_max");
  require_positive(p.input_max, "input_max");
  if (!(p.gamma >= 0.0 && p.gamma < 1.0))
    throw std::invalid_argument("benchmark builder: gamma must lie in [0, 1)");

  CommGraph graph = CommGraph::line(p.num_agents);
  const double rate = p.dt / p.mass;

  std::vector<Agent> agents;
  Vector lo(4 * p.num_agents), hi(4 * p.num_agents);
  for (int i = 0; i < p.num_agents; ++i) {
    const std::vector<int>& members = graph.closed_neighborhood(i);
    const int width = 4 * static_cast<int>(members.size());
    const int own = member_offset(members, i, 4);

    Agent a;
    a.state_dim = 4;
    a.input_dim = 1;

    Matrix A0 = Matrix::Zero(4, width);
    A0(0, own) = 1.0;
    A0(0, own + 1) = p.dt;
    A0(1, own + 1) = 1.0;
    A0(2, own + 2) = 1.0;
    A0(2, own + 3) = p.dt;
    A0(3, own + 3) = 1.0;
    a.dynamics.A0 = std::move(A0);
    a.dynamics.B0 = Matrix::Zero(4, 1);
    a.dynamics.B0(1, 0) = rate;
    a.dynamics.B0(3, 0) = rate;

    // Parameters: own drag first, then one coupling per incident edge
    // (neighbor-ascending). Drag opposes the agent's own velocity on both
    // axes; coupling pulls the velocity toward each neighbor's.
    const std::vector<int>& nbrs = graph.neighbors(i);
    const int params = 1 + static_cast<int>(nbrs.size());
    a.dynamics.theta_lo = Vector(params);
    a.dynamics.theta_hi = Vector(params);

    Matrix drag_sens = Matrix::Zero(4, width);
    drag_sens(1, own + 1) = -rate;
    drag_sens(3, own + 3) = -rate;
    a.dynamics.A_sens.push_back(std::move(drag_sens));
    a.dynamics.B_sens.push_back(Matrix::Zero(4, 1));
    a.dynamics.theta_lo[0] = p.drag * (1.0 - p.gamma);
    a.dynamics.theta_hi[0] = p.drag * (1.0 + p.gamma);

    int v = 1;
    for (int j : nbrs) {
      const int other = member_offset(members, j, 4);
      Matrix c_sens = Matrix::Zero(4, width);
      c_sens(1, own + 1) = -rate;
      c_sens(1, other + 1) = rate;
      c_sens(3, own + 3) = -rate;
      c_sens(3, other + 3) = rate;
      a.dynamics.A_sens.push_back(std::move(c_sens));
      a.dynamics.B_sens.push_back(Matrix::Zero(4, 1));
      a.dynamics.theta_lo[v] = p.coupling * (1.0 - p.gamma);
      a.dynamics.theta_hi[v] = p.coupling * (1.0 + p.gamma);
      ++v;
    }

    // |x_i| + |y_i| <= pos_max as four diamond rows over the own positions.
    Matrix H = Matrix::Zero(4, width);
    Vector h = Vector::Constant(4, p.pos_max);
    int r = 0;
    for (double sx : {1.0, -1.0}) {
      for (double sy : {1.0, -1.0}) {
        H(r, own) = sx;
        H(r, own + 2) = sy;
        ++r;
      }
    }
    a.state_set = {std::move(H), std::move(h)};

    Matrix O(2, 1);
    O << 1.0, -1.0;
    Vector o(2);
    o << p.input_max, p.input_max;
    a.input_set = {std::move(O), std::move(o)};

    lo[4 * i] = -p.pos_max;
    hi[4 * i] = p.pos_max;
    lo[4 * i + 1] = 0.0;
    hi[4 * i + 1] = 0.0;
    lo[4 * i + 2] = -p.pos_max;
    hi[4 * i + 2] = p.pos_max;
    lo[4 * i + 3] = 0.0;
    hi[4 * i + 3] = 0.0;
    agents.push_back(std::move(a));
  }

  return NetworkModel(std::move(graph), std::move(agents), std::move(lo), std::move(hi),
                      "planar_coupled_masses_" + std::to_string(p.num_agents));
}

}  // namespace safenet
