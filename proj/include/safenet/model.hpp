#pragma once

#include "safenet/graph.hpp"
#include "safenet/linalg.hpp"
#include "safenet/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace safenet {

// Polytope in halfspace form { z : A z <= b }.
struct PolytopicSet {
  Matrix A;
  Vector b;

  int rows() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
  // max_l (A z - b)_l ; <= 0 means the point is inside.
  double residual(const Vector& z) const;
  bool contains(const Vector& z, double tol = 0.0) const;
  // Throws unless every offset is strictly positive (origin in the interior),
  // which the set-containment matrix inequalities require.
  void require_origin_interior(const std::string& what) const;
};

// Matrix pair (A_i(θ_i), B_i(θ_i)) affine in a box-bounded parameter vector:
//   A_i(θ) = A0 + Σ_v θ_v · A_sens[v],  B_i(θ) = B0 + Σ_v θ_v · B_sens[v].
// A_i maps the stacked neighborhood state x_{N_i} to the successor of the
// agent's own state; B_i maps the agent's own input.
struct UncertainDynamics {
  Matrix A0;
  Matrix B0;
  std::vector<Matrix> A_sens;
  std::vector<Matrix> B_sens;
  Vector theta_lo;
  Vector theta_hi;

  int param_count() const { return static_cast<int>(theta_lo.size()); }
  bool theta_in_box(const Vector& theta, double tol = 1e-9) const;
  std::pair<Matrix, Matrix> eval(const Vector& theta) const;
  Vector nominal_theta() const { return 0.5 * (theta_lo + theta_hi); }
};

// All corners of the parameter box. Dimensions with zero width contribute a
// single value, so the count is 2^(#free dims). Throws std::length_error if
// that exceeds `cap`.
std::vector<Vector> theta_vertices(const UncertainDynamics& dyn, std::size_t cap = 65536);

struct Agent {
  int state_dim = 0;
  int input_dim = 0;
  UncertainDynamics dynamics;
  // Rows over the stacked neighborhood state x_{N_i} (width n_{N_i}).
  PolytopicSet state_set;
  // Rows over the agent's own input u_i (width m_i).
  PolytopicSet input_set;
};

// Network of coupled uncertain linear agents. Owns the communication graph,
// the per-agent dynamics/constraints, the 0/1 lifting matrices
//   T_i : global state -> own state        (n_i × n)
//   W_i : global state -> neighborhood     (n_{N_i} × n, blocks in ascending
//                                           agent order)
// and a box (optionally with pinned coordinates) from which initial states,
// partition seeds and coverage samples are drawn.
class NetworkModel {
 public:
  NetworkModel(CommGraph graph, std::vector<Agent> agents, Vector sampling_lo, Vector sampling_hi,
               std::string name);

  const CommGraph& graph() const { return graph_; }
  const std::string& name() const { return name_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  const Agent& agent(int i) const { return agents_.at(i); }

  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  int theta_dim() const { return theta_dim_; }
  int state_dim(int i) const { return agents_.at(i).state_dim; }
  int input_dim(int i) const { return agents_.at(i).input_dim; }
  int state_offset(int i) const { return state_offsets_.at(i); }
  int input_offset(int i) const { return input_offsets_.at(i); }
  int theta_offset(int i) const { return theta_offsets_.at(i); }

  // Sorted closed neighborhood N̄_i and the width n_{N_i} = Σ_{j∈N̄_i} n_j.
  const std::vector<int>& neighborhood_members(int i) const { return graph_.closed_neighborhood(i); }
  int neighborhood_dim(int i) const { return neighborhood_dims_.at(i); }
  const Matrix& T(int i) const { return T_.at(i); }
  const Matrix& W(int i) const { return W_.at(i); }
  // Column offset of agent j's state inside x_{N_i}; throws if j ∉ N̄_i.
  int offset_in_neighborhood(int i, int j) const;

  Vector own_state(const Vector& x, int i) const;           // T_i x
  Vector neighborhood_state(const Vector& x, int i) const;  // W_i x
  Vector theta_slice(const Vector& theta, int i) const;

  // Global (A(θ), B) with A = Σ_i T_iᵀ A_i(θ_i) W_i and B block-structured.
  std::pair<Matrix, Matrix> assemble_global(const Vector& theta) const;
  // One forward step x⁺_i = A_i(θ_i) W_i x + B_i(θ_i) u_i for all agents.
  Vector step(const Vector& x, const Vector& u, const Vector& theta) const;

  Vector nominal_theta() const;
  Vector theta_lo() const;
  Vector theta_hi() const;
  Vector sample_theta(Rng& rng) const;

  // max over agents/rows of H_i W_i x - h_i (<= 0 inside).
  double state_residual(const Vector& x) const;
  double input_residual(const Vector& u) const;
  bool state_admissible(const Vector& x, double tol = 0.0) const;
  bool input_admissible(const Vector& u, double tol = 0.0) const;

  const Vector& sampling_lo() const { return sampling_lo_; }
  const Vector& sampling_hi() const { return sampling_hi_; }
  // Uniform draw from the sampling box (pinned coordinates stay fixed),
  // rejected against the state constraint sets.
  Vector sample_state(Rng& rng, int max_tries = 10000) const;

  nlohmann::json to_json() const;
  static NetworkModel from_json(const nlohmann::json& j);
  // FNV-1a over the canonical JSON serialization; ties offline artifacts
  // (partitions, certified set families) to the exact model.
  std::uint64_t fingerprint() const;

 private:
  CommGraph graph_;
  std::vector<Agent> agents_;
  std::string name_;
  Vector sampling_lo_, sampling_hi_;
  int state_dim_ = 0, input_dim_ = 0, theta_dim_ = 0;
  std::vector<int> state_offsets_, input_offsets_, theta_offsets_;
  std::vector<int> neighborhood_dims_;
  std::vector<Matrix> T_, W_;
};

}  // namespace safenet
