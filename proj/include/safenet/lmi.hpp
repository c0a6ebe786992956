#pragma once

#include "safenet/conic.hpp"
#include "safenet/model.hpp"

#include <string>
#include <vector>

namespace safenet {

// Structured decision variables attached to one conic problem, per agent i:
//   E[i]  n_i × n_i symmetric      ellipsoid shape (inverse of P_i)
//   Y[i]  m_i × n_{N_i}            gain pre-image, K_i = Y_i E_{N_i}^{-1}
//   S[i]  n_{N_i} × n_{N_i} symmetric   coupling slack budget
// The family of local sets is X = { x : Σ_i x_iᵀ E_i^{-1} x_i <= 1 }.
struct StructuredVars {
  std::vector<MatrixVar> E;
  std::vector<MatrixVar> Y;
  std::vector<MatrixVar> S;
};

StructuredVars declare_structured_vars(SdpProblem& problem, const NetworkModel& model);

// Block-diagonal neighborhood shape E_{N_i} = diag(E_j : j ∈ N̄_i ascending).
ExprMatrix neighborhood_shape(const NetworkModel& model, const StructuredVars& vars, int i);
// Ē_i: agent i's own shape embedded at its own block of the neighborhood
// frame, zero elsewhere (W_i T_iᵀ E_i T_i W_iᵀ).
ExprMatrix own_shape_in_neighborhood(const NetworkModel& model, const StructuredVars& vars, int i);

// Robust one-step decrease certificate for agent i at a parameter vertex:
//   [ Ē_i + S_i                        (A_i(θ) E_{N_i} + B_i(θ) Y_i)ᵀ ]
//   [ A_i(θ) E_{N_i} + B_i(θ) Y_i                 E_i                 ] ⪰ 0
// Schur complement: the backup-loop successor of agent i gains at most the
// S_i-budgeted amount of the neighborhood's Lyapunov mass.
LmiBlock invariance_certificate(const NetworkModel& model, const StructuredVars& vars, int i,
                                const Vector& theta_i, std::string label);

// Agent i's diagonal block of the network slack sum: Σ_{r ∈ N̄_i} of the
// (i,i) block of W_rᵀ S_r W_r, required ⪯ 0.
LmiBlock coupling_budget(const NetworkModel& model, const StructuredVars& vars, int i, std::string label);
// The exact network-wide requirement Σ_r W_rᵀ S_r W_r ⪯ 0 as one n × n
// block. The per-agent blocks above are its diagonal; with off-diagonal
// slack couplings present they do not by themselves imply the full sum is
// negative semidefinite, so this block is what makes the certificate sound.
LmiBlock global_coupling_budget(const NetworkModel& model, const StructuredVars& vars, std::string label);

// { z : zᵀ shape^{-1} z <= 1 } ⊆ { z : row·z <= offset }:
//   [ offset²        row·shape ]
//   [ shapeᵀ·rowᵀ      shape   ] ⪰ 0
LmiBlock shape_in_halfspace(const ExprMatrix& shape, const Eigen::RowVectorXd& row, double offset,
                            std::string label);

// Backup inputs u = Y shape^{-1} z over the same ellipsoid stay in
// { u : row·u <= offset }:
//   [ offset²      row·Y  ]
//   [ Yᵀ·rowᵀ      shape  ] ⪰ 0
LmiBlock gain_in_halfspace(const ExprMatrix& gain_preimage, const ExprMatrix& shape,
                           const Eigen::RowVectorXd& row, double offset, std::string label);

// zᵀ shape^{-1} z <= 1/num_sets:
//   [ 1/num_sets   zᵀ    ]
//   [ z           shape  ] ⪰ 0
// The affine-point overload is what the per-step filter uses, with z the
// predicted successor as an expression in the input correction.
LmiBlock point_in_scaled_shape(const Vector& z, const ExprMatrix& shape, int num_sets, std::string label);
LmiBlock point_in_scaled_shape(const std::vector<LinExpr>& z, const ExprMatrix& shape, int num_sets,
                               std::string label);

// shape ⪰ eps·I (keeps every E_i invertible and every P_i bounded).
LmiBlock shape_lower_bound(const MatrixVar& shape, double eps, std::string label);

// ---- family emitters: append one whole constraint group to a problem ----

// Invariance certificates for every agent at every vertex of its parameter
// box (2^{p_i} vertices; throws std::length_error past `vertex_cap`).
void add_invariance_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                           std::size_t vertex_cap = 65536);
// Per-agent coupling budgets, plus the exact global budget when
// `with_global` is set.
void add_coupling_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                         bool with_global = true);
// Every state-constraint row of every agent against its neighborhood shape.
void add_state_containment_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars);
// Every input-constraint row of every agent against its gain pre-image.
void add_input_containment_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars);
// E_i ⪰ eps·I for every agent.
void add_shape_lower_bounds(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                            double eps);

}  // namespace safenet
