#pragma once

#include "safenet/lmi.hpp"
#include "safenet/solver.hpp"

#include <string>

namespace safenet {

struct ImplicitFilterOptions {
  double shape_floor = 1e-6;
  bool global_coupling = true;
  std::size_t vertex_cap = 65536;
  SolverOptions solver;
};

struct ImplicitDecision {
  SolveStatus status = SolveStatus::NumericalFailure;
  bool certified = false;   // a correction with a full invariance certificate exists
  Vector correction;        // Δu (empty unless certified)
  Vector u_applied;         // u_learning + Δu (empty unless certified)
  double correction_norm = std::numeric_limits<double>::quiet_NaN();
  ResidualReport residual;
  std::string backend;
  std::string message;
  double solve_seconds = 0.0;
};

// Builds the per-step program: find the smallest input correction Δu (by
// Euclidean norm, via a second-order-cone epigraph) such that fresh
// structured shapes/gains/slacks certify robust invariance, constraint
// containment, admissibility of u_learning + Δu, and containment of every
// worst-case successor in its agent's 1/N-scaled set. Exposed for tests.
SdpProblem build_step_program(const NetworkModel& model, const Vector& x, const Vector& u_learning,
                              const ImplicitFilterOptions& options, StructuredVars* vars_out = nullptr,
                              int* correction_base_out = nullptr);

// Solves the per-step program. `certified` means the corrected input carries
// a complete safety certificate; the caller decides what to do otherwise.
ImplicitDecision implicit_step(const NetworkModel& model, const Vector& x, const Vector& u_learning,
                               const ImplicitFilterOptions& options, const SdpSolver& solver);

}  // namespace safenet
