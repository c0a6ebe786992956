#pragma once

#include "safenet/lmi.hpp"
#include "safenet/partition.hpp"
#include "safenet/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace safenet {

enum class ObjectiveMode { MaximizeTraceSum, MinimizeTraceSum };

const char* to_string(ObjectiveMode mode);
ObjectiveMode objective_mode_from_string(const std::string& name);

// How a cell's non-empty-intersection requirement is anchored.
//   FreeWitness: the witness point is a decision variable; the program only
//     certifies that SOME point lies in both the cell and the scaled set.
//     Weakest feasible reading — a cell fails only when no admissible
//     invariant set reaches it at all — but the trace objective then ignores
//     the cell, so every feasible cell returns the same globally optimal
//     shape.
//   SeedCover: two solves per cell. A reach stage maximizes t with the
//     witness tied to t·seed, t ∈ [0, 1] — how far toward the cell's
//     generating seed an admissible set can stretch (raw seeds can sit
//     outside the constraint polytope or beyond what bounded inputs can
//     hold invariant, so pinning at t = 1 outright would discard most
//     cells). The trace stage then pins the witness just inside that
//     farthest reachable point and optimizes the shapes. Cells then produce
//     genuinely different shapes and orientations, and the union of sets
//     grows with the number of cells — the behavior coverage studies need.
enum class AnchorMode { FreeWitness, SeedCover };

const char* to_string(AnchorMode mode);
AnchorMode anchor_mode_from_string(const std::string& name);

struct SynthesisOptions {
  ObjectiveMode objective = ObjectiveMode::MaximizeTraceSum;
  AnchorMode anchor = AnchorMode::FreeWitness;
  double shape_floor = 1e-6;  // E_i ⪰ shape_floor·I
  // Adds the exact network-wide coupling budget next to the per-agent ones;
  // this is what makes the certificate sound, so leave it on.
  bool global_coupling = true;
  std::size_t vertex_cap = 65536;
  int workers = 1;  // parallel regions, one solver process per worker
  SolverOptions solver;
  // When positive, every certified region is re-checked by sampling this
  // many boundary states (worst-case successor value, constraint residuals).
  int validation_samples = 0;
  std::uint64_t validation_seed = 0x76616c6964ull;
};

// Empirical certificate check over sampled boundary states of one set.
struct ValidationReport {
  int samples = 0;
  // max over samples of the worst-case successor value max_θ Σ_i |x⁺_i|²_{P_i}
  // under backup gains; certificate demands <= 1.
  double max_successor_value = 0.0;
  double max_state_residual = -std::numeric_limits<double>::infinity();
  double max_input_residual = -std::numeric_limits<double>::infinity();

  bool pass(double successor_tol, double residual_tol) const {
    return max_successor_value <= 1.0 + successor_tol && max_state_residual <= residual_tol &&
           max_input_residual <= residual_tol;
  }
};

// Synthesized invariant-set piece for one partition cell: shapes E_i, their
// inverses P_i, backup gains K_i, and the witness point of the cell that the
// 1/N-scaled sets were anchored to.
struct CertifiedRegion {
  int region_index = -1;
  Vector seed;
  Vector witness;
  std::vector<Matrix> E;
  std::vector<Matrix> P;
  std::vector<Matrix> K;
  double objective = std::numeric_limits<double>::quiet_NaN();  // Σ tr(E_i)
  // Seed-cover anchoring: fraction t* of the way from the origin to the seed
  // that the witness was pinned at. 1 under free-witness anchoring.
  double reach = 1.0;
  std::string backend;
  double solve_seconds = 0.0;
  ResidualReport residual;
  std::optional<ValidationReport> validation;
};

struct RegionFailure {
  int region_index = -1;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::string message;
};

struct CertifiedSetFamily {
  std::uint64_t model_fingerprint = 0;
  std::uint64_t partition_seed = 0;
  std::string objective_mode;
  std::string anchor_mode;
  double shape_floor = 0.0;
  bool global_coupling = true;
  std::vector<CertifiedRegion> sets;      // certified cells, ascending region index
  std::vector<RegionFailure> failures;    // cells the solver could not certify

  int size() const { return static_cast<int>(sets.size()); }

  nlohmann::json to_json() const;
  static CertifiedSetFamily from_json(const nlohmann::json& j);
  // Throws unless the family was synthesized for exactly this model.
  void require_matches(const NetworkModel& model) const;
};

// Builds the trace-objective conic program for one cell: structured
// variables, the invariance/coupling/containment families, shape floors, a
// witness point constrained to the cell and to the 1/N-scaled sets, and the
// trace objective. When `anchor` is given the witness is additionally pinned
// to that point (seed-cover trace stage; the point must lie in the cell).
// Exposed separately so tests can inspect the program.
SdpProblem build_region_program(const NetworkModel& model, const Region& region,
                                const SynthesisOptions& options, StructuredVars* vars_out = nullptr,
                                int* witness_base_out = nullptr, const Vector* anchor = nullptr);

// Builds the seed-cover reach stage for one cell: the same feasibility
// families, but the witness is tied to t·seed with a scalar t ∈ [0, 1] and
// the objective maximizes t. The solved t says how far toward the seed an
// admissible invariant set can stretch while intersecting the cell.
SdpProblem build_reach_program(const NetworkModel& model, const Region& region,
                               const SynthesisOptions& options, StructuredVars* vars_out = nullptr,
                               int* reach_var_out = nullptr);

struct RegionOutcome {
  std::optional<CertifiedRegion> certified;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::string message;
};

RegionOutcome synthesize_region(const NetworkModel& model, const Region& region,
                                const SynthesisOptions& options, const SdpSolver& solver);

CertifiedSetFamily synthesize_family(const NetworkModel& model, const Partition& partition,
                                     const SynthesisOptions& options);

// Monte-Carlo check of one certified set: draws states on the boundary of
// { Σ_i |x_i|²_{P_i} = 1 }, applies the backup gains, and reports the worst
// successor value over every per-agent parameter vertex along with state and
// backup-input constraint residuals.
ValidationReport validate_certified(const CertifiedRegion& cert, const NetworkModel& model, int samples,
                                    Rng& rng);

// Uniform-direction sample on the boundary { x : Σ_i |x_i|²_{P_i} = 1 }.
Vector sample_boundary_state(const std::vector<Matrix>& P, const NetworkModel& model, Rng& rng);

// Worst-case successor value of the backup loop at x over all per-agent
// parameter vertices: Σ_i max_{θ_i vertex} |A_i(θ_i) x_{N_i} + B_i(θ_i) K_i x_{N_i}|²_{P_i}.
// Exact because each agent's successor depends only on its own θ_i.
double worst_successor_value(const CertifiedRegion& cert, const NetworkModel& model, const Vector& x);

// Backup input vector u with u_i = K_i x_{N_i}.
Vector backup_input(const CertifiedRegion& cert, const NetworkModel& model, const Vector& x);

}  // namespace safenet
