#pragma once

#include "safenet/conic.hpp"

#include <memory>
#include <mutex>
#include <string>

namespace safenet {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverOptions {
  // "auto" picks the first available backend; "clarabel" / "cvxopt" force one.
  std::string backend = "auto";
  std::string python = "python3";  // overridden by $SAFENET_PYTHON when set
  // Acceptance tolerances applied to the returned point by recomputing every
  // constraint residual; a solution that fails them is demoted to
  // NumericalFailure regardless of what the backend claimed. Every residual
  // is judged relative to its constraint's data magnitude (violation divided
  // by 1 + the summed term magnitudes |C| + Σ|coef·x|), so the tolerances
  // mean the same thing for unit-scale and state-space-scale constraints.
  // The PSD default sits well above the 1e-7-ish accuracy floor
  // interior-point backends reach on coupled multi-block programs and far
  // below the 1e-4+ errors of a genuinely wrong point.
  double tol_psd = 1e-6;
  double tol_linear = 1e-8;
  // Tolerances handed to the backend itself.
  double feas_tol = 1e-9;
  double gap_tol = 1e-9;
  int max_iter = 200;
  double timeout_seconds = 600.0;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vector values;  // solver point (empty when none was returned)
  double objective = std::numeric_limits<double>::quiet_NaN();
  ResidualReport residual;
  std::string backend;
  std::string message;
  int iterations = 0;
  double solve_seconds = 0.0;

  bool has_point() const { return values.size() > 0; }
};

// Bridge to an external conic solver running in a persistent worker process.
// Problems are shipped as JSON over pipes; solutions are re-verified on this
// side of the bridge (eigenvalue and row residuals via Eigen) before being
// reported as optimal. One instance owns one worker and is safe to share
// across threads (calls serialize); use one instance per thread to solve in
// parallel.
class SdpSolver {
 public:
  explicit SdpSolver(SolverOptions options = {});
  ~SdpSolver();
  SdpSolver(SdpSolver&&) = delete;
  SdpSolver& operator=(SdpSolver&&) = delete;
  SdpSolver(const SdpSolver&) = delete;
  SdpSolver& operator=(const SdpSolver&) = delete;

  const SolverOptions& options() const { return options_; }

  SolveResult solve(const SdpProblem& problem) const;

  // Name of the backend the worker would use ("clarabel" or "cvxopt");
  // throws if no backend is importable.
  std::string probe_backend() const;

 private:
  struct Worker;
  SolverOptions options_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Worker> worker_;
};

}  // namespace safenet
