#include "safenet/implicit_filter.hpp"

#include <stdexcept>
#include <string>

namespace safenet {

SdpProblem build_step_program(const NetworkModel& model, const Vector& x, const Vector& u_learning,
                              const ImplicitFilterOptions& options, StructuredVars* vars_out,
                              int* correction_base_out) {
  const int N = model.num_agents();
  if (x.size() != model.state_dim()) throw std::invalid_argument("build_step_program: state dimension mismatch");
  if (u_learning.size() != model.input_dim())
    throw std::invalid_argument("build_step_program: input dimension mismatch");

  SdpProblem problem;
  StructuredVars vars = declare_structured_vars(problem, model);
  const int du = problem.add_scalar_vars("correction", model.input_dim());
  const int norm_bound = problem.add_scalar_vars("correction_norm", 1);

  add_invariance_family(problem, model, vars, options.vertex_cap);
  add_coupling_family(problem, model, vars, options.global_coupling);
  add_state_containment_family(problem, model, vars);
  add_input_containment_family(problem, model, vars);
  add_shape_lower_bounds(problem, model, vars, options.shape_floor);

  // norm_bound >= ||Δu||, minimized.
  SocBlock epigraph;
  epigraph.label = "correction_norm";
  epigraph.rows.push_back(LinExpr::variable(norm_bound));
  for (int k = 0; k < model.input_dim(); ++k) epigraph.rows.push_back(LinExpr::variable(du + k));
  problem.add_soc(std::move(epigraph));
  problem.set_objective({{norm_bound, 1.0}});

  for (int i = 0; i < N; ++i) {
    const Vector x_nbr = model.neighborhood_state(x, i);
    const Vector u_i = u_learning.segment(model.input_offset(i), model.input_dim(i));

    // The corrected input must be admissible right now.
    const PolytopicSet& input_set = model.agent(i).input_set;
    for (int l = 0; l < input_set.rows(); ++l) {
      LinearRow row;
      row.label = "input_now[agent=" + std::to_string(i) + ",row=" + std::to_string(l) + "]";
      row.expr.constant = input_set.b[l] - input_set.A.row(l).dot(u_i);
      for (int k = 0; k < model.input_dim(i); ++k) {
        const double coef = input_set.A(l, k);
        if (coef != 0.0) row.expr.terms.push_back({du + model.input_offset(i) + k, -coef});
      }
      problem.add_linear(std::move(row));
    }

    // Every worst-case successor lands in this agent's 1/N-scaled set. One
    // certificate per own parameter vertex is exact for the whole box: the
    // successor is affine in θ_i and depends on no other agent's parameters.
    const std::vector<Vector> vertices = theta_vertices(model.agent(i).dynamics, options.vertex_cap);
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      const auto [A, B] = model.agent(i).dynamics.eval(vertices[v]);
      const Vector base = A * x_nbr + B * u_i;  // successor before correction
      std::vector<LinExpr> successor(static_cast<std::size_t>(model.state_dim(i)));
      for (int r = 0; r < model.state_dim(i); ++r) {
        LinExpr e(base[r]);
        for (int k = 0; k < model.input_dim(i); ++k) {
          const double coef = B(r, k);
          if (coef != 0.0) e.terms.push_back({du + model.input_offset(i) + k, coef});
        }
        successor[static_cast<std::size_t>(r)] = std::move(e);
      }
      problem.add_lmi(point_in_scaled_shape(successor, ExprMatrix::from_var(vars.E.at(i)), N,
                                            "successor_in_set[agent=" + std::to_string(i) +
                                                ",vertex=" + std::to_string(v) + "]"));
    }
  }

  if (vars_out != nullptr) *vars_out = vars;
  if (correction_base_out != nullptr) *correction_base_out = du;
  return problem;
}

ImplicitDecision implicit_step(const NetworkModel& model, const Vector& x, const Vector& u_learning,
                               const ImplicitFilterOptions& options, const SdpSolver& solver) {
  int du_base = 0;
  const SdpProblem problem = build_step_program(model, x, u_learning, options, nullptr, &du_base);
  const SolveResult result = solver.solve(problem);

  ImplicitDecision decision;
  decision.status = result.status;
  decision.backend = result.backend;
  decision.message = result.message;
  decision.solve_seconds = result.solve_seconds;
  decision.residual = result.residual;
  if (result.status != SolveStatus::Optimal) return decision;

  decision.certified = true;
  decision.correction = Vector(model.input_dim());
  for (int k = 0; k < model.input_dim(); ++k) decision.correction[k] = result.values[du_base + k];
  decision.u_applied = u_learning + decision.correction;
  decision.correction_norm = decision.correction.norm();
  return decision;
}

}  // namespace safenet
