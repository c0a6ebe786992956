#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

using namespace safenet;

namespace {

SolverOptions options_for(const std::string& backend) {
  SolverOptions o;
  o.backend = backend;
  return o;
}

// Each case runs against every backend that responds to a probe, so the
// adapter is exercised over both wire formats.
std::vector<std::string> live_backends() {
  std::vector<std::string> found;
  for (const std::string name : {"clarabel", "cvxopt"}) {
    try {
      SdpSolver solver(options_for(name));
      if (solver.probe_backend() == name) found.push_back(name);
    } catch (const std::exception&) {
    }
  }
  return found;
}

}  // namespace

TEST_CASE("at least one conic backend is available") {
  const auto backends = live_backends();
  REQUIRE_FALSE(backends.empty());
  SdpSolver auto_solver;
  const std::string chosen = auto_solver.probe_backend();
  CHECK(std::find(backends.begin(), backends.end(), chosen) != backends.end());
}

TEST_CASE("linear program with equality and inequality rows") {
  // minimize x0 + 2 x1  s.t.  x0 + x1 = 1,  x0 >= 0.2,  x1 >= 0.1
  // Optimum at x = (0.9, 0.1) with value 1.1 (push mass onto the cheap
  // coordinate until the x1 bound binds).
  for (const auto& backend : live_backends()) {
    CAPTURE(backend);
    SdpProblem p;
    const int x = p.add_scalar_vars("x", 2);
    p.set_objective({{x + 0, 1.0}, {x + 1, 2.0}});
    p.add_linear({"sum_to_one", true, LinExpr::variable(x + 0) + LinExpr::variable(x + 1) + LinExpr(-1.0)});
    p.add_linear({"x0_floor", false, LinExpr::variable(x + 0) + LinExpr(-0.2)});
    p.add_linear({"x1_floor", false, LinExpr::variable(x + 1) + LinExpr(-0.1)});

    SdpSolver solver(options_for(backend));
    const SolveResult r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.values[x + 0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(r.values[x + 1] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(r.objective == doctest::Approx(1.1).epsilon(1e-6));
  }
}

TEST_CASE("smallest eigenvalue via semidefinite constraint") {
  // maximize t  s.t.  M - t I >= 0 with M = [[2, 1], [1, 2]].
  // The exact answer is the smallest eigenvalue, 1.
  for (const auto& backend : live_backends()) {
    CAPTURE(backend);
    SdpProblem p;
    const int t = p.add_scalar_vars("t", 1);
    p.set_objective({{t, -1.0}});  // minimize -t
    Matrix m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    ExprMatrix block = ExprMatrix::constant(m);
    for (int d = 0; d < 2; ++d) block(d, d) += LinExpr::variable(t, -1.0);
    p.add_lmi(make_lmi_block("eigen_floor", block, Sense::PositiveSemidefinite));

    SdpSolver solver(options_for(backend));
    const SolveResult r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.values[t] == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("symmetric matrix variable recovers the analytic optimum") {
  // maximize tr(E) s.t. E is 2x2 symmetric, E <= diag(4, 9), E >= 0.
  // Optimum E = diag(4, 9), trace 13.
  for (const auto& backend : live_backends()) {
    CAPTURE(backend);
    SdpProblem p;
    const MatrixVar e = p.add_matrix_var("E", 2, 2, true);
    p.set_objective({{e.entry(0, 0), -1.0}, {e.entry(1, 1), -1.0}});
    Matrix cap = Matrix::Zero(2, 2);
    cap(0, 0) = 4.0;
    cap(1, 1) = 9.0;
    const ExprMatrix e_expr = ExprMatrix::from_var(e);
    p.add_lmi(make_lmi_block("cap", ExprMatrix::constant(cap) - e_expr, Sense::PositiveSemidefinite));
    p.add_lmi(make_lmi_block("psd", e_expr, Sense::PositiveSemidefinite));

    SdpSolver solver(options_for(backend));
    const SolveResult r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.values[e.entry(0, 0)] == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(r.values[e.entry(1, 1)] == doctest::Approx(9.0).epsilon(1e-4));
    CHECK(std::abs(r.values[e.entry(0, 1)]) < 1e-4);
  }
}

TEST_CASE("second-order cone epigraph minimizes a norm") {
  // minimize t s.t. t >= ||x - c||, with x pinned by equalities so the
  // optimum is the plain distance.
  for (const auto& backend : live_backends()) {
    CAPTURE(backend);
    SdpProblem p;
    const int t = p.add_scalar_vars("t", 1);
    const int x = p.add_scalar_vars("x", 2);
    p.set_objective({{t, 1.0}});
    SocBlock cone;
    cone.label = "epigraph";
    cone.rows.push_back(LinExpr::variable(t));
    cone.rows.push_back(LinExpr::variable(x + 0) + LinExpr(-3.0));
    cone.rows.push_back(LinExpr::variable(x + 1) + LinExpr(4.0));
    p.add_soc(std::move(cone));
    p.add_linear({"pin_x0", true, LinExpr::variable(x + 0) + LinExpr(-6.0)});
    p.add_linear({"pin_x1", true, LinExpr::variable(x + 1)});

    SdpSolver solver(options_for(backend));
    const SolveResult r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    // distance from (6, 0) to (3, -4) is 5
    CHECK(r.values[t] == doctest::Approx(5.0).epsilon(1e-5));
  }
}

TEST_CASE("infeasible problem is reported as infeasible") {
  for (const auto& backend : live_backends()) {
    CAPTURE(backend);
    SdpProblem p;
    const int x = p.add_scalar_vars("x", 1);
    p.add_linear({"ge_two", false, LinExpr::variable(x) + LinExpr(-2.0)});
    p.add_linear({"le_one", false, LinExpr::variable(x, -1.0) + LinExpr(1.0)});
    p.set_objective({{x, 1.0}});

    SdpSolver solver(options_for(backend));
    const SolveResult r = solver.solve(p);
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK_FALSE(r.has_point());
  }
}

TEST_CASE("solutions are re-verified against stated tolerances") {
  // A solution only counts as optimal after its residuals are recomputed
  // here and land under the acceptance thresholds.
  SdpProblem p;
  const MatrixVar e = p.add_matrix_var("E", 2, 2, true);
  Matrix target(2, 2);
  target << 2.0, -0.3, -0.3, 1.0;
  const ExprMatrix e_expr = ExprMatrix::from_var(e);
  p.add_lmi(make_lmi_block("cap", ExprMatrix::constant(target) - e_expr, Sense::PositiveSemidefinite));
  p.add_lmi(make_lmi_block("floor", e_expr, Sense::PositiveSemidefinite));
  p.set_objective({{e.entry(0, 0), -1.0}, {e.entry(1, 1), -1.0}});

  SdpSolver solver;
  const SolveResult r = solver.solve(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  const ResidualReport residuals = p.residuals(r.values);
  CHECK(residuals.max_psd_violation <= 1e-7);
  CHECK(residuals.max_linear_violation <= 1e-8);
  // the optimum matches the cap itself
  CHECK(r.values[e.entry(0, 0)] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(r.values[e.entry(1, 1)] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.values[e.entry(0, 1)] == doctest::Approx(-0.3).epsilon(1e-3));
}

TEST_CASE("solver survives repeated calls on one worker") {
  SdpSolver solver;
  for (int k = 1; k <= 4; ++k) {
    SdpProblem p;
    const int x = p.add_scalar_vars("x", 1);
    p.set_objective({{x, 1.0}});
    p.add_linear({"floor", false, LinExpr::variable(x) + LinExpr(-double(k))});
    const SolveResult r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.values[x] == doctest::Approx(double(k)).epsilon(1e-6));
  }
}

TEST_CASE("concurrent workers shut down in any destruction order") {
  // Two live workers whose pipes leak into each other's child would deadlock
  // the first shutdown: the surviving sibling holds the closed stdin open and
  // waitpid never returns. Destroying in creation order exercises exactly
  // that pattern.
  auto tiny_lp = [](double floor_value) {
    SdpProblem p;
    const int x = p.add_scalar_vars("x", 1);
    p.set_objective({{x, 1.0}});
    p.add_linear({"floor", false, LinExpr::variable(x) + LinExpr(-floor_value)});
    return p;
  };
  std::optional<SdpSolver> first;
  std::optional<SdpSolver> second;
  first.emplace();
  REQUIRE(first->solve(tiny_lp(1.0)).status == SolveStatus::Optimal);  // spawn first worker
  second.emplace();
  REQUIRE(second->solve(tiny_lp(2.0)).status == SolveStatus::Optimal);  // spawn second worker
  first.reset();   // must not hang while the second worker is still alive
  const SolveResult after = second->solve(tiny_lp(3.0));
  CHECK(after.status == SolveStatus::Optimal);
  CHECK(after.values[0] == doctest::Approx(3.0).epsilon(1e-6));
  second.reset();
}
