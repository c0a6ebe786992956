#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "safenet/benchmarks.hpp"
#include "safenet/lmi.hpp"
#include "safenet/rng.hpp"

#include <cmath>

using namespace safenet;

namespace {

Matrix random_spd(Rng& rng, int n, double floor_eig = 0.1) {
  Matrix m(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  return m * m.transpose() + floor_eig * Matrix::Identity(n, n);
}

// Pins every structured variable to the values in the given dense matrices so
// symbolic blocks can be evaluated numerically.
Vector pack_values(const SdpProblem& problem, const StructuredVars& vars, const std::vector<Matrix>& e,
                   const std::vector<Matrix>& y, const std::vector<Matrix>& s) {
  Vector values = Vector::Zero(problem.var_count());
  auto put = [&values](const MatrixVar& var, const Matrix& m) {
    for (int c = 0; c < var.cols; ++c)
      for (int r = 0; r < var.rows; ++r) values[var.entry(r, c)] = m(r, c);
  };
  for (std::size_t i = 0; i < vars.E.size(); ++i) {
    put(vars.E[i], e[i]);
    put(vars.Y[i], y[i]);
    put(vars.S[i], s[i]);
  }
  return values;
}

}  // namespace

TEST_CASE("scaled point membership block agrees with an eigenvalue oracle") {
  // [[1/N, zᵀ], [z, E]] ⪰ 0  iff  zᵀ E⁻¹ z <= 1/N (E ≻ 0): the block's
  // minimum eigenvalue and the quadratic slack must always agree in sign.
  Rng rng(42);
  int disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix e = random_spd(rng, 2, 0.05);
    const Vector z = rng.uniform_vector(-2.0 * Vector::Ones(2), 2.0 * Vector::Ones(2));
    const int num_sets = rng.uniform_int(1, 4);
    const LmiBlock block =
        point_in_scaled_shape(z, ExprMatrix::constant(e), num_sets, "membership");
    const double eig = block.min_eigenvalue_at(Vector());
    const double quad = 1.0 / num_sets - z.dot(e.llt().solve(z));
    if ((eig >= 0.0) != (quad >= -1e-12)) ++disagreements;
    // the Schur complement itself is reproduced up to conditioning
    if (std::abs(quad) > 1e-6) CHECK((eig >= 0.0) == (quad > 0.0));
  }
  CHECK(disagreements <= 2);  // ties at the boundary may fall either way
}

TEST_CASE("halfspace containment block matches the support function") {
  // { z : zᵀE⁻¹z <= 1 } ⊆ { z : row·z <= offset } iff sqrt(rowᵀ E row) <= offset.
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(1, 4);
    const Matrix e = random_spd(rng, n, 0.05);
    Eigen::RowVectorXd row(n);
    for (int k = 0; k < n; ++k) row[k] = rng.uniform(-1.5, 1.5);
    const double offset = rng.uniform(0.05, 2.5);
    const LmiBlock block = shape_in_halfspace(ExprMatrix::constant(e), row, offset, "contain");
    const double support = std::sqrt((row * e * row.transpose()).value());
    const double eig = block.min_eigenvalue_at(Vector());
    if (std::abs(support - offset) > 1e-7) {
      CHECK((eig >= 0.0) == (support <= offset));
    }
  }
}

TEST_CASE("gain containment block matches the worst-case backup input") {
  // u = Y E⁻¹ z over zᵀE⁻¹z <= 1 has max row·u = sqrt(row Y E⁻¹ Yᵀ rowᵀ).
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(2, 4);
    const Matrix e = random_spd(rng, n, 0.1);
    Matrix y(1, n);
    for (int k = 0; k < n; ++k) y(0, k) = rng.uniform(-1.0, 1.0);
    Eigen::RowVectorXd row(1);
    row[0] = rng.uniform(0.2, 1.5);
    const double offset = rng.uniform(0.05, 1.5);
    const LmiBlock block =
        gain_in_halfspace(ExprMatrix::constant(y), ExprMatrix::constant(e), row, offset, "gain");
    const Matrix k_gain = e.llt().solve(y.transpose()).transpose();  // Y E⁻¹
    const Matrix reach = k_gain * e * k_gain.transpose();
    const double worst = row[0] * std::sqrt(reach(0, 0));
    const double eig = block.min_eigenvalue_at(Vector());
    if (std::abs(worst - offset) > 1e-7) {
      CHECK((eig >= 0.0) == (worst <= offset));
    }
  }
}

TEST_CASE("structured variables take the documented shapes") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);
  REQUIRE(vars.E.size() == 3);
  REQUIRE(vars.Y.size() == 3);
  REQUIRE(vars.S.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(vars.E[i].rows == 2);
    CHECK(vars.E[i].symmetric);
    CHECK(vars.Y[i].rows == 1);
    CHECK(vars.Y[i].cols == model.neighborhood_dim(i));
    CHECK_FALSE(vars.Y[i].symmetric);
    CHECK(vars.S[i].rows == model.neighborhood_dim(i));
    CHECK(vars.S[i].symmetric);
  }
}

TEST_CASE("neighborhood shape stacks own shapes block-diagonally") {
  Rng rng(3);
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);
  std::vector<Matrix> e, y, s;
  for (int i = 0; i < 3; ++i) {
    e.push_back(random_spd(rng, 2));
    y.push_back(Matrix::Zero(1, model.neighborhood_dim(i)));
    s.push_back(Matrix::Zero(model.neighborhood_dim(i), model.neighborhood_dim(i)));
  }
  const Vector values = pack_values(problem, vars, e, y, s);

  const Matrix nbr1 = neighborhood_shape(model, vars, 1).evaluate(values);
  REQUIRE(nbr1.rows() == 6);
  CHECK((nbr1.block(0, 0, 2, 2) - e[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((nbr1.block(2, 2, 2, 2) - e[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((nbr1.block(4, 4, 2, 2) - e[2]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(nbr1.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);

  const Matrix own1 = own_shape_in_neighborhood(model, vars, 1).evaluate(values);
  CHECK((own1.block(2, 2, 2, 2) - e[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(own1.block(0, 0, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(own1.block(4, 4, 2, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling blocks reproduce the dense slack sum") {
  Rng rng(13);
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);
  std::vector<Matrix> e, y, s;
  for (int i = 0; i < 3; ++i) {
    const int w = model.neighborhood_dim(i);
    e.push_back(Matrix::Identity(2, 2));
    y.push_back(Matrix::Zero(1, w));
    s.push_back(symmetrize(random_spd(rng, w) - random_spd(rng, w)));
  }
  const Vector values = pack_values(problem, vars, e, y, s);

  // dense oracle: Σ_r W_rᵀ S_r W_r over the global state
  Matrix dense = Matrix::Zero(6, 6);
  for (int r = 0; r < 3; ++r) dense += model.W(r).transpose() * s[r] * model.W(r);

  // global block: the builder negates (⪯ 0 becomes ⪰ 0), so evaluate == -dense
  const LmiBlock global = global_coupling_budget(model, vars, "global");
  CHECK((global.evaluate(values) + dense).cwiseAbs().maxCoeff() < 1e-12);

  // per-agent blocks are the negated diagonal blocks of the dense sum
  for (int i = 0; i < 3; ++i) {
    const LmiBlock local = coupling_budget(model, vars, i, "local");
    const Matrix got = local.evaluate(values);
    const Matrix expect = -dense.block(model.state_offset(i), model.state_offset(i), 2, 2);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("invariance certificate encodes the one-step map") {
  Rng rng(17);
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);
  std::vector<Matrix> e, y, s;
  for (int i = 0; i < 3; ++i) {
    const int w = model.neighborhood_dim(i);
    e.push_back(random_spd(rng, 2));
    Matrix yi(1, w);
    for (int k = 0; k < w; ++k) yi(0, k) = rng.uniform(-0.5, 0.5);
    y.push_back(yi);
    s.push_back(symmetrize(random_spd(rng, w) - 0.5 * Matrix::Identity(w, w)));
  }
  const Vector values = pack_values(problem, vars, e, y, s);

  const int i = 0;
  const Vector theta_i = model.theta_slice(model.nominal_theta(), i);
  const LmiBlock block = invariance_certificate(model, vars, i, theta_i, "inv");
  const Matrix got = block.evaluate(values);

  const int w = model.neighborhood_dim(i);
  REQUIRE(got.rows() == w + 2);
  const auto [a_i, b_i] = model.agent(i).dynamics.eval(theta_i);
  Matrix e_nbr = Matrix::Zero(w, w);
  e_nbr.block(0, 0, 2, 2) = e[0];
  e_nbr.block(2, 2, 2, 2) = e[1];
  Matrix own_bar = Matrix::Zero(w, w);
  own_bar.block(model.offset_in_neighborhood(i, i), model.offset_in_neighborhood(i, i), 2, 2) = e[0];
  const Matrix closed_loop = a_i * e_nbr + b_i * y[0];

  CHECK((got.block(0, 0, w, w) - (own_bar + s[0])).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got.block(w, 0, 2, w) - closed_loop).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got.block(0, w, w, 2) - closed_loop.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((got.block(w, w, 2, 2) - e[0]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("family emitters produce the advertised constraint counts") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);

  add_invariance_family(problem, model, vars);
  // end agents have 2 parameters (4 corners), the middle one has 4 (16)
  std::size_t expected = 4 + 16 + 4;
  CHECK(problem.lmis().size() == expected);

  add_coupling_family(problem, model, vars, true);
  expected += 3 + 1;
  CHECK(problem.lmis().size() == expected);

  add_state_containment_family(problem, model, vars);
  for (int i = 0; i < 3; ++i) expected += model.agent(i).state_set.rows();
  CHECK(problem.lmis().size() == expected);

  add_input_containment_family(problem, model, vars);
  for (int i = 0; i < 3; ++i) expected += model.agent(i).input_set.rows();
  CHECK(problem.lmis().size() == expected);

  add_shape_lower_bounds(problem, model, vars, 1e-6);
  expected += 3;
  CHECK(problem.lmis().size() == expected);

  // labels identify agents for solver diagnostics
  CHECK(problem.lmis().front().label.find("agent=0") != std::string::npos);
}

TEST_CASE("vertex cap aborts oversized enumerations") {
  const NetworkModel model = build_mass_spring_damper_chain({});
  SdpProblem problem;
  const StructuredVars vars = declare_structured_vars(problem, model);
  CHECK_THROWS_AS(add_invariance_family(problem, model, vars, 8), std::length_error);
}
