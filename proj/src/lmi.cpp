#include "safenet/lmi.hpp"

#include <stdexcept>
#include <string>

namespace safenet {

namespace {

// Global state index of each row of agent r's neighborhood frame.
std::vector<int> neighborhood_to_global(const NetworkModel& model, int r) {
  std::vector<int> map;
  map.reserve(model.neighborhood_dim(r));
  for (int j : model.neighborhood_members(r)) {
    for (int k = 0; k < model.state_dim(j); ++k) map.push_back(model.state_offset(j) + k);
  }
  return map;
}

}  // namespace

StructuredVars declare_structured_vars(SdpProblem& problem, const NetworkModel& model) {
  StructuredVars vars;
  const int N = model.num_agents();
  vars.E.reserve(N);
  vars.Y.reserve(N);
  vars.S.reserve(N);
  for (int i = 0; i < N; ++i) {
    const std::string tag = std::to_string(i);
    vars.E.push_back(problem.add_matrix_var("E" + tag, model.state_dim(i), model.state_dim(i), true));
    vars.Y.push_back(problem.add_matrix_var("Y" + tag, model.input_dim(i), model.neighborhood_dim(i), false));
    vars.S.push_back(problem.add_matrix_var("S" + tag, model.neighborhood_dim(i), model.neighborhood_dim(i), true));
  }
  return vars;
}

ExprMatrix neighborhood_shape(const NetworkModel& model, const StructuredVars& vars, int i) {
  const int width = model.neighborhood_dim(i);
  ExprMatrix out(width, width);
  int offset = 0;
  for (int j : model.neighborhood_members(i)) {
    out.accumulate(offset, offset, ExprMatrix::from_var(vars.E.at(j)));
    offset += model.state_dim(j);
  }
  return out;
}

ExprMatrix own_shape_in_neighborhood(const NetworkModel& model, const StructuredVars& vars, int i) {
  const int width = model.neighborhood_dim(i);
  ExprMatrix out(width, width);
  const int own = model.offset_in_neighborhood(i, i);
  out.accumulate(own, own, ExprMatrix::from_var(vars.E.at(i)));
  return out;
}

LmiBlock invariance_certificate(const NetworkModel& model, const StructuredVars& vars, int i,
                                const Vector& theta_i, std::string label) {
  const int width = model.neighborhood_dim(i);
  const int n_i = model.state_dim(i);
  const auto [A, B] = model.agent(i).dynamics.eval(theta_i);

  const ExprMatrix top_left = own_shape_in_neighborhood(model, vars, i) + ExprMatrix::from_var(vars.S.at(i));
  const ExprMatrix closed_loop =
      A * neighborhood_shape(model, vars, i) + B * ExprMatrix::from_var(vars.Y.at(i));

  ExprMatrix block(width + n_i, width + n_i);
  block.accumulate(0, 0, top_left);
  block.accumulate(width, 0, closed_loop);
  block.accumulate(0, width, closed_loop.transpose());
  block.accumulate(width, width, ExprMatrix::from_var(vars.E.at(i)));
  return make_lmi_block(std::move(label), block, Sense::PositiveSemidefinite);
}

LmiBlock coupling_budget(const NetworkModel& model, const StructuredVars& vars, int i, std::string label) {
  const int n_i = model.state_dim(i);
  ExprMatrix sum(n_i, n_i);
  for (int r : model.neighborhood_members(i)) {
    const int at = model.offset_in_neighborhood(r, i);
    sum.accumulate(0, 0, ExprMatrix::from_var(vars.S.at(r)).block(at, at, n_i, n_i));
  }
  return make_lmi_block(std::move(label), sum, Sense::NegativeSemidefinite);
}

LmiBlock global_coupling_budget(const NetworkModel& model, const StructuredVars& vars, std::string label) {
  const int n = model.state_dim();
  ExprMatrix sum(n, n);
  for (int r = 0; r < model.num_agents(); ++r) {
    const std::vector<int> to_global = neighborhood_to_global(model, r);
    const ExprMatrix S = ExprMatrix::from_var(vars.S.at(r));
    for (int c = 0; c < S.cols(); ++c) {
      for (int rr = 0; rr < S.rows(); ++rr) {
        if (!S(rr, c).is_zero()) sum(to_global[rr], to_global[c]) += S(rr, c);
      }
    }
  }
  return make_lmi_block(std::move(label), sum, Sense::NegativeSemidefinite);
}

LmiBlock shape_in_halfspace(const ExprMatrix& shape, const Eigen::RowVectorXd& row, double offset,
                            std::string label) {
  if (shape.rows() != shape.cols() || row.cols() != shape.rows())
    throw std::invalid_argument("shape_in_halfspace: dimension mismatch");
  if (!(offset > 0.0)) throw std::invalid_argument("shape_in_halfspace: offset must be strictly positive");
  const int w = shape.rows();
  const ExprMatrix scaled = Matrix(row) * shape;  // 1 × w
  ExprMatrix block(w + 1, w + 1);
  block(0, 0) = LinExpr(offset * offset);
  block.accumulate(0, 1, scaled);
  block.accumulate(1, 0, scaled.transpose());
  block.accumulate(1, 1, shape);
  return make_lmi_block(std::move(label), block, Sense::PositiveSemidefinite);
}

LmiBlock gain_in_halfspace(const ExprMatrix& gain_preimage, const ExprMatrix& shape,
                           const Eigen::RowVectorXd& row, double offset, std::string label) {
  if (shape.rows() != shape.cols() || gain_preimage.cols() != shape.rows() ||
      row.cols() != gain_preimage.rows())
    throw std::invalid_argument("gain_in_halfspace: dimension mismatch");
  if (!(offset > 0.0)) throw std::invalid_argument("gain_in_halfspace: offset must be strictly positive");
  const int w = shape.rows();
  const ExprMatrix scaled = Matrix(row) * gain_preimage;  // 1 × w
  ExprMatrix block(w + 1, w + 1);
  block(0, 0) = LinExpr(offset * offset);
  block.accumulate(0, 1, scaled);
  block.accumulate(1, 0, scaled.transpose());
  block.accumulate(1, 1, shape);
  return make_lmi_block(std::move(label), block, Sense::PositiveSemidefinite);
}

LmiBlock point_in_scaled_shape(const Vector& z, const ExprMatrix& shape, int num_sets, std::string label) {
  std::vector<LinExpr> exprs(static_cast<std::size_t>(z.size()));
  for (Eigen::Index k = 0; k < z.size(); ++k) exprs[static_cast<std::size_t>(k)] = LinExpr(z[k]);
  return point_in_scaled_shape(exprs, shape, num_sets, std::move(label));
}

LmiBlock point_in_scaled_shape(const std::vector<LinExpr>& z, const ExprMatrix& shape, int num_sets,
                               std::string label) {
  if (shape.rows() != shape.cols() || static_cast<int>(z.size()) != shape.rows())
    throw std::invalid_argument("point_in_scaled_shape: dimension mismatch");
  if (num_sets <= 0) throw std::invalid_argument("point_in_scaled_shape: need a positive set count");
  const int w = shape.rows();
  ExprMatrix block(w + 1, w + 1);
  block(0, 0) = LinExpr(1.0 / static_cast<double>(num_sets));
  for (int k = 0; k < w; ++k) {
    block(0, k + 1) = z[static_cast<std::size_t>(k)];
    block(k + 1, 0) = z[static_cast<std::size_t>(k)];
  }
  block.accumulate(1, 1, shape);
  return make_lmi_block(std::move(label), block, Sense::PositiveSemidefinite);
}

LmiBlock shape_lower_bound(const MatrixVar& shape, double eps, std::string label) {
  if (!shape.symmetric) throw std::invalid_argument("shape_lower_bound: variable must be symmetric");
  if (!(eps > 0.0)) throw std::invalid_argument("shape_lower_bound: eps must be positive");
  const ExprMatrix m =
      ExprMatrix::from_var(shape) + ExprMatrix::constant(-eps * Matrix::Identity(shape.rows, shape.rows));
  return make_lmi_block(std::move(label), m, Sense::PositiveSemidefinite);
}

void add_invariance_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                           std::size_t vertex_cap) {
  for (int i = 0; i < model.num_agents(); ++i) {
    const std::vector<Vector> vertices = theta_vertices(model.agent(i).dynamics, vertex_cap);
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      problem.add_lmi(invariance_certificate(model, vars, i, vertices[v],
                                             "invariance[agent=" + std::to_string(i) +
                                                 ",vertex=" + std::to_string(v) + "]"));
    }
  }
}

void add_coupling_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                         bool with_global) {
  for (int i = 0; i < model.num_agents(); ++i) {
    problem.add_lmi(coupling_budget(model, vars, i, "coupling[agent=" + std::to_string(i) + "]"));
  }
  if (with_global) problem.add_lmi(global_coupling_budget(model, vars, "coupling[network]"));
}

void add_state_containment_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars) {
  for (int i = 0; i < model.num_agents(); ++i) {
    const PolytopicSet& set = model.agent(i).state_set;
    const ExprMatrix shape = neighborhood_shape(model, vars, i);
    for (int l = 0; l < set.rows(); ++l) {
      problem.add_lmi(shape_in_halfspace(shape, set.A.row(l), set.b[l],
                                         "state_bound[agent=" + std::to_string(i) +
                                             ",row=" + std::to_string(l) + "]"));
    }
  }
}

void add_input_containment_family(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars) {
  for (int i = 0; i < model.num_agents(); ++i) {
    const PolytopicSet& set = model.agent(i).input_set;
    const ExprMatrix shape = neighborhood_shape(model, vars, i);
    const ExprMatrix gain = ExprMatrix::from_var(vars.Y.at(i));
    for (int l = 0; l < set.rows(); ++l) {
      problem.add_lmi(gain_in_halfspace(gain, shape, set.A.row(l), set.b[l],
                                        "input_bound[agent=" + std::to_string(i) +
                                            ",row=" + std::to_string(l) + "]"));
    }
  }
}

void add_shape_lower_bounds(SdpProblem& problem, const NetworkModel& model, const StructuredVars& vars,
                            double eps) {
  for (int i = 0; i < model.num_agents(); ++i) {
    problem.add_lmi(shape_lower_bound(vars.E.at(i), eps, "shape_floor[agent=" + std::to_string(i) + "]"));
  }
}

}  // namespace safenet
