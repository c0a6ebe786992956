#include "safenet/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace safenet {

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  Matrix m(rows, cols);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw std::invalid_argument("matrix_from_json: row count mismatch");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("matrix_from_json: col count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j.at(k).get<double>();
  return v;
}

}  // namespace

double PolytopicSet::residual(const Vector& z) const {
  if (z.size() != A.cols()) throw std::invalid_argument("PolytopicSet::residual: dimension mismatch");
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (A * z - b).maxCoeff();
}

bool PolytopicSet::contains(const Vector& z, double tol) const { return residual(z) <= tol; }

void PolytopicSet::require_origin_interior(const std::string& what) const {
  if (A.rows() != b.size()) throw std::invalid_argument(what + ": row count mismatch between A and b");
  for (Eigen::Index l = 0; l < b.size(); ++l) {
    if (!(b[l] > 0.0)) {
      throw std::invalid_argument(what + ": offset " + std::to_string(l) +
                                  " is not strictly positive; the set must contain the origin in its interior");
    }
  }
}

bool UncertainDynamics::theta_in_box(const Vector& theta, double tol) const {
  if (theta.size() != theta_lo.size()) return false;
  for (Eigen::Index v = 0; v < theta.size(); ++v) {
    const double scale = std::max(1.0, std::max(std::abs(theta_lo[v]), std::abs(theta_hi[v])));
    if (theta[v] < theta_lo[v] - tol * scale || theta[v] > theta_hi[v] + tol * scale) return false;
  }
  return true;
}

std::pair<Matrix, Matrix> UncertainDynamics::eval(const Vector& theta) const {
  if (!theta_in_box(theta)) throw std::invalid_argument("UncertainDynamics::eval: theta outside its box");
  Matrix A = A0;
  Matrix B = B0;
  for (int v = 0; v < param_count(); ++v) {
    if (theta[v] != 0.0) {
      A += theta[v] * A_sens[static_cast<std::size_t>(v)];
      B += theta[v] * B_sens[static_cast<std::size_t>(v)];
    }
  }
  return {std::move(A), std::move(B)};
}

std::vector<Vector> theta_vertices(const UncertainDynamics& dyn, std::size_t cap) {
  const int p = dyn.param_count();
  std::vector<int> free_dims;
  for (int v = 0; v < p; ++v) {
    if (dyn.theta_hi[v] - dyn.theta_lo[v] > 0.0) free_dims.push_back(v);
  }
  if (free_dims.size() >= 63 || (std::size_t{1} << free_dims.size()) > cap) {
    throw std::length_error("theta_vertices: 2^" + std::to_string(free_dims.size()) +
                            " vertices exceeds cap " + std::to_string(cap));
  }
  const std::size_t count = std::size_t{1} << free_dims.size();
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector theta = dyn.theta_lo;
    for (std::size_t b = 0; b < free_dims.size(); ++b) {
      if (mask & (std::size_t{1} << b)) theta[free_dims[b]] = dyn.theta_hi[free_dims[b]];
    }
    out.push_back(std::move(theta));
  }
  return out;
}

NetworkModel::NetworkModel(CommGraph graph, std::vector<Agent> agents, Vector sampling_lo,
                           Vector sampling_hi, std::string name)
    : graph_(std::move(graph)), agents_(std::move(agents)), name_(std::move(name)),
      sampling_lo_(std::move(sampling_lo)), sampling_hi_(std::move(sampling_hi)) {
  const int N = static_cast<int>(agents_.size());
  if (N != graph_.num_nodes()) throw std::invalid_argument("NetworkModel: agent count must match graph node count");

  state_offsets_.resize(N);
  input_offsets_.resize(N);
  theta_offsets_.resize(N);
  for (int i = 0; i < N; ++i) {
    const Agent& a = agents_[i];
    if (a.state_dim <= 0) throw std::invalid_argument("NetworkModel: agent state dimension must be positive");
    if (a.input_dim <= 0) throw std::invalid_argument("NetworkModel: agent input dimension must be positive");
    state_offsets_[i] = state_dim_;
    input_offsets_[i] = input_dim_;
    theta_offsets_[i] = theta_dim_;
    state_dim_ += a.state_dim;
    input_dim_ += a.input_dim;
    theta_dim_ += a.dynamics.param_count();
  }

  neighborhood_dims_.resize(N, 0);
  T_.resize(N);
  W_.resize(N);
  for (int i = 0; i < N; ++i) {
    const std::vector<int>& members = graph_.closed_neighborhood(i);
    int width = 0;
    for (int j : members) width += agents_[j].state_dim;
    neighborhood_dims_[i] = width;

    Matrix T = Matrix::Zero(agents_[i].state_dim, state_dim_);
    T.block(0, state_offsets_[i], agents_[i].state_dim, agents_[i].state_dim) =
        Matrix::Identity(agents_[i].state_dim, agents_[i].state_dim);
    T_[i] = std::move(T);

    Matrix W = Matrix::Zero(width, state_dim_);
    int row = 0;
    for (int j : members) {
      W.block(row, state_offsets_[j], agents_[j].state_dim, agents_[j].state_dim) =
          Matrix::Identity(agents_[j].state_dim, agents_[j].state_dim);
      row += agents_[j].state_dim;
    }
    W_[i] = std::move(W);
  }

  for (int i = 0; i < N; ++i) {
    const Agent& a = agents_[i];
    const UncertainDynamics& dyn = a.dynamics;
    const std::string who = "agent " + std::to_string(i);
    if (dyn.A0.rows() != a.state_dim || dyn.A0.cols() != neighborhood_dims_[i])
      throw std::invalid_argument("NetworkModel: " + who + ": A0 must be state_dim x neighborhood_dim");
    if (dyn.B0.rows() != a.state_dim || dyn.B0.cols() != a.input_dim)
      throw std::invalid_argument("NetworkModel: " + who + ": B0 must be state_dim x input_dim");
    if (dyn.theta_lo.size() != dyn.theta_hi.size())
      throw std::invalid_argument("NetworkModel: " + who + ": parameter bound sizes differ");
    for (Eigen::Index v = 0; v < dyn.theta_lo.size(); ++v) {
      if (!(dyn.theta_lo[v] <= dyn.theta_hi[v]))
        throw std::invalid_argument("NetworkModel: " + who + ": theta_lo must be <= theta_hi");
    }
    if (static_cast<int>(dyn.A_sens.size()) != dyn.param_count() ||
        static_cast<int>(dyn.B_sens.size()) != dyn.param_count())
      throw std::invalid_argument("NetworkModel: " + who + ": sensitivity count must equal parameter count");
    for (const Matrix& s : dyn.A_sens) {
      if (s.rows() != dyn.A0.rows() || s.cols() != dyn.A0.cols())
        throw std::invalid_argument("NetworkModel: " + who + ": A sensitivity dimension mismatch");
    }
    for (const Matrix& s : dyn.B_sens) {
      if (s.rows() != dyn.B0.rows() || s.cols() != dyn.B0.cols())
        throw std::invalid_argument("NetworkModel: " + who + ": B sensitivity dimension mismatch");
    }
    if (a.state_set.dim() != neighborhood_dims_[i])
      throw std::invalid_argument("NetworkModel: " + who + ": state constraint rows must span the neighborhood state");
    if (a.input_set.dim() != a.input_dim)
      throw std::invalid_argument("NetworkModel: " + who + ": input constraint rows must span the agent input");
    a.state_set.require_origin_interior("NetworkModel: " + who + " state set");
    a.input_set.require_origin_interior("NetworkModel: " + who + " input set");
  }

  if (sampling_lo_.size() != state_dim_ || sampling_hi_.size() != state_dim_)
    throw std::invalid_argument("NetworkModel: sampling box must span the global state");
  for (Eigen::Index k = 0; k < sampling_lo_.size(); ++k) {
    if (!(sampling_lo_[k] <= sampling_hi_[k]) || !std::isfinite(sampling_lo_[k]) || !std::isfinite(sampling_hi_[k]))
      throw std::invalid_argument("NetworkModel: sampling box must be finite with lo <= hi");
  }
}

int NetworkModel::offset_in_neighborhood(int i, int j) const {
  const std::vector<int>& members = neighborhood_members(i);
  int offset = 0;
  for (int member : members) {
    if (member == j) return offset;
    offset += agents_[member].state_dim;
  }
  throw std::invalid_argument("NetworkModel::offset_in_neighborhood: agent " + std::to_string(j) +
                              " is not in the closed neighborhood of " + std::to_string(i));
}

Vector NetworkModel::own_state(const Vector& x, int i) const {
  if (x.size() != state_dim_) throw std::invalid_argument("NetworkModel::own_state: dimension mismatch");
  return x.segment(state_offsets_.at(i), agents_.at(i).state_dim);
}

Vector NetworkModel::neighborhood_state(const Vector& x, int i) const {
  if (x.size() != state_dim_) throw std::invalid_argument("NetworkModel::neighborhood_state: dimension mismatch");
  Vector out(neighborhood_dims_.at(i));
  int row = 0;
  for (int j : neighborhood_members(i)) {
    out.segment(row, agents_[j].state_dim) = x.segment(state_offsets_[j], agents_[j].state_dim);
    row += agents_[j].state_dim;
  }
  return out;
}

Vector NetworkModel::theta_slice(const Vector& theta, int i) const {
  if (theta.size() != theta_dim_) throw std::invalid_argument("NetworkModel::theta_slice: dimension mismatch");
  return theta.segment(theta_offsets_.at(i), agents_.at(i).dynamics.param_count());
}

std::pair<Matrix, Matrix> NetworkModel::assemble_global(const Vector& theta) const {
  Matrix A = Matrix::Zero(state_dim_, state_dim_);
  Matrix B = Matrix::Zero(state_dim_, input_dim_);
  for (int i = 0; i < num_agents(); ++i) {
    const auto [Ai, Bi] = agents_[i].dynamics.eval(theta_slice(theta, i));
    A.middleRows(state_offsets_[i], agents_[i].state_dim) += Ai * W_[i];
    B.block(state_offsets_[i], input_offsets_[i], agents_[i].state_dim, agents_[i].input_dim) = Bi;
  }
  return {std::move(A), std::move(B)};
}

Vector NetworkModel::step(const Vector& x, const Vector& u, const Vector& theta) const {
  if (u.size() != input_dim_) throw std::invalid_argument("NetworkModel::step: input dimension mismatch");
  Vector next(state_dim_);
  for (int i = 0; i < num_agents(); ++i) {
    const auto [Ai, Bi] = agents_[i].dynamics.eval(theta_slice(theta, i));
    next.segment(state_offsets_[i], agents_[i].state_dim) =
        Ai * neighborhood_state(x, i) + Bi * u.segment(input_offsets_[i], agents_[i].input_dim);
  }
  return next;
}

Vector NetworkModel::nominal_theta() const {
  Vector out(theta_dim_);
  for (int i = 0; i < num_agents(); ++i)
    out.segment(theta_offsets_[i], agents_[i].dynamics.param_count()) = agents_[i].dynamics.nominal_theta();
  return out;
}

Vector NetworkModel::theta_lo() const {
  Vector out(theta_dim_);
  for (int i = 0; i < num_agents(); ++i)
    out.segment(theta_offsets_[i], agents_[i].dynamics.param_count()) = agents_[i].dynamics.theta_lo;
  return out;
}

Vector NetworkModel::theta_hi() const {
  Vector out(theta_dim_);
  for (int i = 0; i < num_agents(); ++i)
    out.segment(theta_offsets_[i], agents_[i].dynamics.param_count()) = agents_[i].dynamics.theta_hi;
  return out;
}

Vector NetworkModel::sample_theta(Rng& rng) const { return rng.uniform_vector(theta_lo(), theta_hi()); }

double NetworkModel::state_residual(const Vector& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_agents(); ++i)
    worst = std::max(worst, agents_[i].state_set.residual(neighborhood_state(x, i)));
  return worst;
}

double NetworkModel::input_residual(const Vector& u) const {
  if (u.size() != input_dim_) throw std::invalid_argument("NetworkModel::input_residual: dimension mismatch");
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_agents(); ++i)
    worst = std::max(worst, agents_[i].input_set.residual(u.segment(input_offsets_[i], agents_[i].input_dim)));
  return worst;
}

bool NetworkModel::state_admissible(const Vector& x, double tol) const { return state_residual(x) <= tol; }

bool NetworkModel::input_admissible(const Vector& u, double tol) const { return input_residual(u) <= tol; }

Vector NetworkModel::sample_state(Rng& rng, int max_tries) const {
  for (int t = 0; t < max_tries; ++t) {
    Vector x = rng.uniform_vector(sampling_lo_, sampling_hi_);
    if (state_admissible(x, 0.0)) return x;
  }
  throw std::runtime_error("NetworkModel::sample_state: rejection sampling failed after " +
                           std::to_string(max_tries) + " tries");
}

nlohmann::json NetworkModel::to_json() const {
  nlohmann::json agents = nlohmann::json::array();
  for (const Agent& a : agents_) {
    nlohmann::json sens_a = nlohmann::json::array();
    nlohmann::json sens_b = nlohmann::json::array();
    for (const Matrix& s : a.dynamics.A_sens) sens_a.push_back(matrix_to_json(s));
    for (const Matrix& s : a.dynamics.B_sens) sens_b.push_back(matrix_to_json(s));
    agents.push_back(nlohmann::json{
        {"state_dim", a.state_dim},
        {"input_dim", a.input_dim},
        {"dynamics",
         {{"A0", matrix_to_json(a.dynamics.A0)},
          {"B0", matrix_to_json(a.dynamics.B0)},
          {"A_sens", std::move(sens_a)},
          {"B_sens", std::move(sens_b)},
          {"theta_lo", vector_to_json(a.dynamics.theta_lo)},
          {"theta_hi", vector_to_json(a.dynamics.theta_hi)}}},
        {"state_set", {{"A", matrix_to_json(a.state_set.A)}, {"b", vector_to_json(a.state_set.b)}}},
        {"input_set", {{"A", matrix_to_json(a.input_set.A)}, {"b", vector_to_json(a.input_set.b)}}}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : graph_.edges()) edges.push_back(nlohmann::json::array({a, b}));
  return nlohmann::json{{"format", "safenet-model-v1"},
                        {"name", name_},
                        {"num_agents", num_agents()},
                        {"edges", std::move(edges)},
                        {"agents", std::move(agents)},
                        {"sampling_lo", vector_to_json(sampling_lo_)},
                        {"sampling_hi", vector_to_json(sampling_hi_)}};
}

NetworkModel NetworkModel::from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "safenet-model-v1")
    throw std::invalid_argument("NetworkModel::from_json: unknown format tag");
  const int N = j.at("num_agents").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  CommGraph graph(N, std::move(edges));

  std::vector<Agent> agents;
  for (const auto& ja : j.at("agents")) {
    Agent a;
    a.state_dim = ja.at("state_dim").get<int>();
    a.input_dim = ja.at("input_dim").get<int>();
    const auto& jd = ja.at("dynamics");
    a.dynamics.A0 = matrix_from_json(jd.at("A0"));
    a.dynamics.B0 = matrix_from_json(jd.at("B0"));
    for (const auto& s : jd.at("A_sens")) a.dynamics.A_sens.push_back(matrix_from_json(s));
    for (const auto& s : jd.at("B_sens")) a.dynamics.B_sens.push_back(matrix_from_json(s));
    a.dynamics.theta_lo = vector_from_json(jd.at("theta_lo"));
    a.dynamics.theta_hi = vector_from_json(jd.at("theta_hi"));
    a.state_set.A = matrix_from_json(ja.at("state_set").at("A"));
    a.state_set.b = vector_from_json(ja.at("state_set").at("b"));
    a.input_set.A = matrix_from_json(ja.at("input_set").at("A"));
    a.input_set.b = vector_from_json(ja.at("input_set").at("b"));
    agents.push_back(std::move(a));
  }
  return NetworkModel(std::move(graph), std::move(agents), vector_from_json(j.at("sampling_lo")),
                      vector_from_json(j.at("sampling_hi")), j.at("name").get<std::string>());
}

std::uint64_t NetworkModel::fingerprint() const { return fnv1a64(to_json().dump()); }

}  // namespace safenet
