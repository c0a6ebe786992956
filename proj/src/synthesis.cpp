#include "safenet/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

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
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at("data").at(r).at(c).get<double>();
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

Matrix invert_spd(const Matrix& m, const std::string& what) {
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error(what + ": matrix is not positive definite");
  return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

}  // namespace

const char* to_string(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::MaximizeTraceSum: return "max-trace";
    case ObjectiveMode::MinimizeTraceSum: return "min-trace";
  }
  return "unknown";
}

ObjectiveMode objective_mode_from_string(const std::string& name) {
  if (name == "max-trace") return ObjectiveMode::MaximizeTraceSum;
  if (name == "min-trace") return ObjectiveMode::MinimizeTraceSum;
  throw std::invalid_argument("unknown objective mode: " + name + " (expected max-trace or min-trace)");
}

const char* to_string(AnchorMode mode) {
  switch (mode) {
    case AnchorMode::FreeWitness: return "free-witness";
    case AnchorMode::SeedCover: return "seed-cover";
  }
  return "unknown";
}

AnchorMode anchor_mode_from_string(const std::string& name) {
  if (name == "free-witness") return AnchorMode::FreeWitness;
  if (name == "seed-cover") return AnchorMode::SeedCover;
  throw std::invalid_argument("unknown anchor mode: " + name + " (expected free-witness or seed-cover)");
}

nlohmann::json CertifiedSetFamily::to_json() const {
  nlohmann::json sets_json = nlohmann::json::array();
  for (const CertifiedRegion& c : sets) {
    nlohmann::json e = nlohmann::json::array(), p = nlohmann::json::array(), k = nlohmann::json::array();
    for (const Matrix& m : c.E) e.push_back(matrix_to_json(m));
    for (const Matrix& m : c.P) p.push_back(matrix_to_json(m));
    for (const Matrix& m : c.K) k.push_back(matrix_to_json(m));
    sets_json.push_back(nlohmann::json{{"region_index", c.region_index},
                                       {"seed", vector_to_json(c.seed)},
                                       {"witness", vector_to_json(c.witness)},
                                       {"E", std::move(e)},
                                       {"P", std::move(p)},
                                       {"K", std::move(k)},
                                       {"objective", c.objective},
                                       {"backend", c.backend},
                                       {"solve_seconds", c.solve_seconds}});
  }
  nlohmann::json failures_json = nlohmann::json::array();
  for (const RegionFailure& f : failures) {
    failures_json.push_back(nlohmann::json{
        {"region_index", f.region_index}, {"status", to_string(f.status)}, {"message", f.message}});
  }
  return nlohmann::json{{"format", "safenet-family-v1"},
                        {"model_fingerprint", to_hex(model_fingerprint)},
                        {"partition_seed", partition_seed},
                        {"objective_mode", objective_mode},
                        {"anchor_mode", anchor_mode},
                        {"shape_floor", shape_floor},
                        {"global_coupling", global_coupling},
                        {"sets", std::move(sets_json)},
                        {"failures", std::move(failures_json)}};
}

CertifiedSetFamily CertifiedSetFamily::from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "safenet-family-v1")
    throw std::invalid_argument("CertifiedSetFamily::from_json: unknown format tag");
  CertifiedSetFamily fam;
  fam.model_fingerprint = std::stoull(j.at("model_fingerprint").get<std::string>(), nullptr, 16);
  fam.partition_seed = j.at("partition_seed").get<std::uint64_t>();
  fam.objective_mode = j.at("objective_mode").get<std::string>();
  fam.anchor_mode = j.value("anchor_mode", std::string(to_string(AnchorMode::FreeWitness)));
  fam.shape_floor = j.at("shape_floor").get<double>();
  fam.global_coupling = j.at("global_coupling").get<bool>();
  for (const auto& js : j.at("sets")) {
    CertifiedRegion c;
    c.region_index = js.at("region_index").get<int>();
    c.seed = vector_from_json(js.at("seed"));
    c.witness = vector_from_json(js.at("witness"));
    for (const auto& m : js.at("E")) c.E.push_back(matrix_from_json(m));
    for (const auto& m : js.at("P")) c.P.push_back(matrix_from_json(m));
    for (const auto& m : js.at("K")) c.K.push_back(matrix_from_json(m));
    c.objective = js.at("objective").get<double>();
    c.backend = js.value("backend", std::string());
    c.solve_seconds = js.value("solve_seconds", 0.0);
    fam.sets.push_back(std::move(c));
  }
  for (const auto& jf : j.at("failures")) {
    RegionFailure f;
    f.region_index = jf.at("region_index").get<int>();
    f.message = jf.at("message").get<std::string>();
    const std::string status = jf.at("status").get<std::string>();
    f.status = status == "infeasible" ? SolveStatus::Infeasible : SolveStatus::NumericalFailure;
    fam.failures.push_back(std::move(f));
  }
  return fam;
}

void CertifiedSetFamily::require_matches(const NetworkModel& model) const {
  if (model_fingerprint != model.fingerprint()) {
    throw std::invalid_argument(
        "certified set family was synthesized for a different model (fingerprint " +
        to_hex(model_fingerprint) + " vs " + to_hex(model.fingerprint()) + ")");
  }
}

namespace {

// Shared by the trace stage (anchor optionally pinning the witness) and the
// reach stage (witness tied to reach·seed, maximize reach).
SdpProblem build_cell_program(const NetworkModel& model, const Region& region,
                              const SynthesisOptions& options, StructuredVars* vars_out,
                              int* witness_base_out, const Vector* anchor, int* reach_var_out) {
  const int N = model.num_agents();
  const int n = model.state_dim();
  if (region.seed.size() != n) throw std::invalid_argument("build_region_program: region dimension mismatch");
  if (anchor != nullptr && anchor->size() != n)
    throw std::invalid_argument("build_region_program: anchor dimension mismatch");
  const bool reach_stage = reach_var_out != nullptr;

  SdpProblem problem;
  StructuredVars vars = declare_structured_vars(problem, model);
  const int witness = problem.add_scalar_vars("witness", n);

  add_invariance_family(problem, model, vars, options.vertex_cap);
  add_coupling_family(problem, model, vars, options.global_coupling);
  add_state_containment_family(problem, model, vars);
  add_input_containment_family(problem, model, vars);
  add_shape_lower_bounds(problem, model, vars, options.shape_floor);

  // Witness point: inside this cell...
  for (Eigen::Index l = 0; l < region.A.rows(); ++l) {
    LinearRow row;
    row.label = "witness_in_region[row=" + std::to_string(l) + "]";
    row.expr.constant = region.b[l];
    for (int d = 0; d < n; ++d) {
      if (region.A(l, d) != 0.0) row.expr.terms.push_back({witness + d, -region.A(l, d)});
    }
    problem.add_linear(std::move(row));
  }
  if (reach_stage) {
    // Reach stage: witness = reach·seed with reach ∈ [0, 1].
    const int reach = problem.add_scalar_vars("reach", 1);
    for (int d = 0; d < n; ++d) {
      LinearRow row;
      row.label = "witness_on_seed_ray[d=" + std::to_string(d) + "]";
      row.equality = true;
      row.expr.terms.push_back({witness + d, 1.0});
      if (region.seed[d] != 0.0) row.expr.terms.push_back({reach, -region.seed[d]});
      problem.add_linear(std::move(row));
    }
    LinearRow lo;
    lo.label = "reach_nonneg";
    lo.expr.terms.push_back({reach, 1.0});
    problem.add_linear(std::move(lo));
    LinearRow hi;
    hi.label = "reach_cap";
    hi.expr.constant = 1.0;
    hi.expr.terms.push_back({reach, -1.0});
    problem.add_linear(std::move(hi));
    *reach_var_out = reach;
  } else if (anchor != nullptr) {
    // Trace stage under seed anchoring: the witness is not optimized, it is
    // pinned to the reach stage's farthest coverable point on the seed ray.
    for (int d = 0; d < n; ++d) {
      LinearRow row;
      row.label = "witness_anchor[d=" + std::to_string(d) + "]";
      row.equality = true;
      row.expr.constant = -(*anchor)[d];
      row.expr.terms.push_back({witness + d, 1.0});
      problem.add_linear(std::move(row));
    }
  }
  // ...and inside every agent's 1/N-scaled set, so the family's intersection
  // with the cell is certified non-empty.
  for (int i = 0; i < N; ++i) {
    std::vector<LinExpr> z(static_cast<std::size_t>(model.state_dim(i)));
    for (int k = 0; k < model.state_dim(i); ++k)
      z[static_cast<std::size_t>(k)] = LinExpr::variable(witness + model.state_offset(i) + k);
    problem.add_lmi(point_in_scaled_shape(z, ExprMatrix::from_var(vars.E.at(i)), N,
                                          "witness_in_set[agent=" + std::to_string(i) + "]"));
  }

  std::vector<LinTerm> objective;
  if (reach_stage) {
    objective.push_back({*reach_var_out, -1.0});  // maximize reach
  } else {
    const double sign = options.objective == ObjectiveMode::MaximizeTraceSum ? -1.0 : 1.0;
    for (int i = 0; i < N; ++i) {
      for (int d = 0; d < model.state_dim(i); ++d) objective.push_back({vars.E[i].entry(d, d), sign});
    }
  }
  problem.set_objective(std::move(objective));

  if (vars_out != nullptr) *vars_out = vars;
  if (witness_base_out != nullptr) *witness_base_out = witness;
  return problem;
}

}  // namespace

SdpProblem build_region_program(const NetworkModel& model, const Region& region,
                                const SynthesisOptions& options, StructuredVars* vars_out,
                                int* witness_base_out, const Vector* anchor) {
  return build_cell_program(model, region, options, vars_out, witness_base_out, anchor, nullptr);
}

SdpProblem build_reach_program(const NetworkModel& model, const Region& region,
                               const SynthesisOptions& options, StructuredVars* vars_out,
                               int* reach_var_out) {
  int reach_var = 0;
  SdpProblem problem =
      build_cell_program(model, region, options, vars_out, nullptr, nullptr, &reach_var);
  if (reach_var_out != nullptr) *reach_var_out = reach_var;
  return problem;
}

RegionOutcome synthesize_region(const NetworkModel& model, const Region& region,
                                const SynthesisOptions& options, const SdpSolver& solver) {
  double reach = 1.0;
  std::optional<Vector> anchor;
  if (options.anchor == AnchorMode::SeedCover) {
    int reach_var = 0;
    const SdpProblem reach_program = build_reach_program(model, region, options, nullptr, &reach_var);
    const SolveResult reach_result = solver.solve(reach_program);
    if (reach_result.status != SolveStatus::Optimal) {
      RegionOutcome outcome;
      outcome.status = reach_result.status;
      outcome.message = "reach stage: " + reach_result.message;
      return outcome;
    }
    reach = std::clamp(reach_result.values[reach_var], 0.0, 1.0);
    // Anchor slightly inside the farthest coverable point so the trace stage
    // is strictly feasible — unless backing off would leave the cell.
    Vector pin = reach * region.seed;
    Vector backed = (0.995 * reach) * region.seed;
    if (region.contains(backed, 1e-12)) pin = std::move(backed);
    anchor = std::move(pin);
  }

  StructuredVars vars;
  int witness_base = 0;
  const SdpProblem problem = build_region_program(model, region, options, &vars, &witness_base,
                                                  anchor ? &*anchor : nullptr);
  const SolveResult result = solver.solve(problem);

  RegionOutcome outcome;
  outcome.status = result.status;
  outcome.message = result.message;
  if (result.status != SolveStatus::Optimal) return outcome;

  CertifiedRegion cert;
  cert.region_index = region.index;
  cert.seed = region.seed;
  cert.witness = Vector(model.state_dim());
  for (int d = 0; d < model.state_dim(); ++d) cert.witness[d] = result.values[witness_base + d];
  cert.objective = 0.0;
  cert.backend = result.backend;
  cert.solve_seconds = result.solve_seconds;
  cert.residual = result.residual;

  const int N = model.num_agents();
  cert.E.reserve(N);
  cert.P.reserve(N);
  cert.K.reserve(N);
  for (int i = 0; i < N; ++i) {
    Matrix E = symmetrize(ExprMatrix::from_var(vars.E[i]).evaluate(result.values));
    cert.objective += E.trace();
    cert.P.push_back(invert_spd(E, "synthesize_region: E[" + std::to_string(i) + "]"));
    cert.E.push_back(std::move(E));
  }
  for (int i = 0; i < N; ++i) {
    const Matrix Y = ExprMatrix::from_var(vars.Y[i]).evaluate(result.values);
    Matrix E_nbr = Matrix::Zero(model.neighborhood_dim(i), model.neighborhood_dim(i));
    int at = 0;
    for (int j : model.neighborhood_members(i)) {
      E_nbr.block(at, at, model.state_dim(j), model.state_dim(j)) = cert.E[j];
      at += model.state_dim(j);
    }
    const Eigen::LLT<Matrix> llt(E_nbr);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("synthesize_region: neighborhood shape is not positive definite");
    cert.K.push_back(llt.solve(Y.transpose()).transpose());
  }

  outcome.certified = std::move(cert);
  return outcome;
}

CertifiedSetFamily synthesize_family(const NetworkModel& model, const Partition& partition,
                                     const SynthesisOptions& options) {
  if (partition.model_fingerprint != model.fingerprint())
    throw std::invalid_argument("synthesize_family: partition was built for a different model");

  const int M = partition.size();
  std::vector<RegionOutcome> outcomes(static_cast<std::size_t>(M));
  const int workers = std::max(1, std::min(options.workers, M));

  std::atomic<int> next{0};
  auto run = [&]() {
    const SdpSolver solver(options.solver);
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= M) break;
      try {
        outcomes[static_cast<std::size_t>(k)] =
            synthesize_region(model, partition.region(k), options, solver);
      } catch (const std::exception& e) {
        outcomes[static_cast<std::size_t>(k)].status = SolveStatus::NumericalFailure;
        outcomes[static_cast<std::size_t>(k)].message = e.what();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }

  CertifiedSetFamily family;
  family.model_fingerprint = model.fingerprint();
  family.partition_seed = partition.seed;
  family.objective_mode = to_string(options.objective);
  family.anchor_mode = to_string(options.anchor);
  family.shape_floor = options.shape_floor;
  family.global_coupling = options.global_coupling;
  for (int k = 0; k < M; ++k) {
    RegionOutcome& o = outcomes[static_cast<std::size_t>(k)];
    if (o.certified.has_value()) {
      family.sets.push_back(std::move(*o.certified));
    } else {
      family.failures.push_back({k, o.status, o.message});
    }
  }

  if (options.validation_samples > 0) {
    for (CertifiedRegion& cert : family.sets) {
      Rng rng = Rng::derive(options.validation_seed, static_cast<std::uint64_t>(cert.region_index));
      cert.validation = validate_certified(cert, model, options.validation_samples, rng);
    }
  }
  return family;
}

Vector sample_boundary_state(const std::vector<Matrix>& P, const NetworkModel& model, Rng& rng) {
  const Vector z = rng.normal_vector(model.state_dim());
  double value = 0.0;
  for (int i = 0; i < model.num_agents(); ++i) {
    const Vector zi = z.segment(model.state_offset(i), model.state_dim(i));
    value += zi.dot(P.at(i) * zi);
  }
  if (value <= 0.0) throw std::runtime_error("sample_boundary_state: degenerate direction");
  return z / std::sqrt(value);
}

Vector backup_input(const CertifiedRegion& cert, const NetworkModel& model, const Vector& x) {
  Vector u(model.input_dim());
  for (int i = 0; i < model.num_agents(); ++i) {
    u.segment(model.input_offset(i), model.input_dim(i)) = cert.K.at(i) * model.neighborhood_state(x, i);
  }
  return u;
}

double worst_successor_value(const CertifiedRegion& cert, const NetworkModel& model, const Vector& x) {
  const Vector u = backup_input(cert, model, x);
  double total = 0.0;
  for (int i = 0; i < model.num_agents(); ++i) {
    const Vector x_nbr = model.neighborhood_state(x, i);
    const Vector u_i = u.segment(model.input_offset(i), model.input_dim(i));
    double worst = -std::numeric_limits<double>::infinity();
    for (const Vector& theta : theta_vertices(model.agent(i).dynamics)) {
      const auto [A, B] = model.agent(i).dynamics.eval(theta);
      const Vector next = A * x_nbr + B * u_i;
      worst = std::max(worst, next.dot(cert.P.at(i) * next));
    }
    total += worst;
  }
  return total;
}

ValidationReport validate_certified(const CertifiedRegion& cert, const NetworkModel& model, int samples,
                                    Rng& rng) {
  ValidationReport report;
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vector x = sample_boundary_state(cert.P, model, rng);
    report.max_successor_value = std::max(report.max_successor_value, worst_successor_value(cert, model, x));
    report.max_state_residual = std::max(report.max_state_residual, model.state_residual(x));
    report.max_input_residual =
        std::max(report.max_input_residual, model.input_residual(backup_input(cert, model, x)));
  }
  return report;
}

}  // namespace safenet
