#include "safenet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace safenet {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Zero: return "zero";
    case PolicyKind::UniformRandom: return "uniform-random";
    case PolicyKind::NoisyRegulation: return "noisy-regulation";
    case PolicyKind::AdversarialOutward: return "adversarial-outward";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "zero") return PolicyKind::Zero;
  if (name == "uniform-random") return PolicyKind::UniformRandom;
  if (name == "noisy-regulation") return PolicyKind::NoisyRegulation;
  if (name == "adversarial-outward") return PolicyKind::AdversarialOutward;
  throw std::invalid_argument("unknown policy kind: " + name);
}

const char* to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::None: return "none";
    case FilterKind::Explicit: return "explicit";
    case FilterKind::Implicit: return "implicit";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "none") return FilterKind::None;
  if (name == "explicit") return FilterKind::Explicit;
  if (name == "implicit") return FilterKind::Implicit;
  throw std::invalid_argument("unknown filter kind: " + name);
}

double axis_bound(const PolytopicSet& set, int axis) {
  if (axis < 0 || axis >= set.dim()) throw std::out_of_range("axis_bound: axis out of range");
  double plus = std::numeric_limits<double>::infinity();
  double minus = std::numeric_limits<double>::infinity();
  for (int l = 0; l < set.rows(); ++l) {
    const double a = set.A(l, axis);
    if (a > 0.0) plus = std::min(plus, set.b[l] / a);
    if (a < 0.0) minus = std::min(minus, set.b[l] / -a);
  }
  return std::min(plus, minus);
}

Vector policy_input(const PolicyStub& policy, const NetworkModel& model, const Vector& x, Rng& rng) {
  Vector u = Vector::Zero(model.input_dim());
  if (policy.kind == PolicyKind::Zero) return u;

  for (int i = 0; i < model.num_agents(); ++i) {
    const PolytopicSet& set = model.agent(i).input_set;
    const int m = model.input_dim(i);
    const int at = model.input_offset(i);
    switch (policy.kind) {
      case PolicyKind::Zero:
        break;
      case PolicyKind::UniformRandom: {
        for (int k = 0; k < m; ++k) {
          const double bound = policy.scale * axis_bound(set, k);
          u[at + k] = rng.uniform(-bound, bound);
        }
        break;
      }
      case PolicyKind::NoisyRegulation: {
        const auto [A, B] = model.agent(i).dynamics.eval(model.agent(i).dynamics.nominal_theta());
        (void)A;
        const Vector feedback = -policy.scale * (B.transpose() * model.own_state(x, i));
        for (int k = 0; k < m; ++k) {
          const double bound = axis_bound(set, k);
          const double noisy = feedback[k] + policy.noise * bound * rng.uniform(-1.0, 1.0);
          u[at + k] = std::clamp(noisy, -bound, bound);
        }
        break;
      }
      case PolicyKind::AdversarialOutward: {
        const auto [A, B] = model.agent(i).dynamics.eval(model.agent(i).dynamics.nominal_theta());
        (void)A;
        const Vector gradient = B.transpose() * model.own_state(x, i);
        for (int k = 0; k < m; ++k) {
          const double bound = axis_bound(set, k);
          const double direction = gradient[k] >= 0.0 ? 1.0 : -1.0;
          u[at + k] = policy.scale * bound * direction;
        }
        break;
      }
    }
  }
  return u;
}

void EpisodeTrace::write_csv(std::ostream& os) const {
  os << std::setprecision(17);
  os << "step";
  const Eigen::Index n = initial_state.size();
  const Eigen::Index m = steps.empty() ? 0 : steps.front().u_applied.size();
  for (Eigen::Index d = 0; d < n; ++d) os << ",x" << d;
  for (Eigen::Index d = 0; d < m; ++d) os << ",u_learning" << d;
  for (Eigen::Index d = 0; d < m; ++d) os << ",u_applied" << d;
  os << ",intervened,set_index,correction_norm,state_residual,input_residual\n";
  for (const StepRecord& rec : steps) {
    os << rec.step;
    for (Eigen::Index d = 0; d < n; ++d) os << "," << rec.state[d];
    for (Eigen::Index d = 0; d < m; ++d) os << "," << rec.u_learning[d];
    for (Eigen::Index d = 0; d < m; ++d) os << "," << rec.u_applied[d];
    os << "," << (rec.intervened ? 1 : 0) << "," << rec.set_index << "," << rec.correction_norm << ","
       << rec.state_residual << "," << rec.input_residual << "\n";
  }
}

EpisodeTrace run_episode(const NetworkModel& model, const CertifiedSetFamily* family,
                         const SdpSolver* solver, const EpisodeConfig& config, const PolicyStub& policy,
                         const ImplicitFilterOptions& implicit_options) {
  if (config.filter == FilterKind::Explicit && family == nullptr)
    throw std::invalid_argument("run_episode: explicit filtering needs a certified set family");
  if (config.filter == FilterKind::Implicit && solver == nullptr)
    throw std::invalid_argument("run_episode: per-step filtering needs a solver");
  if (family != nullptr) family->require_matches(model);

  Rng rng_start = Rng::derive(config.seed, 1);
  Rng rng_theta = Rng::derive(config.seed, 2);
  Rng rng_policy = Rng::derive(config.seed, 3);

  // Violations are counted against a hair of numerical grace; everything the
  // filters are expected to prevent is macroscopic.
  constexpr double kViolationTol = 1e-9;

  EpisodeTrace trace;
  trace.seed = config.seed;
  trace.horizon = config.horizon;

  Vector x;
  if (config.initial_state.has_value()) {
    x = *config.initial_state;
    if (x.size() != model.state_dim()) throw std::invalid_argument("run_episode: initial state dimension mismatch");
  } else if (config.start_inside_family && family != nullptr) {
    bool found = false;
    for (int t = 0; t < config.start_tries; ++t) {
      x = model.sample_state(rng_start);
      if (member_set(*family, model, x).has_value()) {
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error("run_episode: could not sample an initial state inside the certified family");
  } else {
    x = model.sample_state(rng_start);
  }
  trace.initial_state = x;

  for (int k = 0; k < config.horizon; ++k) {
    StepRecord rec;
    rec.step = k;
    rec.state = x;
    rec.u_learning = policy_input(policy, model, x, rng_policy);

    Vector u = rec.u_learning;
    switch (config.filter) {
      case FilterKind::None:
        break;
      case FilterKind::Explicit: {
        try {
          const FilterDecision decision = explicit_step(*family, model, x, rec.u_learning, config.membership);
          u = decision.u_applied;
          rec.intervened = decision.intervened;
          rec.set_index = decision.set_index;
        } catch (const SafetyFault& fault) {
          trace.filter_fault = true;
          trace.fault_message = fault.what();
        }
        break;
      }
      case FilterKind::Implicit: {
        const ImplicitDecision decision = implicit_step(model, x, rec.u_learning, implicit_options, *solver);
        if (decision.certified) {
          u = decision.u_applied;
          rec.intervened = decision.correction_norm > 1e-9;
          rec.correction_norm = decision.correction_norm;
        } else {
          trace.filter_fault = true;
          trace.fault_message = "per-step filter not certified: " + decision.message;
        }
        break;
      }
    }
    rec.u_applied = u;
    if (rec.intervened) ++trace.interventions;

    const Vector theta = model.sample_theta(rng_theta);
    const Vector next = model.step(x, u, theta);
    rec.state_residual = model.state_residual(next);
    rec.input_residual = model.input_residual(u);
    if (rec.state_residual > kViolationTol || rec.input_residual > kViolationTol) ++trace.violations;

    trace.steps.push_back(std::move(rec));
    x = next;
  }
  trace.final_state = x;
  return trace;
}

CoverageReport coverage_fraction(const NetworkModel& model, const CertifiedSetFamily& family, int samples,
                                 Rng& rng) {
  family.require_matches(model);
  CoverageReport report;
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vector x = model.sample_state(rng);
    if (member_set(family, model, x).has_value()) ++report.covered;
  }
  report.fraction = samples > 0 ? static_cast<double>(report.covered) / samples : 0.0;
  report.std_error = samples > 0 ? std::sqrt(report.fraction * (1.0 - report.fraction) / samples) : 0.0;
  return report;
}

std::vector<CoverageCell> coverage_sweep(const ModelFactory& factory, const std::vector<int>& set_counts,
                                         const std::vector<double>& gammas, int partitions_per_cell,
                                         int samples_per_partition, std::uint64_t master_seed,
                                         const SynthesisOptions& synthesis) {
  if (partitions_per_cell <= 0) throw std::invalid_argument("coverage_sweep: need at least one partition");
  std::vector<CoverageCell> cells;
  for (const int M : set_counts) {
    for (const double gamma : gammas) {
      const NetworkModel model = factory(gamma);
      CoverageCell cell;
      cell.set_count = M;
      cell.gamma = gamma;
      for (int p = 0; p < partitions_per_cell; ++p) {
        // Seeds depend only on the partition id, so cells are paired: the
        // p-th partition draws the same cell seeds and the same evaluation
        // states in every cell of the sweep.
        const std::uint64_t partition_seed = master_seed * 1000003ull + static_cast<std::uint64_t>(p);
        const Partition partition = make_partition(model, M, partition_seed);
        const CertifiedSetFamily family = synthesize_family(model, partition, synthesis);
        Rng eval_rng = Rng::derive(master_seed, 0xC0FFEEull + static_cast<std::uint64_t>(p));
        const CoverageReport report = coverage_fraction(model, family, samples_per_partition, eval_rng);
        cell.fractions.push_back(report.fraction);
        cell.certified_counts.push_back(family.size());
      }
      const int P = partitions_per_cell;
      double mean = 0.0;
      for (double f : cell.fractions) mean += f;
      mean /= P;
      cell.mean = mean;
      if (P > 1) {
        double var = 0.0;
        for (double f : cell.fractions) var += (f - mean) * (f - mean);
        var /= (P - 1);
        cell.std_error = std::sqrt(var / P);
      } else {
        cell.std_error = std::sqrt(std::max(mean * (1.0 - mean), 1e-12) / samples_per_partition);
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

FilterAgreementReport compare_filters(const NetworkModel& model, const CertifiedSetFamily& family,
                                      int certified_pairs, MembershipMode mode, std::uint64_t seed,
                                      const ImplicitFilterOptions& implicit_options,
                                      const SdpSolver& solver, int max_attempts) {
  family.require_matches(model);
  Rng rng_state = Rng::derive(seed, 11);
  Rng rng_input = Rng::derive(seed, 13);
  const PolicyStub policy{PolicyKind::UniformRandom, 0.5, 0.0};

  FilterAgreementReport report;
  double total_norm = 0.0;
  while (report.certified_pairs < certified_pairs && report.attempts < max_attempts) {
    ++report.attempts;
    const Vector x = model.sample_state(rng_state);
    const Vector u = policy_input(policy, model, x, rng_input);
    if (!certify_onestep(family, model, x, u, mode).has_value()) continue;

    const ImplicitDecision decision = implicit_step(model, x, u, implicit_options, solver);
    if (!decision.certified) {
      ++report.implicit_failures;
      ++report.certified_pairs;
      continue;
    }
    report.max_correction_norm = std::max(report.max_correction_norm, decision.correction_norm);
    total_norm += decision.correction_norm;
    ++report.certified_pairs;
  }
  if (report.certified_pairs > 0) report.mean_correction_norm = total_norm / report.certified_pairs;
  return report;
}

}  // namespace safenet
