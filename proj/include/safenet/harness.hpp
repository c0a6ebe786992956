#pragma once

#include "safenet/consensus.hpp"
#include "safenet/explicit_filter.hpp"
#include "safenet/implicit_filter.hpp"
#include "safenet/partition.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace safenet {

// Learning-input stand-ins used to exercise the filters.
//   Zero: no input.
//   UniformRandom: per-axis uniform noise scaled against the input bounds.
//   NoisyRegulation: crude stabilizing feedback plus noise, clipped.
//   AdversarialOutward: bang-bang push that drives each agent away from the
//     origin; with scale > 1 it also violates the input bounds on its own.
enum class PolicyKind { Zero, UniformRandom, NoisyRegulation, AdversarialOutward };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyStub {
  PolicyKind kind = PolicyKind::UniformRandom;
  double scale = 1.0;
  double noise = 0.1;  // NoisyRegulation only
};

// Largest t with t·e_axis inside the set (symmetric axis bound).
double axis_bound(const PolytopicSet& set, int axis);

Vector policy_input(const PolicyStub& policy, const NetworkModel& model, const Vector& x, Rng& rng);

enum class FilterKind { None, Explicit, Implicit };

const char* to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

struct EpisodeConfig {
  FilterKind filter = FilterKind::Explicit;
  MembershipMode membership = MembershipMode::GlobalSum;
  int horizon = 1000;
  std::uint64_t seed = 0;
  // Draw x0 from the sampling distribution until it lies in some certified
  // set (required for the invariance guarantee); off = plain sampling draw.
  bool start_inside_family = true;
  int start_tries = 10000;
  std::optional<Vector> initial_state;  // overrides sampling when set
};

struct StepRecord {
  int step = 0;
  Vector state;        // before the step
  Vector u_learning;
  Vector u_applied;
  bool intervened = false;
  int set_index = -1;           // explicit filter decision set
  double correction_norm = 0.0; // implicit filter correction magnitude
  double state_residual = 0.0;  // of the successor
  double input_residual = 0.0;  // of the applied input
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  int horizon = 0;
  int violations = 0;     // steps whose successor state or applied input broke a constraint
  int interventions = 0;
  bool filter_fault = false;  // filter had no certified action at some step
  std::string fault_message;
  Vector initial_state;
  Vector final_state;
  std::vector<StepRecord> steps;

  void write_csv(std::ostream& os) const;
};

// Simulates one episode under time-varying parameters drawn uniformly from
// the box each step. `family` may be null for FilterKind::None; `solver` may
// be null unless FilterKind::Implicit.
EpisodeTrace run_episode(const NetworkModel& model, const CertifiedSetFamily* family,
                         const SdpSolver* solver, const EpisodeConfig& config, const PolicyStub& policy,
                         const ImplicitFilterOptions& implicit_options = {});

// Fraction of sampling-distribution draws covered by the family (inside some
// certified set), with the binomial standard error.
struct CoverageReport {
  int samples = 0;
  int covered = 0;
  double fraction = 0.0;
  double std_error = 0.0;
};

CoverageReport coverage_fraction(const NetworkModel& model, const CertifiedSetFamily& family, int samples,
                                 Rng& rng);

// One sweep cell: set count and parameter-uncertainty level, with the
// coverage fractions of `partitions_per_cell` independently seeded
// partitions. Partition and evaluation seeds depend only on the partition
// id, so cells are paired across gamma levels and set counts.
struct CoverageCell {
  int set_count = 0;
  double gamma = 0.0;
  std::vector<double> fractions;
  std::vector<int> certified_counts;  // certified regions per partition
  double mean = 0.0;
  double std_error = 0.0;  // of the mean across partitions + sampling noise
};

using ModelFactory = std::function<NetworkModel(double gamma)>;

std::vector<CoverageCell> coverage_sweep(const ModelFactory& factory, const std::vector<int>& set_counts,
                                         const std::vector<double>& gammas, int partitions_per_cell,
                                         int samples_per_partition, std::uint64_t master_seed,
                                         const SynthesisOptions& synthesis);

// Samples (state, learning input) pairs that the explicit filter certifies,
// then verifies the per-step filter agrees each time: it must be feasible
// and return an (essentially) zero correction.
struct FilterAgreementReport {
  int certified_pairs = 0;   // pairs collected (explicitly certified)
  int attempts = 0;          // pairs sampled overall
  int implicit_failures = 0; // per-step filter infeasible/failed on a certified pair
  double max_correction_norm = 0.0;
  double mean_correction_norm = 0.0;
};

FilterAgreementReport compare_filters(const NetworkModel& model, const CertifiedSetFamily& family,
                                      int certified_pairs, MembershipMode mode, std::uint64_t seed,
                                      const ImplicitFilterOptions& implicit_options,
                                      const SdpSolver& solver, int max_attempts = 100000);

}  // namespace safenet
