#pragma once

#include "safenet/synthesis.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace safenet {

// Thrown when the filter has no safe action: the state is outside every
// certified set, so no backup gain is guaranteed admissible. Under the
// invariance guarantee this cannot happen on trajectories that start inside
// the family and are filtered at every step.
struct SafetyFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How the one-step certificate is evaluated online.
//  GlobalSum: the exact network-wide test Σ_i |x⁺_i|²_{P_i} <= 1 (needs the
//    per-agent pieces to be summed, e.g. by consensus).
//  LocalConservative: each agent independently demands its own piece stay
//    within 1/N; sufficient for the global test, no communication needed,
//    but strictly more conservative.
enum class MembershipMode { GlobalSum, LocalConservative };

const char* to_string(MembershipMode mode);
MembershipMode membership_mode_from_string(const std::string& name);

// Σ_i |x_i|²_{P_i} for set j; membership in set j means <= 1.
double set_value(const CertifiedSetFamily& family, const NetworkModel& model, int j, const Vector& x);
// The per-agent pieces |x_i|²_{P_i} of that sum.
Vector agent_values(const CertifiedSetFamily& family, const NetworkModel& model, int j, const Vector& x);
// Smallest set index containing x (value <= 1 + tol), if any.
std::optional<int> member_set(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                              double tol = 1e-9);

// Worst-case one-step certificate for a proposed input: u must satisfy the
// input constraints, and for every per-agent parameter vertex the successor
// must land in set j (by the selected membership mode). Returns the smallest
// certifying j, or nullopt.
std::optional<int> certify_onestep(const CertifiedSetFamily& family, const NetworkModel& model,
                                   const Vector& x, const Vector& u, MembershipMode mode);

// Index of the certified set whose backup gains track u_learning best:
//   argmin_b Σ_i | u_{L,i} - K_i^{(b)} x_{N_i} |   s.t.  x in set b.
// Membership uses the exact global sum regardless of `mode` (a backup is only
// guaranteed safe from inside its set). Ties resolve to the lowest index.
// Throws SafetyFault when x lies in no certified set.
int best_backup(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                const Vector& u_learning, double tol = 1e-9);

struct FilterDecision {
  Vector u_applied;
  bool intervened = false;
  // Certifying set when passed through; backup set when intervening.
  int set_index = -1;
};

// One-step explicit filter: pass u_learning through when some set certifies
// it; otherwise fall back to the best-tracking backup gains.
FilterDecision explicit_step(const CertifiedSetFamily& family, const NetworkModel& model, const Vector& x,
                             const Vector& u_learning, MembershipMode mode);

}  // namespace safenet
