#pragma once

#include "dentlab/geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>

namespace dentlab {

enum class DeriveMode { exact, cluster };

// One derivation step. Every removed index carries a witness slice that
// contains it and has oscillation <= eps; survivors are ascending.
struct DerivationStage {
  IndexSet survivors;
  std::map<std::size_t, Slice> removal_witnesses;
};

struct DerivationTrace {
  double epsilon = 0.0;
  DeriveMode mode = DeriveMode::exact;
  std::vector<DerivationStage> stages;
  bool stalled = false;
  int dz = 0;          // when !stalled: number of steps until the stage set empties
  int stalled_at = 0;  // when stalled: 1-based stage whose survivors repeated
  // Stage set entering step k (0-based): full domain for k = 0, otherwise
  // stages[k-1].survivors.
  IndexSet stage_set(std::size_t k, std::size_t domain_size) const;
};

// delta(eps) = min ||x - y||_2 over pairs with value distance >= eps;
// +inf sentinel when no pair qualifies.
struct ModulusTable {
  std::vector<std::pair<double, double>> pairs;  // (eps, delta)
  double delta(double eps) const;                // exact lookup, throws if absent
};

struct DentingResult {
  bool denting = false;
  Slice witness;  // contains the tested point, oscillation <= eps
};

// Points of D whose value lies strictly farther than eps/2 from f(x).
IndexSet far_set(const ScoredMap& f, const IndexSet& D, std::size_t x, double eps);

// Prop-style denting test over the full domain of f: denting iff x lies
// outside conv of its far set (empty far set succeeds by convention, the
// witness then being a full-domain slice).
DentingResult denting_test(const ScoredMap& f, std::size_t x, double eps, const Tolerances& tol);

// A cut subset of D: members = { y in D : u(y) > threshold } for some u.
struct CutWitness {
  Functional u;
  double threshold = 0.0;
  IndexSet members;
  double osc = 0.0;
};

// True when the exact cut-subset enumeration is feasible: n <= 200 in
// dimension <= 2, n <= 16 in any dimension.
bool exact_capacity_ok(std::size_t n, std::size_t dim, std::size_t cap_override = 0);

// For each position in D: a witness cut subset containing that point with
// oscillation <= eps (or < eps when strict), if one exists. This is the
// exact removal predicate of one derivation step. Throws CapacityError
// above the enumeration caps.
std::vector<std::optional<CutWitness>> exact_removals(const ScoredMap& f, const IndexSet& D,
                                                      double eps, const Tolerances& tol,
                                                      bool strict = false);

// One derivation step on D. Exact mode enumerates cut subsets; cluster mode
// removes x iff denting_test succeeds (far sets taken over the full domain,
// so stalled fixed points are detectable).
DerivationStage derive_once(const ScoredMap& f, const IndexSet& D, double eps, DeriveMode mode,
                            const Tolerances& tol);

// Iterates derive_once from the full domain until the stage set empties
// (finite index) or repeats (stall).
DerivationTrace dz_index(const ScoredMap& f, double eps, DeriveMode mode, const Tolerances& tol);

struct LancienViolation {
  int stage = 0;
  Functional u;
  double osc = 0.0;
};

struct LancienReport {
  int checked = 0;
  int violations = 0;
  double max_osc = 0.0;
  double bound = 0.0;  // 2*eps + osc_tol
  std::vector<LancienViolation> examples;
};

// For each stage transition D -> D' of the trace and `trials` sampled
// directions, takes the largest slice of D missing D' (threshold at the
// support of D') and asserts its oscillation <= 2*eps + osc_tol. Smaller
// slices missing D' are contained in that one, so checking it dominates.
LancienReport lancien_check(const ScoredMap& f, double eps, const DerivationTrace& trace,
                            int trials, const Tolerances& tol, std::uint64_t seed = 1);

ModulusTable modulus_delta(const ScoredMap& f, const std::vector<double>& eps_grid);

struct FindSliceResult {
  enum class Status { found, none_certified, unknown };
  Status status = Status::unknown;
  Slice slice;  // valid when found
  double achieved_osc = 0.0;
};

// Searches for a nonempty slice of A with oscillation < eps: denting scan
// over the points of A (far sets within A), then a budgeted seeded random
// direction search, then, within capacity, the exact enumeration which
// either finds a qualifying cut subset or certifies none exists.
FindSliceResult find_small_slice(const ScoredMap& f, const IndexSet& A, double eps,
                                 const Tolerances& tol, std::uint64_t seed = 1);

// Simultaneous small slice for several maps on one domain: applies
// find_small_slice to the product map whose value distance is the pairwise
// maximum of the component distances.
FindSliceResult equi_slice(const std::vector<ScoredMap>& fs, const IndexSet& A, double eps,
                           const Tolerances& tol, std::uint64_t seed = 1);

// The product map used by equi_slice (exposed for tests and the CLI).
ScoredMap product_map(const std::vector<ScoredMap>& fs);

}  // namespace dentlab
