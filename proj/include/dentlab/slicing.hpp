#pragma once

#include "dentlab/dentability.hpp"

namespace dentlab {

struct SlicingProfile {
  enum class Verdict { strongly_slicing, inconclusive, refuted };
  Functional functional;
  std::vector<std::pair<double, double>> samples;  // (t, oscillation) along the t_schedule
  Verdict verdict = Verdict::inconclusive;
  // On a finite set the t -> 0 limit is the oscillation over the argmax
  // face; that value decides the verdict (<= osc_tol: strongly slicing).
  double floor = 0.0;
  // log-log slope of oscillation vs t over the strictly decreasing regime;
  // 0 when fewer than two such samples exist.
  double rate = 0.0;
};

SlicingProfile ss_profile(const ScoredMap& f, const IndexSet& A, const Functional& u,
                          const Tolerances& tol);

// Deterministic sample of the radius-r disc in ker u: 2*d*(d-1) lattice
// points (each kernel basis axis at d radii, both signs) plus 64 seeded
// points. mesh_out receives the covering radius of the sample inside the
// disc (exact for d = 2, a conservative estimate above).
std::vector<Vec> sample_disc(const Functional& u, double r, std::uint64_t seed, double* mesh_out);

struct SsPerturbResult {
  enum class Status { found, inconclusive };
  Status status = Status::inconclusive;
  Functional y_star;       // best candidate either way
  Slice slice;             // slice of A under y_star
  double perturbation_norm = kInf;
  double achieved_osc = kInf;
};

// Constructive perturbation: returns y* with ||u - y*|| < eps whose slice of
// A has oscillation < n_target. u itself is tried first along the
// t_schedule; otherwise candidates u + rho*w are screened against the
// obstacle conv(A united with y + V_r) cut at {u <= a}, whose support in any
// direction is evaluated exactly through hull generators (inside points plus
// pairwise segment cuts at the hyperplane). Every returned certificate is
// re-verified from scratch before returning.
SsPerturbResult ss_perturb(const ScoredMap& f, const IndexSet& A, const Functional& u, double eps,
                           double n_target, const Tolerances& tol, std::uint64_t seed = 1);

struct BourViolation {
  Functional candidate;
  double diff_norm = 0.0;
  double bound = 0.0;
};

struct BourReport {
  int tested = 0;      // candidates that passed the sampled support precondition
  int excluded = 0;    // candidates that failed it (not violations)
  int violations = 0;
  double mesh = 0.0;   // disc sampling mesh
  double slack = 0.0;  // 4 * mesh / r, the discretization allowance
  double max_excess = -kInf;  // max of diff_norm - bound over tested candidates
  std::vector<BourViolation> examples;
};

// For each normalized candidate y* with y*(x0) > sup over the sampled
// y + V_r disc, asserts ||u - y*|| <= (2/r)||x0 - y|| + 4*mesh/r.
// Preconditions: ||u|| = 1, u(x0) > u(y), ||x0 - y|| <= r/2.
BourReport bour_bound_check(const Functional& u, const Vec& x0, const Vec& y, double r,
                            const std::vector<Functional>& candidates, std::uint64_t seed = 1);

struct SsScanRow {
  int direction_index = 0;
  bool success = false;
  double perturbation_norm = 0.0;
  double achieved_osc = 0.0;
  double slice_depth = 0.0;
};

struct SsScanStats {
  std::vector<SsScanRow> rows;
  double success_fraction = 0.0;
  double max_perturbation = 0.0;
};

// Samples n_dirs seeded unit functionals and runs ss_perturb at eps with
// oscillation target eps for each; the success fraction is the desk-scale
// density statistic.
SsScanStats ss_density_scan(const ScoredMap& f, const IndexSet& A, int n_dirs, double eps,
                            const Tolerances& tol, std::uint64_t seed = 1);

}  // namespace dentlab
