#pragma once

#include "dentlab/dentability.hpp"

namespace dentlab {

struct DcApproximant {
  int n = 1;
  ScoredMap source;         // the sampled function the envelope was built from
  PointCloud grid;          // evaluation grid
  std::vector<double> f_n;  // envelope values on the grid
  std::vector<double> g;    // 2n*||x||^2
  std::vector<double> h;    // sup_y { n*||x+y||^2 - 2n*||y||^2 - f(y) }
};

// f_n(x) = min over domain samples y of f(y) + n*||x - y||^2, with the split
// tables computed through the dual sup formula rather than by subtraction.
DcApproximant moreau_envelope(const ScoredMap& f, int n, const PointCloud& grid);

// Split parts evaluated anywhere (closed form for g, sup formula for h).
double dc_g_value(const DcApproximant& a, const Vec& x);
double dc_h_value(const DcApproximant& a, const Vec& x);

struct DcSplitReport {
  int identity_violations = 0;   // f_n != g - h beyond osc_tol
  int midpoint_violations = 0;   // convexity failures beyond osc_tol
  int lipschitz_violations = 0;
  int midpoint_tests = 0;
  double max_identity_gap = 0.0;
  double worst_midpoint_defect = 0.0;  // most negative reduced slack seen
  double lipschitz_bound = 0.0;
  double max_slope_g = 0.0;
  double max_slope_h = 0.0;
  bool pass = true;
};

// Verifies f_n = g - h on the grid, midpoint convexity of g and h, and the
// Lipschitz bound 4n*max(R_grid, R_dom) on sampled and consecutive pairs.
// Both tables carry a known quadratic part (2n*||x||^2 for g, n*||x||^2 for
// h); midpoint tests subtract its exact midpoint gap, so the residual parts
// (zero for g, a max of affine functions for h) must be midpoint-convex to
// within osc_tol and single-value corruptions of either table are visible.
DcSplitReport dc_split_check(const DcApproximant& a, int trials, const Tolerances& tol,
                             std::uint64_t seed = 1);

struct ErrorCurveRow {
  int n = 1;
  double sup_error = 0.0;
  double theory_bound = 0.0;  // L^2/(4n) + 2*L*mesh + n*mesh^2
};

// Envelope error on the domain samples themselves, one row per n, ascending.
std::vector<ErrorCurveRow> uniform_error_curve(const ScoredMap& f, const std::vector<int>& n_list);

struct ControlTrial {
  std::vector<std::size_t> picks;
  std::vector<double> lambdas;
  double snap_dist = 0.0;
  double slack = 0.0;      // [sum l_i f(x_i) - f(z)] - ||sum l_i F(x_i) - F(z)||
  double allowance = 0.0;  // osc_tol + (L_F + L_f) * snap_dist
};

struct ControlCertificate {
  std::vector<ControlTrial> trials;
  double min_slack = kInf;
  double lip_F = 0.0;
  double lip_f = 0.0;
  bool pass = true;  // every slack >= -allowance
};

// Convexity control of a vector-valued map: random convex combinations are
// snapped to the nearest domain sample and the combination defect of F must
// be dominated by that of f up to the snap allowance.
ControlCertificate control_check(const ScoredMap& F, const ScoredMap& f, int trials,
                                 const Tolerances& tol, std::uint64_t seed = 1);

struct RenormFunction {
  int K = 0;
  DeriveMode mode = DeriveMode::exact;
  // chains[k-1][n] = coordinates of the n-th stage set of the derivation at
  // scale 2^-k, n = 0 (the full domain) through N_k - 1 (all nonempty).
  std::vector<std::vector<std::vector<Vec>>> chains;
  std::vector<std::size_t> n_k;  // N_k = number of derivation steps at 2^-k
  double scale = 1.0;            // output multiplier; a test hook for fault injection

  double evaluate_sq(const Vec& x) const;  // scale^2 * the defining double sum
  double evaluate(const Vec& x) const;     // scale * sqrt(sum)
  RenormFunction scaled_copy(double s) const;
};

// F(x)^2 = sum_k (2^-k / N_k) sum_n [ d(x, S_kn)^2 + d(x, -S_kn)^2 ] over the
// derivation chains at scales 2^-1 .. 2^-K. Symmetric under negation exactly.
RenormFunction build_renorm(const ScoredMap& f, int K, DeriveMode mode, const Tolerances& tol);

struct DropReport {
  int sampled = 0;
  int qualifying = 0;
  int violations = 0;
  int consistency_violations = 0;  // evaluator output vs the defining sum
  double drop = 0.0;
  double delta = 0.0;   // modulus at eps/4
  std::size_t dz = 0;   // derivation count at eps/8
  double min_margin = kInf;
  bool vacuous = false;
  bool pass = true;
};

// For sampled pairs with d(f(x), f(y)) > eps, asserts
//   F((x+y)/2)^2 <= (F(x)^2 + F(y)^2)/2 - eps*delta(eps/4)^2/(128*Dz(f,eps/8)^3)
// and cross-checks the evaluator against an independent recomputation of the
// defining sum at every point touched.
DropReport midpoint_drop_check(const RenormFunction& R, const ScoredMap& f, double eps, int trials,
                               const Tolerances& tol, std::uint64_t seed = 1);

// Default evaluation grid: a lattice of the given spacing over the domain's
// bounding box in d <= 2, Halton samples of size 4096 above, both filtered to
// the sample hull.
PointCloud default_eval_grid(const PointCloud& domain, double mesh, const Tolerances& tol);

}  // namespace dentlab
