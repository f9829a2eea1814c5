#pragma once

#include "dentlab/dentability.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace dentlab {

enum class Shape { grid, simplex, ball, square };

// grid: n points per axis on [0,1]^d. simplex: barycentric refinement of
// order n of the standard d-simplex. ball: n seeded uniform samples of the
// unit d-ball. square: the four unit-square corners in the fixed order
// (0,0), (0,1), (1,0), (1,1); n is ignored.
PointCloud gen_standard(Shape shape, std::size_t d, std::size_t n, std::uint64_t seed = 7);

struct TreeSpec {
  std::size_t depth = 2;
  double eps_tree = 1.0;
  std::size_t branching = 2;
  double slack = 0.0;  // 0: exact averaging; (0,1]: seeded jitter within the budget
  std::uint64_t seed = 1;
};

struct TreeExample {
  PointCloud cloud;  // nodes in breadth-first order, root first
  ScoredMap f;       // sup-distance to the odd-level node set
  std::vector<std::size_t> level;
  std::vector<std::ptrdiff_t> parent;  // -1 at the root
  std::vector<IndexSet> children;
};

// Haar-type embedding in R^(branching^depth): each node spreads over its
// leaf block so that every node is the exact average of its children and
// all distinct nodes are eps_tree-separated in the sup norm.
TreeExample gen_tree(const TreeSpec& spec);

// f = (g/diam, 1 - g/diam) with l1 values; ||f(x)||_1 == 1.0 bitwise on
// every sample. g must vanish somewhere, stay within [0, diam], and be
// 1-Lipschitz for the l_p domain metric.
ScoredMap gen_norm_one_map(const ScoredMap& g, double lip_metric_p = 2.0);

struct SepMetricResult {
  Metric metric;  // table d(x,y) = sum_n 2^-(n+1) |u_n(x - y)|
  bool separating = true;
};

SepMetricResult gen_sep_metric(const PointCloud& C, const std::vector<Functional>& functionals);

using Rational = boost::multiprecision::cpp_rational;

struct MartingaleInterval {
  Rational lo, hi;    // subinterval of [0,1)
  std::size_t value;  // index of the step value in the cloud
};

struct MartingaleRun {
  double eps = 0.0;
  // levels[n] is the step map g_n: a partition of [0,1) into intervals with
  // exact rational endpoints, each carrying its value.
  std::vector<std::vector<MartingaleInterval>> levels;
  std::vector<double> residuals;         // || f(g_n) - E(f(g_{n+1}) | pi_n) ||_1
  std::vector<double> residual_bounds;   // the eps * 2^-(n+4) schedule
  std::vector<double> separations;       // || f(g_n) - f(g_{n+1}) ||_1
  std::vector<double> min_step_dist;     // pointwise min of d(f(g_n), f(g_{n+1}))
  std::vector<double> weight_residuals;  // hull-weight rounding defect per level
  double residual_sum = 0.0;
  bool refinement_ok = true;
  bool measurable_ok = true;
  bool pass = true;
};

// Builds the recursive convex decomposition over a stalled cluster-mode
// derivation witness: level 0 is the first survivor, each value splits into
// far-set points whose exact or rounded-rational convex weights reproduce it.
MartingaleRun martingale_run(const ScoredMap& f, double eps, int N, const Tolerances& tol);

}  // namespace dentlab
