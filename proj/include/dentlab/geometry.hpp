#pragma once

#include "dentlab/types.hpp"

namespace dentlab {

// max of u over the cloud (or over a subset of it)
double support(const PointCloud& A, const Functional& u);
double support(const PointCloud& A, const IndexSet& S, const Functional& u);

// S(A,u,t) = { x in A : u(x) > support(A,u) - t }, strict inequality, so
// points tied with the threshold are excluded. t must be positive; the
// argmax always belongs, so the result is nonempty.
Slice slice(const PointCloud& A, const Functional& u, double t);
// Same, but A is restricted to the subset S (support and members relative to S).
Slice slice(const PointCloud& A, const IndexSet& S, const Functional& u, double t);

// Diameter of f(S) in the value metric; 0 for empty sets and singletons.
double oscillation(const ScoredMap& f, const IndexSet& S);

struct HullResult {
  bool inside = false;
  // inside: convex weights over B (indices paired with weights) whose
  // combination reproduces the query point within `defect`.
  std::vector<std::pair<std::size_t, double>> weights;
  double defect = 0.0;
  // outside: unit functional with u(x) >= support(B,u) + margin, margin > sep_tol.
  Functional separator;
  double margin = 0.0;
};

// Decides x in conv(B) within tol.sep_tol, emitting a certificate either way.
// Uses the min-norm-point scheme: finite descent over corrals of B - x.
HullResult hull_membership(const Vec& x, const PointCloud& B, const Tolerances& tol);
HullResult hull_membership(const Vec& x, const std::vector<Vec>& B, const Tolerances& tol);

// Greedy upper bound on the number of sup-norm balls of radius r needed to
// cover A. Clusters grow from the first uncovered point in cloud order and
// accept a point while the cluster still fits in one radius-r sup-norm ball;
// every accepted point lies within 2r of its seed.
int covering_number(const PointCloud& A, double r);

}  // namespace dentlab
