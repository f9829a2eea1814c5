#pragma once

#include "dentlab/geometry.hpp"

// Exact rational cross-checks, independent of the library's floating-point
// geometry. Doubles convert to dyadic rationals losslessly, so every answer
// here is exact and the library is tested against ground truth.
namespace oracle {

// x in conv(pts), decided by enumerating affinely independent subsets of
// size <= d+1 and solving each barycentric system over the rationals.
bool hull_member_exact(const std::vector<dentlab::Vec>& pts, const dentlab::Vec& x);

// Is there a functional u and threshold t with u > t exactly on `inside`
// and u <= t on `outside`? Equivalent to conv(inside) and conv(outside)
// being disjoint, i.e. 0 outside conv of the pairwise differences.
bool realizable_cut(const std::vector<dentlab::Vec>& inside,
                    const std::vector<dentlab::Vec>& outside);

// Ground truth for one exact-mode derivation step: some cut subset of D
// containing x has oscillation <= eps. Enumerates all 2^|D| subsets; |D| is
// capped at 20.
bool removable_oracle(const dentlab::ScoredMap& f, const dentlab::IndexSet& D, std::size_t x,
                      double eps);

// Same question in dimension 1, where cut subsets are exactly the
// tie-closed prefixes and suffixes of the coordinate order.
bool interval_removable_1d(const dentlab::ScoredMap& f, const dentlab::IndexSet& D, std::size_t x,
                           double eps);

}  // namespace oracle
