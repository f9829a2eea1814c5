#include "dentlab/dentability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dentlab {

namespace {

IndexSet all_indices(std::size_t n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

Vec random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec v(dim);
    for (auto& c : v) c = g(rng);
    double n = norm2(v);
    if (n > 1e-9) return vscale(v, 1.0 / n);
  }
}

Functional axis_functional(std::size_t dim, std::size_t axis, double sign) {
  Functional u;
  u.coeffs.assign(dim, 0.0);
  u.coeffs[axis] = sign;
  return u;
}

// Full slice of `universe`: every member passes any positive depth.
Slice full_slice(const PointCloud& A, const IndexSet& universe) {
  Functional u = axis_functional(A.dim, 0, 1.0);
  double sup = -kInf, inf = kInf;
  for (std::size_t i : universe) {
    double v = u(A[i]);
    sup = std::max(sup, v);
    inf = std::min(inf, v);
  }
  Slice s;
  s.functional = u;
  s.depth = (sup - inf) + 1.0;
  s.members = universe;
  std::sort(s.members.begin(), s.members.end());
  return s;
}

// Denting test of x with slice members drawn from `universe` and the far
// set taken over `far_basis`. Both arguments are index sets into f.domain.
DentingResult denting_core(const ScoredMap& f, const IndexSet& universe, const IndexSet& far_basis,
                           std::size_t x, double eps, const Tolerances& tol) {
  DentingResult r;
  IndexSet far = far_set(f, far_basis, x, eps);
  if (far.empty()) {
    r.denting = true;
    r.witness = full_slice(f.domain, universe);
    return r;
  }
  std::vector<Vec> cloud;
  cloud.reserve(far.size());
  for (std::size_t i : far) cloud.push_back(f.domain[i]);
  HullResult h = hull_membership(f.domain[x], cloud, tol);
  if (h.inside) return r;
  const Functional& u = h.separator;
  double ux = u(f.domain[x]);
  double sup_far = -kInf;
  for (std::size_t i : far) sup_far = std::max(sup_far, u(f.domain[i]));
  double theta = 0.5 * (ux + sup_far);
  Slice s;
  s.functional = u;
  s.depth = support(f.domain, universe, u) - theta;
  for (std::size_t i : universe)
    if (u(f.domain[i]) > theta) s.members.push_back(i);
  std::sort(s.members.begin(), s.members.end());
  r.denting = true;
  r.witness = s;
  return r;
}

// Incremental oscillation tracker: running min/max for real-valued maps,
// pairwise distances otherwise.
struct OscTracker {
  const ScoredMap& f;
  bool scalar;
  double lo = kInf, hi = -kInf;
  IndexSet seen;
  double osc = 0.0;

  explicit OscTracker(const ScoredMap& f_) : f(f_), scalar(f_.real_valued()) {}

  void add(std::size_t i) {
    if (scalar) {
      double v = f.scalar(i);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      osc = (hi > lo) ? hi - lo : 0.0;
    } else {
      for (std::size_t j : seen) osc = std::max(osc, f.value_dist(i, j));
      seen.push_back(i);
    }
  }
};

using WitnessVec = std::vector<std::optional<CutWitness>>;

// Shared prefix walk: points of D ordered by descending projection under u,
// tie groups entering together; every prefix of groups is a cut subset of D
// with threshold at the next group's projection. Stops once the oscillation
// cap is exceeded (oscillation is monotone under inclusion).
void walk_top_sets(const ScoredMap& f, const IndexSet& D, const Functional& u, double eps,
                   bool strict, WitnessVec& result,
                   const std::vector<std::size_t>& pos_of /*domain index -> position in D*/) {
  const std::size_t n = D.size();
  std::vector<std::pair<double, std::size_t>> proj(n);
  for (std::size_t k = 0; k < n; ++k) proj[k] = {u(f.domain[D[k]]), D[k]};
  std::sort(proj.begin(), proj.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  OscTracker tracker(f);
  IndexSet members;
  std::size_t k = 0;
  while (k < n) {
    std::size_t g = k;
    while (g < n && proj[g].first == proj[k].first) {
      tracker.add(proj[g].second);
      members.push_back(proj[g].second);
      ++g;
    }
    bool ok = strict ? tracker.osc < eps : tracker.osc <= eps;
    if (!ok) return;
    bool any_new = false;
    for (std::size_t i : members)
      if (!result[pos_of[i]]) any_new = true;
    if (any_new) {
      CutWitness w;
      w.u = u;
      w.threshold = (g < n) ? proj[g].first : proj[n - 1].first - 1.0;
      w.members = members;
      std::sort(w.members.begin(), w.members.end());
      w.osc = tracker.osc;
      for (std::size_t i : members)
        if (!result[pos_of[i]]) result[pos_of[i]] = w;
    }
    k = g;
  }
}

void exact_removals_1d(const ScoredMap& f, const IndexSet& D, double eps, bool strict,
                       WitnessVec& result, const std::vector<std::size_t>& pos_of) {
  for (double sign : {1.0, -1.0})
    walk_top_sets(f, D, axis_functional(f.domain.dim, 0, sign), eps, strict, result, pos_of);
}

void exact_removals_2d(const ScoredMap& f, const IndexSet& D, double eps, bool strict,
                       WitnessVec& result, const std::vector<std::size_t>& pos_of) {
  // Critical angles: directions perpendicular to a difference of two points.
  // Between consecutive criticals the projection order is constant, so
  // criticals plus interval midpoints realize every cut subset.
  std::vector<double> angles;
  const std::size_t n = D.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const Vec& p = f.domain[D[a]];
      const Vec& q = f.domain[D[b]];
      double vx = q[0] - p[0], vy = q[1] - p[1];
      if (vx == 0.0 && vy == 0.0) continue;
      for (double s : {1.0, -1.0}) {
        double ang = std::atan2(s * vx, -s * vy);
        if (ang < 0.0) ang += 2.0 * M_PI;
        angles.push_back(ang);
      }
    }
  if (angles.empty()) {
    // all points coincide: the only cut subset is D itself
    walk_top_sets(f, D, axis_functional(f.domain.dim, 0, 1.0), eps, strict, result, pos_of);
    return;
  }
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-14; }),
               angles.end());
  std::vector<double> candidates = angles;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    double next = (i + 1 < angles.size()) ? angles[i + 1] : angles[0] + 2.0 * M_PI;
    candidates.push_back(0.5 * (angles[i] + next));
  }
  Functional u;
  u.coeffs.assign(2, 0.0);
  for (double ang : candidates) {
    u.coeffs[0] = std::cos(ang);
    u.coeffs[1] = std::sin(ang);
    walk_top_sets(f, D, u, eps, strict, result, pos_of);
  }
}

void exact_removals_masks(const ScoredMap& f, const IndexSet& D, double eps, bool strict,
                          const Tolerances& tol, WitnessVec& result,
                          const std::vector<std::size_t>& pos_of) {
  const std::size_t n = D.size();
  const bool scalar = f.real_valued();
  auto accept = [&](double o) { return strict ? o < eps : o <= eps; };

  // the whole set is always a cut subset
  {
    OscTracker t(f);
    for (std::size_t i : D) t.add(i);
    if (accept(t.osc)) {
      CutWitness w;
      w.u = axis_functional(f.domain.dim, 0, 1.0);
      double lo = kInf;
      for (std::size_t i : D) lo = std::min(lo, w.u(f.domain[i]));
      w.threshold = lo - 1.0;
      w.members = D;
      std::sort(w.members.begin(), w.members.end());
      w.osc = t.osc;
      for (std::size_t k = 0; k < n; ++k)
        if (!result[k]) result[k] = w;
      return;  // everything removed, no smaller subset adds information
    }
  }

  const std::uint32_t full = (n >= 32) ? 0xffffffffu : ((1u << n) - 1u);
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    bool any_new = false;
    for (std::size_t k = 0; k < n; ++k)
      if ((mask >> k) & 1u)
        if (!result[k]) {
          any_new = true;
          break;
        }
    if (!any_new) continue;

    double osc = 0.0;
    if (scalar) {
      double lo = kInf, hi = -kInf;
      for (std::size_t k = 0; k < n; ++k)
        if ((mask >> k) & 1u) {
          double v = f.scalar(D[k]);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      osc = hi - lo;
    } else {
      for (std::size_t a = 0; a < n; ++a)
        if ((mask >> a) & 1u)
          for (std::size_t b = a + 1; b < n; ++b)
            if ((mask >> b) & 1u) osc = std::max(osc, f.value_dist(D[a], D[b]));
    }
    if (!accept(osc)) continue;

    // separability of S from D \ S via the difference cloud
    std::vector<Vec> diffs;
    for (std::size_t a = 0; a < n; ++a)
      if ((mask >> a) & 1u)
        for (std::size_t b = 0; b < n; ++b)
          if (!((mask >> b) & 1u)) diffs.push_back(vsub(f.domain[D[a]], f.domain[D[b]]));
    Vec zero(f.domain.dim, 0.0);
    HullResult h = hull_membership(zero, diffs, tol);
    if (h.inside) continue;

    Functional u;
    u.coeffs = vscale(h.separator.coeffs, -1.0);
    double min_in = kInf, max_out = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      double v = u(f.domain[D[k]]);
      if ((mask >> k) & 1u)
        min_in = std::min(min_in, v);
      else
        max_out = std::max(max_out, v);
    }
    if (!(min_in > max_out)) continue;  // numerically inconsistent certificate
    CutWitness w;
    w.u = u;
    w.threshold = 0.5 * (min_in + max_out);
    for (std::size_t k = 0; k < n; ++k)
      if ((mask >> k) & 1u) w.members.push_back(D[k]);
    std::sort(w.members.begin(), w.members.end());
    w.osc = osc;
    for (std::size_t k = 0; k < n; ++k)
      if (((mask >> k) & 1u) && !result[k]) result[k] = w;
  }
}

}  // namespace

IndexSet far_set(const ScoredMap& f, const IndexSet& D, std::size_t x, double eps) {
  IndexSet far;
  for (std::size_t i : D)
    if (f.value_dist(i, x) > eps / 2.0) far.push_back(i);
  return far;
}

DentingResult denting_test(const ScoredMap& f, std::size_t x, double eps, const Tolerances& tol) {
  if (x >= f.size()) throw ValidationError("denting test: point index out of range");
  if (eps <= 0.0) throw ValidationError("denting test: eps must be positive");
  IndexSet all = all_indices(f.size());
  return denting_core(f, all, all, x, eps, tol);
}

bool exact_capacity_ok(std::size_t n, std::size_t dim, std::size_t cap_override) {
  if (cap_override > 0) return n <= cap_override;
  return (dim <= 2 && n <= 200) || n <= 16;
}

std::vector<std::optional<CutWitness>> exact_removals(const ScoredMap& f, const IndexSet& D,
                                                      double eps, const Tolerances& tol,
                                                      bool strict) {
  if (eps <= 0.0) throw ValidationError("derivation: eps must be positive");
  if (!exact_capacity_ok(D.size(), f.domain.dim, tol.exact_cap))
    throw CapacityError("exact enumeration over " + std::to_string(D.size()) + " points in dimension " +
                        std::to_string(f.domain.dim) +
                        " exceeds the caps (n <= 200 in d <= 2, n <= 16 otherwise)");
  WitnessVec result(D.size());
  if (D.empty()) return result;
  std::vector<std::size_t> pos_of(f.size(), SIZE_MAX);
  for (std::size_t k = 0; k < D.size(); ++k) pos_of[D[k]] = k;
  if (f.domain.dim == 1)
    exact_removals_1d(f, D, eps, strict, result, pos_of);
  else if (f.domain.dim == 2)
    exact_removals_2d(f, D, eps, strict, result, pos_of);
  else
    exact_removals_masks(f, D, eps, strict, tol, result, pos_of);
  return result;
}

DerivationStage derive_once(const ScoredMap& f, const IndexSet& D, double eps, DeriveMode mode,
                            const Tolerances& tol) {
  if (eps <= 0.0) throw ValidationError("derivation: eps must be positive");
  DerivationStage stage;
  if (mode == DeriveMode::exact) {
    auto removals = exact_removals(f, D, eps, tol, false);
    for (std::size_t k = 0; k < D.size(); ++k) {
      if (removals[k]) {
        const CutWitness& w = *removals[k];
        Slice s;
        s.functional = w.u;
        s.depth = support(f.domain, D, w.u) - w.threshold;
        s.members = w.members;
        stage.removal_witnesses.emplace(D[k], std::move(s));
      } else {
        stage.survivors.push_back(D[k]);
      }
    }
  } else {
    IndexSet all = all_indices(f.size());
    for (std::size_t i : D) {
      DentingResult r = denting_core(f, D, all, i, eps, tol);
      if (r.denting)
        stage.removal_witnesses.emplace(i, std::move(r.witness));
      else
        stage.survivors.push_back(i);
    }
  }
  std::sort(stage.survivors.begin(), stage.survivors.end());
  return stage;
}

IndexSet DerivationTrace::stage_set(std::size_t k, std::size_t domain_size) const {
  if (k == 0) return all_indices(domain_size);
  return stages.at(k - 1).survivors;
}

DerivationTrace dz_index(const ScoredMap& f, double eps, DeriveMode mode, const Tolerances& tol) {
  DerivationTrace trace;
  trace.epsilon = eps;
  trace.mode = mode;
  IndexSet current = all_indices(f.size());
  for (std::size_t step = 0; step <= f.size() + 1; ++step) {
    DerivationStage stage = derive_once(f, current, eps, mode, tol);
    bool empty = stage.survivors.empty();
    bool fixed = (stage.survivors == current);
    trace.stages.push_back(std::move(stage));
    if (empty) {
      trace.stalled = false;
      trace.dz = static_cast<int>(trace.stages.size());
      return trace;
    }
    if (fixed) {
      trace.stalled = true;
      trace.stalled_at = static_cast<int>(trace.stages.size());
      return trace;
    }
    current = trace.stages.back().survivors;
  }
  throw CapacityError("derivation failed to terminate");  // unreachable: strict decrease or stall
}

LancienReport lancien_check(const ScoredMap& f, double eps, const DerivationTrace& trace,
                            int trials, const Tolerances& tol, std::uint64_t seed) {
  LancienReport rep;
  rep.bound = 2.0 * eps + tol.osc_tol;
  std::mt19937_64 rng(seed);
  const std::size_t dim = f.domain.dim;

  for (std::size_t k = 0; k < trace.stages.size(); ++k) {
    IndexSet D = trace.stage_set(k, f.size());
    const IndexSet& next = trace.stages[k].survivors;

    std::vector<Functional> dirs;
    for (std::size_t c = 0; c < dim; ++c) {
      dirs.push_back(axis_functional(dim, c, 1.0));
      dirs.push_back(axis_functional(dim, c, -1.0));
    }
    for (int t = 0; t < trials; ++t) {
      Functional u;
      u.coeffs = random_unit(dim, rng);
      dirs.push_back(u);
    }

    for (const auto& u : dirs) {
      // the largest slice of D missing `next`: threshold at the support of
      // `next`; every smaller slice missing `next` is contained in it
      double theta = -kInf;
      for (std::size_t i : next) theta = std::max(theta, u(f.domain[i]));
      IndexSet members;
      for (std::size_t i : D)
        if (u(f.domain[i]) > theta) members.push_back(i);
      if (members.empty()) continue;
      double osc = oscillation(f, members);
      ++rep.checked;
      rep.max_osc = std::max(rep.max_osc, osc);
      if (osc > rep.bound) {
        ++rep.violations;
        if (rep.examples.size() < 8) rep.examples.push_back({static_cast<int>(k), u, osc});
      }
    }
  }
  return rep;
}

ModulusTable modulus_delta(const ScoredMap& f, const std::vector<double>& eps_grid) {
  if (f.size() < 2) throw ValidationError("modulus: need at least two points");
  ModulusTable table;
  for (double eps : eps_grid) {
    double best = kInf;
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t j = i + 1; j < f.size(); ++j)
        if (f.value_dist(i, j) >= eps)
          best = std::min(best, lp_dist(f.domain[i], f.domain[j], 2.0));
    table.pairs.emplace_back(eps, best);
  }
  return table;
}

double ModulusTable::delta(double eps) const {
  for (const auto& [e, d] : pairs)
    if (std::fabs(e - eps) < 1e-15) return d;
  throw ValidationError("modulus: eps not present in the table");
}

FindSliceResult find_small_slice(const ScoredMap& f, const IndexSet& A, double eps,
                                 const Tolerances& tol, std::uint64_t seed) {
  if (A.empty()) throw ValidationError("slice search: empty subset");
  if (eps <= 0.0) throw ValidationError("slice search: eps must be positive");
  FindSliceResult res;

  auto accept = [&](const Slice& s) {
    double osc = oscillation(f, s.members);
    if (osc < eps) {
      res.status = FindSliceResult::Status::found;
      res.slice = s;
      res.achieved_osc = osc;
      return true;
    }
    return false;
  };

  if (A.size() == 1) {
    accept(full_slice(f.domain, A));
    return res;
  }

  // denting scan: far sets within A
  for (std::size_t x : A) {
    DentingResult r = denting_core(f, A, A, x, eps, tol);
    if (!r.denting) continue;
    if (accept(r.witness)) return res;
    for (double t : tol.t_schedule)
      if (t < r.witness.depth && accept(slice(f.domain, A, r.witness.functional, t))) return res;
  }

  // budgeted random directions
  std::mt19937_64 rng(seed);
  for (std::size_t it = 0; it < tol.budget; ++it) {
    Functional u;
    u.coeffs = random_unit(f.domain.dim, rng);
    for (double t : tol.t_schedule)
      if (accept(slice(f.domain, A, u, t))) return res;
  }

  // exact certificate
  if (!exact_capacity_ok(A.size(), f.domain.dim, tol.exact_cap)) {
    res.status = FindSliceResult::Status::unknown;
    return res;
  }
  auto removals = exact_removals(f, A, eps, tol, /*strict=*/true);
  for (const auto& w : removals) {
    if (!w) continue;
    Slice s;
    s.functional = w->u;
    s.depth = support(f.domain, A, w->u) - w->threshold;
    s.members = w->members;
    accept(s);
    return res;
  }
  res.status = FindSliceResult::Status::none_certified;
  return res;
}

ScoredMap product_map(const std::vector<ScoredMap>& fs) {
  if (fs.empty()) throw ValidationError("product map: no components");
  const std::size_t n = fs[0].size();
  for (const auto& f : fs) {
    if (f.size() != n || f.domain.dim != fs[0].domain.dim)
      throw ValidationError("product map: components live on different domains");
    for (std::size_t i = 0; i < n; ++i)
      if (f.domain[i] != fs[0].domain[i])
        throw ValidationError("product map: components live on different domains");
  }
  ScoredMap prod;
  prod.domain = fs[0].domain;
  prod.metric.kind = Metric::Kind::table;
  prod.metric.rows.assign(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (const auto& f : fs) d = std::max(d, f.value_dist(i, j));
      prod.metric.rows[i][j] = d;
      prod.metric.rows[j][i] = d;
    }
  return prod;
}

FindSliceResult equi_slice(const std::vector<ScoredMap>& fs, const IndexSet& A, double eps,
                           const Tolerances& tol, std::uint64_t seed) {
  ScoredMap prod = product_map(fs);
  return find_small_slice(prod, A, eps, tol, seed);
}

}  // namespace dentlab
