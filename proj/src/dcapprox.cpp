#include "dentlab/dcapprox.hpp"

#include "dentlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dentlab {

namespace {

double sq_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sq_norm(const Vec& a) {
  double s = 0.0;
  for (double c : a) s += c * c;
  return s;
}

double sq_sum(const Vec& a, const Vec& b) {  // ||a + b||^2
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] + b[i];
    s += d * d;
  }
  return s;
}

double max_radius(const PointCloud& c) {
  double r = 0.0;
  for (const auto& p : c.points) r = std::max(r, std::sqrt(sq_norm(p.x)));
  return r;
}

// Empirical Lipschitz constant over all sample pairs; coincident points skipped.
double pair_lipschitz(const ScoredMap& f) {
  double lip = 0.0;
  for (size_t i = 0; i < f.size(); ++i)
    for (size_t j = i + 1; j < f.size(); ++j) {
      double d = std::sqrt(sq_dist(f.domain.points[i].x, f.domain.points[j].x));
      if (d < 1e-12) continue;
      lip = std::max(lip, f.value_dist(i, j) / d);
    }
  return lip;
}

double domain_mesh(const PointCloud& c) {
  if (c.points.size() < 2) return 0.0;
  double mesh = 0.0;
  for (size_t i = 0; i < c.points.size(); ++i) {
    double nearest = kInf;
    for (size_t j = 0; j < c.points.size(); ++j) {
      if (j == i) continue;
      nearest = std::min(nearest, std::sqrt(sq_dist(c.points[i].x, c.points[j].x)));
    }
    mesh = std::max(mesh, nearest);
  }
  return mesh;
}

double halton(std::size_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  std::size_t i = index + 1;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

DcApproximant moreau_envelope(const ScoredMap& f, int n, const PointCloud& grid) {
  f.validate();
  grid.validate();
  if (!f.real_valued()) throw ValidationError("moreau envelope: need a real-valued map");
  if (n < 1) throw ValidationError("moreau envelope: n must be a positive integer");
  if (f.size() == 0) throw ValidationError("moreau envelope: empty domain");
  if (grid.points.empty()) throw ValidationError("moreau envelope: empty grid");
  if (grid.dim != f.domain.dim) throw ValidationError("moreau envelope: grid dimension mismatch");

  for (size_t c = 0; c < f.domain.dim; ++c) {
    double lo = kInf, hi = -kInf;
    for (const auto& p : f.domain.points) {
      lo = std::min(lo, p.x[c]);
      hi = std::max(hi, p.x[c]);
    }
    double slack = 1e-9 * (1.0 + std::max(std::fabs(lo), std::fabs(hi)));
    for (const auto& p : grid.points)
      if (p.x[c] < lo - slack || p.x[c] > hi + slack)
        throw ValidationError("moreau envelope: grid leaves the domain's bounding box");
  }

  DcApproximant a;
  a.n = n;
  a.source = f;
  a.grid = grid;
  const double dn = static_cast<double>(n);
  a.f_n.reserve(grid.points.size());
  a.g.reserve(grid.points.size());
  a.h.reserve(grid.points.size());
  for (const auto& p : grid.points) {
    double env = kInf;
    for (size_t y = 0; y < f.size(); ++y)
      env = std::min(env, f.scalar(y) + dn * sq_dist(p.x, f.domain.points[y].x));
    a.f_n.push_back(env);
    a.g.push_back(2.0 * dn * sq_norm(p.x));
    a.h.push_back(dc_h_value(a, p.x));
  }
  return a;
}

double dc_g_value(const DcApproximant& a, const Vec& x) {
  return 2.0 * static_cast<double>(a.n) * sq_norm(x);
}

double dc_h_value(const DcApproximant& a, const Vec& x) {
  const double dn = static_cast<double>(a.n);
  double best = -kInf;
  for (size_t y = 0; y < a.source.size(); ++y) {
    const Vec& py = a.source.domain.points[y].x;
    best = std::max(best, dn * sq_sum(x, py) - 2.0 * dn * sq_norm(py) - a.source.scalar(y));
  }
  return best;
}

DcSplitReport dc_split_check(const DcApproximant& a, int trials, const Tolerances& tol,
                             std::uint64_t seed) {
  tol.validate();
  if (a.g.size() != a.grid.points.size() || a.h.size() != a.grid.points.size() ||
      a.f_n.size() != a.grid.points.size())
    throw ValidationError("dc split check: split tables not populated");
  if (trials < 0) throw ValidationError("dc split check: negative trial count");

  DcSplitReport rep;
  const double dn = static_cast<double>(a.n);
  const size_t m = a.grid.points.size();

  for (size_t i = 0; i < m; ++i) {
    double gap = std::fabs(a.f_n[i] - (a.g[i] - a.h[i]));
    rep.max_identity_gap = std::max(rep.max_identity_gap, gap);
    if (gap > tol.osc_tol) ++rep.identity_violations;
  }

  rep.lipschitz_bound = 4.0 * dn * std::max(max_radius(a.grid), max_radius(a.source.domain));
  auto slope_check = [&](size_t i, size_t j) {
    double d = std::sqrt(sq_dist(a.grid.points[i].x, a.grid.points[j].x));
    if (d < 1e-12) return;
    double sg = std::fabs(a.g[i] - a.g[j]) / d;
    double sh = std::fabs(a.h[i] - a.h[j]) / d;
    rep.max_slope_g = std::max(rep.max_slope_g, sg);
    rep.max_slope_h = std::max(rep.max_slope_h, sh);
    if (sg > rep.lipschitz_bound + tol.osc_tol) ++rep.lipschitz_violations;
    if (sh > rep.lipschitz_bound + tol.osc_tol) ++rep.lipschitz_violations;
  };

  // The tables are known quadratics plus convex remainders (zero remainder
  // for g, a max of affines for h); testing midpoint convexity net of the
  // quadratic's exact midpoint gap leaves no curvature slack to hide a
  // corrupted table entry behind.
  auto midpoint_check = [&](size_t i, size_t j, size_t mid, bool mid_from_table) {
    ++rep.midpoint_tests;
    double q = sq_dist(a.grid.points[i].x, a.grid.points[j].x);
    double hm = mid_from_table ? a.h[mid] : dc_h_value(a, a.grid.points[mid].x);
    double gm = mid_from_table ? a.g[mid] : dc_g_value(a, a.grid.points[mid].x);
    double slack_g = (a.g[i] + a.g[j]) / 2.0 - gm - (dn / 2.0) * q;
    double slack_h = (a.h[i] + a.h[j]) / 2.0 - hm - (dn / 4.0) * q;
    rep.worst_midpoint_defect = std::min({rep.worst_midpoint_defect, slack_g, slack_h});
    if (slack_g < -tol.osc_tol) ++rep.midpoint_violations;
    if (slack_h < -tol.osc_tol) ++rep.midpoint_violations;
  };

  auto exact_mid_index = [&](size_t i, size_t j) -> std::ptrdiff_t {
    Vec mid = vscale(vadd(a.grid.points[i].x, a.grid.points[j].x), 0.5);
    for (size_t k = 0; k < m; ++k) {
      double s = 0.0;
      for (size_t c = 0; c < mid.size(); ++c)
        s = std::max(s, std::fabs(a.grid.points[k].x[c] - mid[c]));
      if (s <= 1e-12 * (1.0 + std::fabs(mid.empty() ? 0.0 : mid[0]))) return k;
    }
    return -1;
  };

  for (size_t k = 0; k + 1 < m; ++k) slope_check(k, k + 1);
  for (size_t k = 0; k + 2 < m; ++k) {
    std::ptrdiff_t mid = exact_mid_index(k, k + 2);
    if (mid >= 0) midpoint_check(k, k + 2, static_cast<size_t>(mid), true);
  }

  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials && m >= 2; ++t) {
    size_t i = rng() % m, j = rng() % m;
    if (i == j) continue;
    slope_check(i, j);
    std::ptrdiff_t mid = exact_mid_index(i, j);
    if (mid >= 0) {
      midpoint_check(i, j, static_cast<size_t>(mid), true);
    } else {
      // Off-grid midpoint: endpoints from the tables, midpoint from the sup
      // formula evaluated at the averaged coordinates.
      ++rep.midpoint_tests;
      Vec midx = vscale(vadd(a.grid.points[i].x, a.grid.points[j].x), 0.5);
      double q = sq_dist(a.grid.points[i].x, a.grid.points[j].x);
      double slack_g = (a.g[i] + a.g[j]) / 2.0 - dc_g_value(a, midx) - (dn / 2.0) * q;
      double slack_h = (a.h[i] + a.h[j]) / 2.0 - dc_h_value(a, midx) - (dn / 4.0) * q;
      rep.worst_midpoint_defect = std::min({rep.worst_midpoint_defect, slack_g, slack_h});
      if (slack_g < -tol.osc_tol) ++rep.midpoint_violations;
      if (slack_h < -tol.osc_tol) ++rep.midpoint_violations;
    }
  }

  rep.pass = rep.identity_violations == 0 && rep.midpoint_violations == 0 &&
             rep.lipschitz_violations == 0;
  return rep;
}

std::vector<ErrorCurveRow> uniform_error_curve(const ScoredMap& f, const std::vector<int>& n_list) {
  f.validate();
  if (!f.real_valued()) throw ValidationError("error curve: need a real-valued map");
  if (n_list.empty()) throw ValidationError("error curve: empty n list");
  for (int n : n_list)
    if (n < 1) throw ValidationError("error curve: n must be positive");

  std::vector<int> ns = n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  const double lip = pair_lipschitz(f);
  const double mesh = domain_mesh(f.domain);

  std::vector<ErrorCurveRow> rows;
  for (int n : ns) {
    DcApproximant a = moreau_envelope(f, n, f.domain);
    double err = 0.0;
    for (size_t i = 0; i < f.size(); ++i) err = std::max(err, f.scalar(i) - a.f_n[i]);
    ErrorCurveRow row;
    row.n = n;
    row.sup_error = err;
    row.theory_bound = lip * lip / (4.0 * n) + 2.0 * lip * mesh + n * mesh * mesh;
    rows.push_back(row);
  }
  return rows;
}

ControlCertificate control_check(const ScoredMap& F, const ScoredMap& f, int trials,
                                 const Tolerances& tol, std::uint64_t seed) {
  F.validate();
  f.validate();
  tol.validate();
  if (!f.real_valued()) throw ValidationError("control check: control must be real-valued");
  if (F.metric.kind != Metric::Kind::lp)
    throw ValidationError("control check: map needs a coordinate (lp) value metric");
  if (trials < 1) throw ValidationError("control check: need at least one trial");
  if (F.size() != f.size() || F.domain.dim != f.domain.dim)
    throw ValidationError("control check: maps must share the domain");
  for (size_t i = 0; i < F.size(); ++i)
    if (lp_dist(F.domain.points[i].x, f.domain.points[i].x, kInf) > 1e-12)
      throw ValidationError("control check: maps must share the domain");
  if (F.size() < 2) throw ValidationError("control check: need at least two samples");

  ControlCertificate cert;
  cert.lip_F = pair_lipschitz(F);
  cert.lip_f = pair_lipschitz(f);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const size_t nm = F.size();
  const size_t vdim = F.values[0].size();

  for (int t = 0; t < trials; ++t) {
    ControlTrial trial;
    size_t k = 2 + (rng() % 2);
    while (trial.picks.size() < k) {
      size_t cand = rng() % nm;
      if (std::find(trial.picks.begin(), trial.picks.end(), cand) == trial.picks.end())
        trial.picks.push_back(cand);
    }
    double total = 0.0;
    for (size_t i = 0; i < k; ++i) {
      trial.lambdas.push_back(-std::log1p(-unif(rng)));
      total += trial.lambdas.back();
    }
    for (double& l : trial.lambdas) l /= total;

    Vec z(F.domain.dim, 0.0);
    for (size_t i = 0; i < k; ++i)
      z = vadd(z, vscale(F.domain.points[trial.picks[i]].x, trial.lambdas[i]));

    size_t snap = 0;
    double best = kInf;
    for (size_t i = 0; i < nm; ++i) {
      double d = std::sqrt(sq_dist(z, F.domain.points[i].x));
      if (d < best) {
        best = d;
        snap = i;
      }
    }
    trial.snap_dist = best;

    Vec vF(vdim, 0.0);
    double rhs = 0.0;
    for (size_t i = 0; i < k; ++i) {
      vF = vadd(vF, vscale(F.values[trial.picks[i]], trial.lambdas[i]));
      rhs += trial.lambdas[i] * f.scalar(trial.picks[i]);
    }
    rhs -= f.scalar(snap);
    double lhs = lp_dist(vF, F.values[snap], F.metric.p);

    trial.slack = rhs - lhs;
    trial.allowance = tol.osc_tol + (cert.lip_F + cert.lip_f) * trial.snap_dist;
    cert.min_slack = std::min(cert.min_slack, trial.slack);
    if (trial.slack < -trial.allowance) cert.pass = false;
    cert.trials.push_back(std::move(trial));
  }
  return cert;
}

RenormFunction build_renorm(const ScoredMap& f, int K, DeriveMode mode, const Tolerances& tol) {
  f.validate();
  tol.validate();
  if (K < 0) throw ValidationError("renorm: K must be nonnegative");

  RenormFunction R;
  R.K = K;
  R.mode = mode;
  for (int k = 1; k <= K; ++k) {
    double eps_k = std::ldexp(1.0, -k);
    DerivationTrace trace = dz_index(f, eps_k, mode, tol);
    if (trace.stalled)
      throw ValidationError("renorm: derivation stalls at scale 2^-" + std::to_string(k) +
                            "; the map is not finitely dentable there");
    std::vector<std::vector<Vec>> sets;
    for (size_t n = 0; n < trace.dz; ++n) {
      IndexSet stage = n == 0 ? [&] {
        IndexSet all(f.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }()
                              : trace.stages[n - 1].survivors;
      std::vector<Vec> coords;
      coords.reserve(stage.size());
      for (size_t i : stage) coords.push_back(f.domain.points[i].x);
      sets.push_back(std::move(coords));
    }
    R.n_k.push_back(trace.dz);
    R.chains.push_back(std::move(sets));
  }
  return R;
}

double RenormFunction::evaluate_sq(const Vec& x) const {
  double total = 0.0;
  for (int k = 1; k <= K; ++k) {
    const auto& sets = chains[k - 1];
    double w = std::ldexp(1.0, -k) / static_cast<double>(n_k[k - 1]);
    for (const auto& set : sets) {
      double dpos = kInf, dneg = kInf;
      for (const Vec& p : set) {
        double spos = 0.0, sneg = 0.0;
        for (size_t c = 0; c < x.size(); ++c) {
          double a = x[c] - p[c];
          double b = x[c] + p[c];
          spos += a * a;
          sneg += b * b;
        }
        dpos = std::min(dpos, spos);
        dneg = std::min(dneg, sneg);
      }
      total += w * (dpos + dneg);
    }
  }
  return scale * scale * total;
}

double RenormFunction::evaluate(const Vec& x) const {
  return scale * std::sqrt(evaluate_sq(x) / (scale * scale));
}

RenormFunction RenormFunction::scaled_copy(double s) const {
  RenormFunction c = *this;
  c.scale *= s;
  return c;
}

namespace {

// Deliberately separate recomputation of the defining sum, used to
// cross-check the evaluator (and any scaling applied to it).
double renorm_direct_sq(const RenormFunction& R, const Vec& x) {
  double total = 0.0;
  for (size_t ki = 0; ki < R.chains.size(); ++ki) {
    double w = std::ldexp(1.0, -static_cast<int>(ki) - 1) / static_cast<double>(R.n_k[ki]);
    for (const auto& set : R.chains[ki]) {
      double best_pos = kInf, best_neg = kInf;
      for (const Vec& p : set) {
        best_pos = std::min(best_pos, sq_dist(x, p));
        Vec neg = vscale(p, -1.0);
        best_neg = std::min(best_neg, sq_dist(x, neg));
      }
      total += w * (best_pos + best_neg);
    }
  }
  return total;
}

}  // namespace

DropReport midpoint_drop_check(const RenormFunction& R, const ScoredMap& f, double eps, int trials,
                               const Tolerances& tol, std::uint64_t seed) {
  f.validate();
  tol.validate();
  if (!(eps > 0.0)) throw ValidationError("drop check: eps must be positive");
  if (trials < 1) throw ValidationError("drop check: need at least one trial");

  DropReport rep;
  DerivationTrace trace8 = dz_index(f, eps / 8.0, R.mode, tol);
  if (trace8.stalled)
    throw ValidationError("drop check: derivation at eps/8 stalls; Dz unavailable");
  rep.dz = trace8.dz;
  rep.delta = modulus_delta(f, {eps / 4.0}).delta(eps / 4.0);
  if (!std::isfinite(rep.delta)) {
    rep.vacuous = true;  // no pair moves f by eps/4, hence none by eps
    rep.pass = true;
    return rep;
  }
  double dzd = static_cast<double>(rep.dz);
  rep.drop = eps * rep.delta * rep.delta / (128.0 * dzd * dzd * dzd);

  auto consistent = [&](const Vec& x) {
    double direct = renorm_direct_sq(R, x);
    double got = R.evaluate_sq(x);
    if (std::fabs(got - direct) > 1e-9 * std::max(1.0, std::fabs(direct)))
      ++rep.consistency_violations;
  };

  std::mt19937_64 rng(seed);
  const size_t nm = f.size();
  for (int t = 0; t < trials; ++t) {
    size_t i = rng() % nm, j = rng() % nm;
    ++rep.sampled;
    if (i == j || f.value_dist(i, j) <= eps) continue;
    ++rep.qualifying;
    const Vec& x = f.domain.points[i].x;
    const Vec& y = f.domain.points[j].x;
    Vec mid = vscale(vadd(x, y), 0.5);
    double lhs = R.evaluate_sq(mid);
    double rhs = (R.evaluate_sq(x) + R.evaluate_sq(y)) / 2.0 - rep.drop;
    double margin = rhs - lhs;
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < -tol.osc_tol) ++rep.violations;
    consistent(x);
    consistent(y);
    consistent(mid);
  }
  if (rep.qualifying == 0) rep.vacuous = true;
  rep.pass = rep.violations == 0 && rep.consistency_violations == 0;
  return rep;
}

PointCloud default_eval_grid(const PointCloud& domain, double mesh, const Tolerances& tol) {
  domain.validate();
  if (!(mesh > 0.0)) throw ValidationError("eval grid: mesh must be positive");
  if (domain.points.empty()) throw ValidationError("eval grid: empty domain");

  const size_t d = domain.dim;
  Vec lo(d, kInf), hi(d, -kInf);
  for (const auto& p : domain.points)
    for (size_t c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], p.x[c]);
      hi[c] = std::max(hi[c], p.x[c]);
    }

  std::vector<Vec> raw;
  if (d <= 2) {
    std::vector<size_t> counts(d);
    size_t total = 1;
    for (size_t c = 0; c < d; ++c) {
      counts[c] = static_cast<size_t>(std::floor((hi[c] - lo[c]) / mesh + 1e-9)) + 1;
      total *= counts[c];
    }
    if (total > 1u << 20) throw CapacityError("eval grid: lattice would exceed 2^20 points");
    for (size_t idx = 0; idx < total; ++idx) {
      Vec x(d);
      size_t rem = idx;
      for (size_t c = 0; c < d; ++c) {
        x[c] = std::min(hi[c], lo[c] + mesh * static_cast<double>(rem % counts[c]));
        rem /= counts[c];
      }
      raw.push_back(std::move(x));
    }
  } else {
    static const unsigned bases[] = {2, 3, 5, 7, 11, 13, 17, 19};
    if (d > 8) throw CapacityError("eval grid: Halton sampling supported up to dimension 8");
    for (size_t idx = 0; idx < 4096; ++idx) {
      Vec x(d);
      for (size_t c = 0; c < d; ++c) x[c] = lo[c] + (hi[c] - lo[c]) * halton(idx, bases[c]);
      raw.push_back(std::move(x));
    }
  }

  PointCloud grid;
  grid.dim = d;
  std::vector<Vec> hull_pts;
  hull_pts.reserve(domain.points.size());
  for (const auto& p : domain.points) hull_pts.push_back(p.x);
  size_t id = 0;
  for (Vec& x : raw) {
    bool keep = true;
    if (d > 1) keep = hull_membership(x, hull_pts, tol).inside;
    if (!keep) continue;
    LabeledPoint p;
    p.id = "g" + std::to_string(id++);
    p.x = std::move(x);
    grid.points.push_back(std::move(p));
  }
  if (grid.points.empty()) throw ValidationError("eval grid: no lattice point inside the hull");
  return grid;
}

}  // namespace dentlab
