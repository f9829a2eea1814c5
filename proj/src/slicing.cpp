#include "dentlab/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dentlab {

namespace {

Functional normalized(const Functional& u) {
  double n = norm2(u.coeffs);
  if (n <= 1e-12) throw ValidationError("functional must be nonzero");
  return Functional{vscale(u.coeffs, 1.0 / n)};
}

// Orthonormal basis of ker u, built from the coordinate axes.
std::vector<Vec> kernel_basis(const Vec& unit_u) {
  const size_t d = unit_u.size();
  std::vector<Vec> basis;
  for (size_t j = 0; j < d && basis.size() + 1 < d; ++j) {
    Vec b(d, 0.0);
    b[j] = 1.0;
    double cu = dot(b, unit_u);
    for (size_t k = 0; k < d; ++k) b[k] -= cu * unit_u[k];
    for (const Vec& prev : basis) {
      double cp = dot(b, prev);
      for (size_t k = 0; k < d; ++k) b[k] -= cp * prev[k];
    }
    double n = norm2(b);
    if (n > 1e-9) basis.push_back(vscale(b, 1.0 / n));
  }
  return basis;
}

Vec random_kernel_unit(const Vec& unit_u, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec w(unit_u.size());
    for (double& c : w) c = gauss(rng);
    double cu = dot(w, unit_u);
    for (size_t k = 0; k < w.size(); ++k) w[k] -= cu * unit_u[k];
    double n = norm2(w);
    if (n > 1e-9) return vscale(w, 1.0 / n);
  }
  throw ValidationError("could not sample a direction orthogonal to u");
}

double abs_scale(std::initializer_list<double> vals) {
  double m = 1.0;
  for (double v : vals) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

SlicingProfile ss_profile(const ScoredMap& f, const IndexSet& A, const Functional& u,
                          const Tolerances& tol) {
  f.validate();
  tol.validate();
  if (A.empty()) throw ValidationError("ss_profile: empty index set");
  for (size_t i : A)
    if (i >= f.domain.points.size()) throw ValidationError("ss_profile: index out of range");

  SlicingProfile prof;
  prof.functional = normalized(u);

  const double m = support(f.domain, A, prof.functional);
  for (double t : tol.t_schedule) {
    Slice s = slice(f.domain, A, prof.functional, t);
    prof.samples.emplace_back(t, oscillation(f, s.members));
  }

  IndexSet face;
  for (size_t i : A)
    if (prof.functional(f.domain.points[i].x) >= m - tol.sep_tol) face.push_back(i);
  prof.floor = oscillation(f, face);
  prof.verdict = prof.floor <= tol.osc_tol ? SlicingProfile::Verdict::strongly_slicing
                                           : SlicingProfile::Verdict::refuted;

  // Slope of log osc against log t over the regime strictly above the floor.
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, osc] : prof.samples)
    if (osc > prof.floor + tol.osc_tol && osc > 0.0 && t > 0.0)
      pts.emplace_back(std::log(t), std::log(osc));
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (std::fabs(denom) > 1e-18) prof.rate = (n * sxy - sx * sy) / denom;
  }
  return prof;
}

std::vector<Vec> sample_disc(const Functional& u, double r, std::uint64_t seed, double* mesh_out) {
  Functional un = normalized(u);
  const size_t d = un.coeffs.size();
  if (!(r > 0.0)) throw ValidationError("sample_disc: radius must be positive");

  std::vector<Vec> out;
  if (d == 1) {
    out.push_back(Vec(1, 0.0));
    if (mesh_out) *mesh_out = 0.0;
    return out;
  }

  std::vector<Vec> basis = kernel_basis(un.coeffs);
  for (const Vec& b : basis)
    for (int sign : {+1, -1})
      for (size_t k = 1; k <= d; ++k)
        out.push_back(vscale(b, sign * r * static_cast<double>(k) / static_cast<double>(d)));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 64; ++k) {
    Vec w = random_kernel_unit(un.coeffs, rng);
    double radius = r * std::pow(unif(rng), 1.0 / static_cast<double>(d - 1));
    out.push_back(vscale(w, radius));
  }

  if (mesh_out) {
    if (d == 2) {
      // Covering radius of the projections onto the single kernel axis.
      std::vector<double> ts;
      ts.reserve(out.size());
      for (const Vec& v : out) ts.push_back(dot(v, basis[0]));
      std::sort(ts.begin(), ts.end());
      double mesh = std::max(ts.front() + r, r - ts.back());
      for (size_t i = 0; i + 1 < ts.size(); ++i) mesh = std::max(mesh, (ts[i + 1] - ts[i]) / 2.0);
      *mesh_out = mesh;
    } else {
      *mesh_out = 2.0 * r * std::pow(static_cast<double>(out.size()),
                                     -1.0 / static_cast<double>(d - 1));
    }
  }
  return out;
}

SsPerturbResult ss_perturb(const ScoredMap& f, const IndexSet& A, const Functional& u, double eps,
                           double n_target, const Tolerances& tol, std::uint64_t seed) {
  f.validate();
  tol.validate();
  if (A.empty()) throw ValidationError("ss_perturb: empty index set");
  for (size_t i : A)
    if (i >= f.domain.points.size()) throw ValidationError("ss_perturb: index out of range");
  if (!(eps > 0.0)) throw ValidationError("ss_perturb: eps must be positive");
  if (!(n_target > 0.0)) throw ValidationError("ss_perturb: oscillation target must be positive");

  const Functional un = normalized(u);
  const auto& pts = f.domain.points;

  SsPerturbResult best;
  best.y_star = un;
  best.perturbation_norm = 0.0;

  // The unperturbed direction first, walking the depth schedule.
  const double m0 = support(f.domain, A, un);
  for (double t : tol.t_schedule) {
    Slice s = slice(f.domain, A, un, t);
    double osc = oscillation(f, s.members);
    if (osc < best.achieved_osc) {
      best.achieved_osc = osc;
      best.slice = s;
    }
    if (osc < n_target) {
      best.status = SsPerturbResult::Status::found;
      return best;
    }
  }

  double diam = 0.0;
  for (size_t a = 0; a < A.size(); ++a)
    for (size_t b = a + 1; b < A.size(); ++b)
      diam = std::max(diam, lp_dist(pts[A[a]].x, pts[A[b]].x, 2.0));
  if (diam <= 0.0) return best;  // coincident points already handled above

  size_t x0 = A[0];
  for (size_t i : A)
    if (un(pts[i].x) > un(pts[x0].x)) x0 = i;

  Vec y(f.domain.dim, 0.0);
  for (size_t i : A) y = vadd(y, pts[i].x);
  y = vscale(y, 1.0 / static_cast<double>(A.size()));
  double push = std::max(0.0, un(y) - un(pts[x0].x)) + diam / 4.0;
  y = vsub(y, vscale(un.coeffs, push));

  const double a_cut = 0.5 * (un(pts[x0].x) + un(y));
  const double r = 2.0 * diam / eps;

  double mesh = 0.0;
  std::vector<Vec> disc = sample_disc(un, r, seed ^ 0x9e3779b97f4a7c15ULL, &mesh);
  std::vector<Vec> cloud;
  cloud.reserve(A.size() + disc.size());
  for (size_t i : A) cloud.push_back(pts[i].x);
  for (const Vec& v : disc) cloud.push_back(vadd(y, v));

  // Generators of conv(cloud) cut at {u <= a_cut}: the member points plus
  // every pairwise segment crossing. Their hull is exactly the cut region,
  // so a linear sup over the region is a max over these generators.
  std::vector<Vec> gens;
  std::vector<double> uvals(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    uvals[i] = un(cloud[i]);
    if (uvals[i] <= a_cut) gens.push_back(cloud[i]);
  }
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (uvals[i] >= a_cut) continue;
    for (size_t j = 0; j < cloud.size(); ++j) {
      if (uvals[j] <= a_cut) continue;
      double lam = (a_cut - uvals[i]) / (uvals[j] - uvals[i]);
      Vec cut = vadd(cloud[i], vscale(vsub(cloud[j], cloud[i]), lam));
      gens.push_back(cut);
    }
  }
  if (gens.empty()) throw ValidationError("ss_perturb: degenerate obstacle");

  std::vector<Vec> dirs = kernel_basis(un.coeffs);
  {
    std::vector<Vec> extra;
    for (size_t i = 0; i < dirs.size(); ++i) {
      extra.push_back(vscale(dirs[i], -1.0));
      for (size_t j = i + 1; j < dirs.size(); ++j)
        for (int si : {+1, -1})
          for (int sj : {+1, -1})
            extra.push_back(vscale(vadd(vscale(dirs[i], si), vscale(dirs[j], sj)),
                                   1.0 / std::sqrt(2.0)));
    }
    dirs.insert(dirs.end(), extra.begin(), extra.end());
  }

  std::mt19937_64 rng(seed);
  const double rhos[] = {0.75, 0.5, 0.25, 0.1};
  int budget = tol.budget;
  size_t dir_idx = 0;

  while (budget > 0) {
    Vec w;
    if (dir_idx < dirs.size())
      w = dirs[dir_idx++];
    else
      w = random_kernel_unit(un.coeffs, rng);

    for (double rho_frac : rhos) {
      if (budget-- <= 0) break;
      double rho = rho_frac * eps;
      Functional v = normalized(Functional{vadd(un.coeffs, vscale(w, rho))});
      double pert = norm2(vsub(un.coeffs, v.coeffs));
      if (pert >= eps) continue;

      double th_high = support(f.domain, A, v);
      double th_low = -kInf;
      for (const Vec& g : gens) th_low = std::max(th_low, v(g));
      double gap = th_high - th_low;
      if (gap <= 1e-12 * abs_scale({th_high, th_low})) continue;

      for (int j = 1; j <= 16; ++j) {
        double theta = th_high - gap * std::ldexp(1.0, -j);
        IndexSet members;
        for (size_t i : A)
          if (v(pts[i].x) > theta) members.push_back(i);
        if (members.empty()) continue;
        double osc = oscillation(f, members);
        if (osc < best.achieved_osc) {
          best.y_star = v;
          best.slice = Slice{v, th_high - theta, members};
          best.perturbation_norm = pert;
          best.achieved_osc = osc;
        }
        if (osc < n_target && pert < eps) {
          // Independent re-check of the certificate before returning it.
          IndexSet check;
          for (size_t i : A)
            if (v(pts[i].x) > theta) check.push_back(i);
          double osc2 = oscillation(f, check);
          double pert2 = norm2(vsub(un.coeffs, v.coeffs));
          if (check == members && osc2 < n_target && pert2 < eps) {
            best.status = SsPerturbResult::Status::found;
            best.y_star = v;
            best.slice = Slice{v, th_high - theta, members};
            best.perturbation_norm = pert2;
            best.achieved_osc = osc2;
            return best;
          }
        }
      }
    }
  }
  return best;
}

BourReport bour_bound_check(const Functional& u, const Vec& x0, const Vec& y, double r,
                            const std::vector<Functional>& candidates, std::uint64_t seed) {
  if (u.coeffs.size() != x0.size() || x0.size() != y.size())
    throw ValidationError("bour_bound_check: dimension mismatch");
  if (std::fabs(norm2(u.coeffs) - 1.0) > 1e-6)
    throw ValidationError("bour_bound_check: u must be a unit functional");
  if (!(r > 0.0)) throw ValidationError("bour_bound_check: radius must be positive");
  if (!(u(x0) > u(y))) throw ValidationError("bour_bound_check: u must separate x0 from y");
  double dist = lp_dist(x0, y, 2.0);
  if (dist > r / 2.0 + 1e-12)
    throw ValidationError("bour_bound_check: x0 must lie within r/2 of y");

  BourReport rep;
  std::vector<Vec> disc = sample_disc(u, r, seed, &rep.mesh);
  std::vector<Vec> samples;
  samples.reserve(disc.size());
  for (const Vec& v : disc) samples.push_back(vadd(y, v));
  rep.slack = 4.0 * rep.mesh / r;

  const double bound = (2.0 / r) * dist + rep.slack;
  for (const Functional& c : candidates) {
    if (c.coeffs.size() != u.coeffs.size())
      throw ValidationError("bour_bound_check: candidate dimension mismatch");
    if (std::fabs(norm2(c.coeffs) - 1.0) > 1e-6)
      throw ValidationError("bour_bound_check: candidates must be unit functionals");
    double sup_v = -kInf;
    for (const Vec& s : samples) sup_v = std::max(sup_v, c(s));
    if (!(c(x0) > sup_v)) {
      ++rep.excluded;
      continue;
    }
    ++rep.tested;
    double diff = norm2(vsub(u.coeffs, c.coeffs));
    double excess = diff - bound;
    rep.max_excess = std::max(rep.max_excess, excess);
    if (excess > 1e-12) {
      ++rep.violations;
      if (rep.examples.size() < 8) rep.examples.push_back({c, diff, bound});
    }
  }
  return rep;
}

SsScanStats ss_density_scan(const ScoredMap& f, const IndexSet& A, int n_dirs, double eps,
                            const Tolerances& tol, std::uint64_t seed) {
  if (n_dirs < 1) throw ValidationError("ss_density_scan: need at least one direction");
  if (!(eps > 0.0)) throw ValidationError("ss_density_scan: eps must be positive");
  f.validate();

  SsScanStats stats;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int successes = 0;
  for (int k = 0; k < n_dirs; ++k) {
    Vec dir(f.domain.dim);
    double n = 0.0;
    do {
      for (double& c : dir) c = gauss(rng);
      n = norm2(dir);
    } while (n <= 1e-9);
    Functional u{vscale(dir, 1.0 / n)};

    SsPerturbResult res = ss_perturb(f, A, u, eps, eps, tol, seed * 1000003ULL + k + 1);
    SsScanRow row;
    row.direction_index = k;
    row.success = res.status == SsPerturbResult::Status::found;
    row.perturbation_norm = std::isfinite(res.perturbation_norm) ? res.perturbation_norm : 0.0;
    row.achieved_osc = std::isfinite(res.achieved_osc) ? res.achieved_osc : 0.0;
    row.slice_depth = res.slice.depth;
    stats.rows.push_back(row);
    if (row.success) {
      ++successes;
      stats.max_perturbation = std::max(stats.max_perturbation, row.perturbation_norm);
    }
  }
  stats.success_fraction = static_cast<double>(successes) / static_cast<double>(n_dirs);
  return stats;
}

}  // namespace dentlab
