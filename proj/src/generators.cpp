#include "dentlab/generators.hpp"

#include "dentlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dentlab {

namespace {

Metric scalar_metric() {
  Metric m;
  m.kind = Metric::Kind::lp;
  m.p = 2.0;
  return m;
}

std::string point_id(std::size_t i) { return "p" + std::to_string(i); }

}  // namespace

PointCloud gen_standard(Shape shape, std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d < 1) throw ValidationError("gen_standard: dimension must be at least 1");
  if (n < 1) throw ValidationError("gen_standard: need at least one point");

  PointCloud cloud;
  cloud.dim = d;

  switch (shape) {
    case Shape::grid: {
      double total = std::pow(static_cast<double>(n), static_cast<double>(d));
      if (total > 2e5) throw CapacityError("gen_standard: grid would exceed 200000 points");
      std::size_t count = static_cast<std::size_t>(total + 0.5);
      for (std::size_t idx = 0; idx < count; ++idx) {
        Vec x(d);
        std::size_t rem = idx;
        // last axis varies fastest so the 1-D grid comes out ascending
        for (std::size_t c = d; c-- > 0;) {
          std::size_t q = rem % n;
          rem /= n;
          x[c] = n == 1 ? 0.0 : static_cast<double>(q) / static_cast<double>(n - 1);
        }
        cloud.points.push_back({point_id(cloud.points.size()), std::move(x)});
      }
      break;
    }
    case Shape::simplex: {
      // barycentric refinement of order n over the vertices {0, e_1, .., e_d}:
      // every lattice point (c_1..c_d)/n with c_1 + .. + c_d <= n
      if (std::pow(static_cast<double>(n + 1), static_cast<double>(d)) > 2e6)
        throw CapacityError("gen_standard: simplex refinement too large");
      std::vector<std::size_t> c(d, 0);
      while (true) {
        std::size_t sum = 0;
        for (std::size_t v : c) sum += v;
        if (sum <= n) {
          Vec x(d);
          for (std::size_t k = 0; k < d; ++k)
            x[k] = static_cast<double>(c[k]) / static_cast<double>(n);
          cloud.points.push_back({point_id(cloud.points.size()), std::move(x)});
        }
        std::size_t k = 0;
        while (k < d && c[k] == n) c[k++] = 0;
        if (k == d) break;
        ++c[k];
      }
      break;
    }
    case Shape::ball: {
      if (n > 200000) throw CapacityError("gen_standard: ball sample too large");
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      while (cloud.points.size() < n) {
        Vec x(d);
        double s = 0.0;
        for (double& c : x) {
          c = gauss(rng);
          s += c * c;
        }
        if (s < 1e-18) continue;
        double r = std::pow(unif(rng), 1.0 / static_cast<double>(d)) / std::sqrt(s);
        for (double& c : x) c *= r;
        cloud.points.push_back({point_id(cloud.points.size()), std::move(x)});
      }
      break;
    }
    case Shape::square: {
      if (d != 2) throw ValidationError("gen_standard: square is two-dimensional");
      for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0})
          cloud.points.push_back({point_id(cloud.points.size()), Vec{a, b}});
      break;
    }
  }
  cloud.validate();
  return cloud;
}

TreeExample gen_tree(const TreeSpec& spec) {
  if (spec.depth < 1) throw ValidationError("gen_tree: depth must be at least 1");
  if (spec.branching < 2) throw ValidationError("gen_tree: branching must be at least 2");
  if (!(spec.eps_tree > 0.0)) throw ValidationError("gen_tree: separation must be positive");
  if (spec.slack < 0.0 || spec.slack > 1.0)
    throw ValidationError("gen_tree: slack must lie in [0,1]");

  const std::size_t b = spec.branching;
  const std::size_t D = spec.depth;
  double leaves_d = std::pow(static_cast<double>(b), static_cast<double>(D));
  if (leaves_d > 4096.0) throw CapacityError("gen_tree: leaf dimension would exceed 4096");
  const std::size_t m = static_cast<std::size_t>(leaves_d + 0.5);

  TreeExample tree;
  tree.cloud.dim = m;

  struct Node {
    std::string id;
    std::size_t level;
    std::ptrdiff_t parent;
    std::size_t leaf_lo, leaf_hi;  // the node's leaf block [lo, hi)
  };
  std::vector<Node> nodes;
  nodes.push_back({"r", 0, -1, 0, m});
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (nodes[head].level == D) continue;
    std::size_t width = (nodes[head].leaf_hi - nodes[head].leaf_lo) / b;
    for (std::size_t j = 1; j <= b; ++j) {
      Node child;
      child.id = nodes[head].id == "r" ? std::to_string(j) : nodes[head].id + "." + std::to_string(j);
      child.level = nodes[head].level + 1;
      child.parent = static_cast<std::ptrdiff_t>(head);
      child.leaf_lo = nodes[head].leaf_lo + (j - 1) * width;
      child.leaf_hi = child.leaf_lo + width;
      nodes.push_back(std::move(child));
    }
  }

  // breadth-first order holds by construction (children appended after parents)
  const double c = spec.eps_tree / static_cast<double>(b - 1);
  std::vector<Vec> coords(nodes.size(), Vec(m, 0.0));
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    const Node& pa = nodes[static_cast<std::size_t>(nd.parent)];
    coords[i] = coords[static_cast<std::size_t>(nd.parent)];
    for (std::size_t l = pa.leaf_lo; l < pa.leaf_hi; ++l) coords[i][l] -= c;
    for (std::size_t l = nd.leaf_lo; l < nd.leaf_hi; ++l) coords[i][l] += c * static_cast<double>(b);
  }

  if (spec.slack > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      double bound = spec.slack * spec.eps_tree * std::ldexp(1.0, -(static_cast<int>(nodes[i].level) + 3));
      for (std::size_t l = nodes[i].leaf_lo; l < nodes[i].leaf_hi; ++l)
        coords[i][l] += bound * unif(rng);
    }
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    tree.cloud.points.push_back({nodes[i].id, coords[i]});
    tree.level.push_back(nodes[i].level);
    tree.parent.push_back(nodes[i].parent);
  }
  tree.children.assign(nodes.size(), {});
  for (std::size_t i = 1; i < nodes.size(); ++i)
    tree.children[static_cast<std::size_t>(nodes[i].parent)].push_back(i);

  const double min_sep = spec.eps_tree * (1.0 - spec.slack / 8.0) - 1e-12;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (lp_dist(coords[i], coords[j], kInf) < min_sep)
        throw ValidationError("gen_tree: separation failed for the requested parameters");

  tree.f.domain = tree.cloud;
  tree.f.metric = scalar_metric();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double dist = kInf;
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (nodes[j].level % 2 == 1) dist = std::min(dist, lp_dist(coords[i], coords[j], kInf));
    tree.f.values.push_back(Vec{dist});
  }
  tree.f.validate();
  return tree;
}

ScoredMap gen_norm_one_map(const ScoredMap& g, double lip_metric_p) {
  g.validate();
  if (!g.real_valued()) throw ValidationError("norm-one map: g must be real-valued");
  if (g.size() < 2) throw ValidationError("norm-one map: need at least two samples");

  const double diam = g.domain.diameter(lip_metric_p);
  if (!(diam > 0.0)) throw ValidationError("norm-one map: degenerate domain");

  double min_abs = kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = g.scalar(i);
    min_abs = std::min(min_abs, std::fabs(v));
    if (v < -1e-12 || v > diam + 1e-12)
      throw ValidationError("norm-one map: g values must lie in [0, diam]");
  }
  if (min_abs > 1e-12) throw ValidationError("norm-one map: g must vanish at some sample");

  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      double d = lp_dist(g.domain.points[i].x, g.domain.points[j].x, lip_metric_p);
      if (std::fabs(g.scalar(i) - g.scalar(j)) > d * (1.0 + 1e-12) + 1e-12)
        throw ValidationError("norm-one map: g is not 1-Lipschitz");
    }

  ScoredMap f;
  f.domain = g.domain;
  f.metric.kind = Metric::Kind::lp;
  f.metric.p = 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = std::clamp(g.scalar(i) / diam, 0.0, 1.0);
    f.values.push_back(Vec{a, 1.0 - a});
  }
  f.validate();
  return f;
}

SepMetricResult gen_sep_metric(const PointCloud& C, const std::vector<Functional>& functionals) {
  C.validate();
  if (functionals.empty()) throw ValidationError("separating metric: need at least one functional");
  for (const Functional& u : functionals) {
    if (u.coeffs.size() != C.dim) throw ValidationError("separating metric: functional dimension mismatch");
    if (norm2(u.coeffs) > 1.0 + 1e-12)
      throw ValidationError("separating metric: functionals must have norm at most 1");
  }

  const std::size_t n = C.points.size();
  if (n > 2048) throw CapacityError("separating metric: table would exceed 2048 x 2048");
  SepMetricResult res;
  res.metric.kind = Metric::Kind::table;
  res.metric.rows.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      bool separated = false;
      for (std::size_t k = 0; k < functionals.size(); ++k) {
        double val = std::fabs(functionals[k](vsub(C.points[i].x, C.points[j].x)));
        d += std::ldexp(val, -(static_cast<int>(k) + 1));
        separated = separated || val > 1e-12;
      }
      res.metric.rows[i][j] = res.metric.rows[j][i] = d;
      if (!separated) res.separating = false;
    }
  res.metric.validate(n);
  return res;
}

namespace {

// Convex weights reproducing x from its far set: equal-weight subsets first
// (sizes 2..4, exact mean match), then hull weights rounded to rationals
// with denominator 2^20 by largest remainder.
struct Decomposition {
  std::vector<std::size_t> picks;  // domain indices
  std::vector<Rational> weights;
  double residual = 0.0;
};

bool subset_mean_matches(const ScoredMap& f, const IndexSet& far, const std::vector<std::size_t>& pick,
                         const Vec& x) {
  const std::size_t d = x.size();
  double scale = 1.0;
  for (double c : x) scale = std::max(scale, std::fabs(c));
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t i : pick) s += f.domain.points[far[i]].x[c];
    if (std::fabs(s / static_cast<double>(pick.size()) - x[c]) > 1e-12 * scale) return false;
  }
  return true;
}

Decomposition decompose_point(const ScoredMap& f, std::size_t xi, double eps, const Tolerances& tol) {
  IndexSet all(f.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  IndexSet far = far_set(f, all, xi, eps);
  if (far.empty())
    throw ValidationError("martingale: point '" + f.domain.points[xi].id + "' has an empty far set");
  const Vec& x = f.domain.points[xi].x;

  if (far.size() <= 24) {
    for (std::size_t k = 2; k <= std::min<std::size_t>(4, far.size()); ++k) {
      std::vector<std::size_t> pick(k);
      for (std::size_t i = 0; i < k; ++i) pick[i] = i;
      while (true) {
        if (subset_mean_matches(f, far, pick, x)) {
          Decomposition dec;
          for (std::size_t i : pick) dec.picks.push_back(far[i]);
          dec.weights.assign(k, Rational(1, static_cast<unsigned>(k)));
          return dec;
        }
        std::size_t j = k;
        while (j-- > 0) {
          if (pick[j] + (k - j) < far.size()) {
            ++pick[j];
            for (std::size_t l = j + 1; l < k; ++l) pick[l] = pick[l - 1] + 1;
            break;
          }
          if (j == 0) goto next_size;
        }
      }
    next_size:;
    }
  }

  std::vector<Vec> far_pts;
  far_pts.reserve(far.size());
  for (std::size_t i : far) far_pts.push_back(f.domain.points[i].x);
  HullResult hull = hull_membership(x, far_pts, tol);
  if (!hull.inside)
    throw ValidationError("martingale: point '" + f.domain.points[xi].id +
                          "' is not inside the hull of its far set (no stalled witness)");

  // round to k/2^20 by largest remainder so the weights sum to exactly 1
  const long den = 1L << 20;
  std::vector<std::size_t> picks;
  std::vector<double> raw;
  for (const auto& [idx, w] : hull.weights) {
    if (w <= 1e-15) continue;
    picks.push_back(far[idx]);
    raw.push_back(w);
  }
  std::vector<long> num(raw.size());
  long assigned = 0;
  std::vector<std::pair<double, std::size_t>> rema;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double exact = raw[i] * static_cast<double>(den);
    num[i] = static_cast<long>(std::floor(exact));
    assigned += num[i];
    rema.push_back({exact - std::floor(exact), i});
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long r = 0; r < den - assigned; ++r) ++num[rema[static_cast<std::size_t>(r) % rema.size()].second];

  Decomposition dec;
  Vec mean(x.size(), 0.0);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (num[i] == 0) continue;
    dec.picks.push_back(picks[i]);
    dec.weights.push_back(Rational(num[i], den));
    mean = vadd(mean, vscale(f.domain.points[picks[i]].x,
                             static_cast<double>(num[i]) / static_cast<double>(den)));
  }
  dec.residual = lp_dist(mean, x, 2.0);
  return dec;
}

}  // namespace

MartingaleRun martingale_run(const ScoredMap& f, double eps, int N, const Tolerances& tol) {
  f.validate();
  tol.validate();
  if (!(eps > 0.0)) throw ValidationError("martingale: eps must be positive");
  if (N < 0) throw ValidationError("martingale: depth must be nonnegative");
  if (f.metric.kind != Metric::Kind::lp)
    throw ValidationError("martingale: needs an lp value metric for conditional means");

  DerivationTrace trace = dz_index(f, eps, DeriveMode::cluster, tol);
  if (!trace.stalled)
    throw ValidationError("martingale: the derivation does not stall at this scale; no witness");

  MartingaleRun run;
  run.eps = eps;
  const IndexSet& survivors = trace.stages.back().survivors;
  run.levels.push_back({MartingaleInterval{Rational(0), Rational(1), survivors.front()}});

  for (int n = 0; n < N; ++n) {
    if (run.levels.back().size() > 100000)
      throw CapacityError("martingale: partition grew past 100000 intervals");
    std::vector<MartingaleInterval> next;
    double weight_residual = 0.0;
    for (const MartingaleInterval& iv : run.levels.back()) {
      Decomposition dec = decompose_point(f, iv.value, eps, tol);
      weight_residual = std::max(weight_residual, dec.residual);
      Rational len = iv.hi - iv.lo;
      Rational at = iv.lo;
      for (std::size_t i = 0; i < dec.picks.size(); ++i) {
        Rational w = dec.weights[i] * len;
        next.push_back(MartingaleInterval{at, at + w, dec.picks[i]});
        at += w;
      }
      if (at != iv.hi)
        throw ValidationError("martingale: decomposition weights do not sum to one");
    }
    run.weight_residuals.push_back(weight_residual);
    run.levels.push_back(std::move(next));
  }

  // structural verification: exact refinement and full coverage per level
  for (std::size_t n = 0; n < run.levels.size(); ++n) {
    const auto& part = run.levels[n];
    Rational at(0);
    for (const auto& iv : part) {
      if (iv.lo != at || iv.hi <= iv.lo) run.measurable_ok = false;
      at = iv.hi;
    }
    if (at != Rational(1)) run.measurable_ok = false;
    if (n == 0) continue;
    std::size_t pi = 0;
    for (const auto& iv : part) {
      while (pi < run.levels[n - 1].size() && run.levels[n - 1][pi].hi <= iv.lo) ++pi;
      if (pi >= run.levels[n - 1].size() || run.levels[n - 1][pi].lo > iv.lo ||
          run.levels[n - 1][pi].hi < iv.hi)
        run.refinement_ok = false;
    }
  }

  const std::size_t vdim = f.values.empty() ? 0 : f.values[0].size();
  bool conditions = run.refinement_ok && run.measurable_ok;
  for (std::size_t n = 0; n + 1 < run.levels.size(); ++n) {
    const auto& part = run.levels[n];
    const auto& fine = run.levels[n + 1];
    double residual = 0.0, separation = 0.0, min_step = kInf;
    std::size_t ci = 0;
    for (const auto& iv : part) {
      Rational len = iv.hi - iv.lo;
      Vec mean(vdim, 0.0);
      while (ci < fine.size() && fine[ci].hi <= iv.hi) {
        const auto& child = fine[ci];
        double w = static_cast<double>(child.hi - child.lo);
        mean = vadd(mean, vscale(f.values[child.value], w / static_cast<double>(len)));
        double step = f.value_dist(iv.value, child.value);
        separation += w * step;
        min_step = std::min(min_step, step);
        ++ci;
      }
      residual += static_cast<double>(len) * lp_dist(f.values[iv.value], mean, f.metric.p);
    }
    run.residuals.push_back(residual);
    run.residual_bounds.push_back(eps * std::ldexp(1.0, -(static_cast<int>(n) + 4)));
    run.separations.push_back(separation);
    run.min_step_dist.push_back(min_step);
    run.residual_sum += residual;
    if (residual > run.residual_bounds.back() + tol.osc_tol) conditions = false;
    if (separation < eps - tol.osc_tol) conditions = false;
  }
  run.pass = conditions && run.residual_sum <= eps / 16.0 + eps / 8.0 + tol.osc_tol;
  return run;
}

}  // namespace dentlab
