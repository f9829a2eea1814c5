#include "dentlab/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

namespace dentlab {

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ValidationError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec vsub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ValidationError("vsub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec vadd(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ValidationError("vadd: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec vscale(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

double lp_norm(const Vec& a, double p) {
  if (p == 1.0) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
  }
  if (p == 2.0) return norm2(a);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
  }
  throw ValidationError("lp_norm: p must be 1, 2 or inf");
}

double lp_dist(const Vec& a, const Vec& b, double p) { return lp_norm(vsub(a, b), p); }

void PointCloud::validate() const {
  if (dim == 0) throw ValidationError("cloud: dim must be >= 1");
  std::set<std::string> ids;
  for (const auto& pt : points) {
    if (pt.x.size() != dim) throw ValidationError("cloud: point '" + pt.id + "' has wrong dimension");
    for (double v : pt.x)
      if (!std::isfinite(v)) throw ValidationError("cloud: point '" + pt.id + "' has a non-finite entry");
    if (!ids.insert(pt.id).second) throw ValidationError("cloud: duplicate label '" + pt.id + "'");
  }
}

double PointCloud::diameter(double p) const {
  double m = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      m = std::max(m, lp_dist(points[i].x, points[j].x, p));
  return m;
}

double Metric::dist(const Vec& a, const Vec& b) const {
  if (kind != Kind::lp) throw ValidationError("metric: table metrics have no coordinate distance");
  return lp_dist(a, b, p);
}

void Metric::validate(std::size_t n) const {
  if (kind == Kind::lp) {
    if (p != 1.0 && p != 2.0 && !std::isinf(p)) throw ValidationError("metric: p must be 1, 2 or inf");
    return;
  }
  if (rows.size() != n) throw ValidationError("metric: table size does not match the cloud");
  for (const auto& row : rows)
    if (row.size() != n) throw ValidationError("metric: table is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(rows[i][i]) > 1e-12) throw ValidationError("metric: nonzero diagonal entry");
    for (std::size_t j = 0; j < n; ++j) {
      if (rows[i][j] < 0.0) throw ValidationError("metric: negative entry");
      if (std::fabs(rows[i][j] - rows[j][i]) > 1e-12) throw ValidationError("metric: asymmetric table");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (rows[i][j] > rows[i][k] + rows[k][j] + 1e-9)
          throw ValidationError("metric: triangle inequality fails");
}

double ScoredMap::value_dist(std::size_t i, std::size_t j) const {
  if (metric.kind == Metric::Kind::table) return metric.rows[i][j];
  return metric.dist(values[i], values[j]);
}

double ScoredMap::scalar(std::size_t i) const {
  if (values.size() <= i || values[i].size() != 1)
    throw ValidationError("map: scalar access on a non-real-valued map");
  return values[i][0];
}

bool ScoredMap::real_valued() const {
  if (metric.kind != Metric::Kind::lp || values.size() != domain.size()) return false;
  for (const auto& v : values)
    if (v.size() != 1) return false;
  return true;
}

void ScoredMap::validate() const {
  domain.validate();
  metric.validate(domain.size());
  if (metric.kind == Metric::Kind::lp) {
    if (values.size() != domain.size())
      throw ValidationError("map: every domain point needs exactly one value");
    std::size_t m = values.empty() ? 0 : values[0].size();
    if (!values.empty() && m == 0) throw ValidationError("map: empty value vectors");
    for (const auto& v : values) {
      if (v.size() != m) throw ValidationError("map: inconsistent value dimensions");
      for (double e : v)
        if (!std::isfinite(e)) throw ValidationError("map: non-finite value entry");
    }
  } else if (!values.empty() && values.size() != domain.size()) {
    throw ValidationError("map: value rows must be absent or one per point");
  }
}

Tolerances Tolerances::defaults() {
  Tolerances t;
  for (int k = 0; k <= 30; ++k) t.t_schedule.push_back(std::ldexp(1.0, -k));
  return t;
}

void Tolerances::validate() const {
  if (sep_tol <= 0.0 || osc_tol <= 0.0) throw ValidationError("tolerances: sep_tol and osc_tol must be positive");
  if (t_schedule.empty()) throw ValidationError("tolerances: empty t_schedule");
  for (std::size_t i = 0; i < t_schedule.size(); ++i) {
    if (t_schedule[i] <= 0.0) throw ValidationError("tolerances: t_schedule must be positive");
    if (i > 0 && t_schedule[i] >= t_schedule[i - 1])
      throw ValidationError("tolerances: t_schedule must be strictly decreasing");
  }
  if (budget == 0) throw ValidationError("tolerances: budget must be positive");
}

double support(const PointCloud& A, const Functional& u) {
  if (A.points.empty()) throw ValidationError("support: empty cloud");
  double m = -kInf;
  for (const auto& pt : A.points) m = std::max(m, u(pt.x));
  return m;
}

double support(const PointCloud& A, const IndexSet& S, const Functional& u) {
  if (S.empty()) throw ValidationError("support: empty subset");
  double m = -kInf;
  for (std::size_t i : S) m = std::max(m, u(A[i]));
  return m;
}

Slice slice(const PointCloud& A, const IndexSet& S, const Functional& u, double t) {
  if (t <= 0.0) throw ValidationError("slice: depth must be positive");
  double sup = support(A, S, u);
  Slice s;
  s.functional = u;
  s.depth = t;
  for (std::size_t i : S)
    if (u(A[i]) > sup - t) s.members.push_back(i);
  return s;
}

Slice slice(const PointCloud& A, const Functional& u, double t) {
  IndexSet all(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) all[i] = i;
  return slice(A, all, u, t);
}

double oscillation(const ScoredMap& f, const IndexSet& S) {
  double m = 0.0;
  for (std::size_t a = 0; a < S.size(); ++a)
    for (std::size_t b = a + 1; b < S.size(); ++b)
      m = std::max(m, f.value_dist(S[a], S[b]));
  return m;
}

namespace {

// Affine min-norm point over the corral: bordered Gram system
//   [ G  1 ] [alpha]   [0]
//   [ 1' 0 ] [ mu  ] = [1]
// Returns false when the system is numerically singular.
bool affine_min_norm(const std::vector<Vec>& P, const IndexSet& S, std::vector<double>& alpha) {
  const std::size_t k = S.size();
  Eigen::MatrixXd M(k + 1, k + 1);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double g = dot(P[S[i]], P[S[j]]);
      M(i, j) = g;
      M(j, i) = g;
    }
    M(i, k) = 1.0;
    M(k, i) = 1.0;
  }
  M(k, k) = 0.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) return false;
  Eigen::VectorXd sol = lu.solve(rhs);
  alpha.resize(k);
  for (std::size_t i = 0; i < k; ++i) alpha[i] = sol(i);
  return true;
}

Vec combine(const std::vector<Vec>& P, const IndexSet& S, const std::vector<double>& lam) {
  Vec w(P[0].size(), 0.0);
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t c = 0; c < w.size(); ++c) w[c] += lam[i] * P[S[i]][c];
  return w;
}

}  // namespace

HullResult hull_membership(const Vec& x, const std::vector<Vec>& B, const Tolerances& tol) {
  if (B.empty()) throw ValidationError("hull membership: empty point set");
  const std::size_t n = B.size();
  std::vector<Vec> P(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    P[i] = vsub(B[i], x);
    scale = std::max(scale, norm2(P[i]));
  }

  HullResult res;
  if (scale <= tol.sep_tol) {
    // every point of B coincides with x within tolerance
    res.inside = true;
    res.weights = {{0, 1.0}};
    res.defect = scale;
    return res;
  }

  // Wolfe min-norm point over conv(P)
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (dot(P[i], P[i]) < dot(P[start], P[start])) start = i;
  IndexSet S = {start};
  std::vector<double> lam = {1.0};
  Vec w = P[start];

  const double inner_tol = std::max(1e-13 * scale * scale, 1e-300);
  const std::size_t max_major = 16 * (n + x.size() + 8);
  for (std::size_t major = 0; major < max_major; ++major) {
    double wn2 = dot(w, w);
    if (wn2 <= tol.sep_tol * tol.sep_tol * 0.01) break;  // at the origin: inside
    std::size_t q = 0;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      double v = dot(w, P[i]);
      if (v < best) {
        best = v;
        q = i;
      }
    }
    if (best >= wn2 - inner_tol) break;  // optimality condition of the min-norm point
    if (std::find(S.begin(), S.end(), q) != S.end()) break;  // numerical stall
    S.push_back(q);
    lam.push_back(0.0);

    bool stalled = false;
    for (std::size_t minor = 0; minor < 4 * (x.size() + 4); ++minor) {
      std::vector<double> alpha;
      if (!affine_min_norm(P, S, alpha)) {
        // dependent corral: drop the entering point and stop this descent
        S.pop_back();
        lam.pop_back();
        stalled = true;
        break;
      }
      bool feas = true;
      for (double a : alpha)
        if (a <= 1e-12) feas = false;
      if (feas) {
        lam = alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < S.size(); ++i)
        if (alpha[i] <= 1e-12 && lam[i] > alpha[i])
          theta = std::min(theta, lam[i] / (lam[i] - alpha[i]));
      IndexSet keepS;
      std::vector<double> keepL;
      double sum = 0.0;
      for (std::size_t i = 0; i < S.size(); ++i) {
        double v = (1.0 - theta) * lam[i] + theta * alpha[i];
        if (v > 1e-12) {
          keepS.push_back(S[i]);
          keepL.push_back(v);
          sum += v;
        }
      }
      if (keepS.empty()) {  // defensive: keep the entering point
        keepS = {S.back()};
        keepL = {1.0};
        sum = 1.0;
      }
      for (double& v : keepL) v /= sum;
      S = keepS;
      lam = keepL;
    }
    w = combine(P, S, lam);
    if (stalled) break;
  }

  double wn = norm2(w);
  double margin = 0.0;
  if (wn > 0.0) {
    margin = kInf;
    for (std::size_t i = 0; i < n; ++i) margin = std::min(margin, dot(w, P[i]) / wn);
  }
  if (wn > tol.sep_tol && margin > tol.sep_tol) {
    res.inside = false;
    res.separator.coeffs = vscale(w, -1.0 / wn);
    res.margin = margin;
    return res;
  }
  res.inside = true;
  for (std::size_t i = 0; i < S.size(); ++i)
    if (lam[i] > 0.0) res.weights.emplace_back(S[i], lam[i]);
  std::sort(res.weights.begin(), res.weights.end());
  res.defect = wn;
  return res;
}

HullResult hull_membership(const Vec& x, const PointCloud& B, const Tolerances& tol) {
  std::vector<Vec> pts;
  pts.reserve(B.size());
  for (const auto& pt : B.points) pts.push_back(pt.x);
  return hull_membership(x, pts, tol);
}

int covering_number(const PointCloud& A, double r) {
  if (r <= 0.0) throw ValidationError("covering: radius must be positive");
  const std::size_t n = A.size();
  std::vector<bool> covered(n, false);
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i]) continue;
    ++count;
    covered[i] = true;
    Vec lo = A[i], hi = A[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (covered[j]) continue;
      // accept j while every coordinate range stays within 2r, so the
      // cluster still fits in one sup-norm ball of radius r (midrange center)
      bool ok = true;
      for (std::size_t c = 0; c < A.dim && ok; ++c) {
        double l = std::min(lo[c], A[j][c]);
        double h = std::max(hi[c], A[j][c]);
        if (h - l > 2.0 * r) ok = false;
      }
      if (!ok) continue;
      for (std::size_t c = 0; c < A.dim; ++c) {
        lo[c] = std::min(lo[c], A[j][c]);
        hi[c] = std::max(hi[c], A[j][c]);
      }
      covered[j] = true;
    }
  }
  return count;
}

}  // namespace dentlab
