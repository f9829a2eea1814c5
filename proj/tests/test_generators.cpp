#include "dentlab/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace dentlab;

namespace {

ScoredMap identity_map(PointCloud A, double p = 2.0) {
  ScoredMap f;
  f.domain = std::move(A);
  f.metric.kind = Metric::Kind::lp;
  f.metric.p = p;
  for (const auto& pt : f.domain.points) f.values.push_back(pt.x);
  f.validate();
  return f;
}

ScoredMap real_map(PointCloud A, std::vector<double> vals, double p = 2.0) {
  ScoredMap f;
  f.domain = std::move(A);
  f.metric.kind = Metric::Kind::lp;
  f.metric.p = p;
  for (double v : vals) f.values.push_back({v});
  f.validate();
  return f;
}

double sup_diam(const PointCloud& C) {
  double d = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i)
    for (std::size_t j = i + 1; j < C.size(); ++j)
      d = std::max(d, lp_dist(C.points[i].x, C.points[j].x, kInf));
  return d;
}

}  // namespace

TEST_CASE("standard grids enumerate the last axis fastest") {
  PointCloud g1 = gen_standard(Shape::grid, 1, 21);
  REQUIRE(g1.size() == 21);
  for (int i = 0; i < 21; ++i) {
    CHECK(g1.points[i].x[0] == doctest::Approx(i / 20.0).epsilon(1e-15));
    CHECK(g1.points[i].id == "p" + std::to_string(i));
  }
  CHECK(g1.points[20].x[0] == 1.0);

  PointCloud g2 = gen_standard(Shape::grid, 2, 3);
  REQUIRE(g2.size() == 9);
  CHECK(g2.points[0].x == Vec{0.0, 0.0});
  CHECK(g2.points[1].x == Vec{0.0, 0.5});
  CHECK(g2.points[3].x == Vec{0.5, 0.0});
  CHECK(g2.points[8].x == Vec{1.0, 1.0});

  PointCloud g0 = gen_standard(Shape::grid, 1, 1);
  CHECK(g0.points[0].x == Vec{0.0});
}

TEST_CASE("simplex refinement of order two in the plane") {
  PointCloud s = gen_standard(Shape::simplex, 2, 2);
  REQUIRE(s.size() == 6);
  CHECK(s.points[0].x == Vec{0.0, 0.0});
  CHECK(s.points[1].x == Vec{0.5, 0.0});
  CHECK(s.points[2].x == Vec{1.0, 0.0});
  CHECK(s.points[3].x == Vec{0.0, 0.5});
  CHECK(s.points[4].x == Vec{0.5, 0.5});
  CHECK(s.points[5].x == Vec{0.0, 1.0});
  for (const auto& pt : s.points) CHECK(pt.x[0] + pt.x[1] <= 1.0 + 1e-15);
}

TEST_CASE("ball samples are inside the ball and seed-deterministic") {
  PointCloud b1 = gen_standard(Shape::ball, 3, 40, 11);
  PointCloud b2 = gen_standard(Shape::ball, 3, 40, 11);
  PointCloud b3 = gen_standard(Shape::ball, 3, 40, 12);
  REQUIRE(b1.size() == 40);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(norm2(b1.points[i].x) <= 1.0 + 1e-12);
    same = same && b1.points[i].x == b2.points[i].x;
    differs = differs || b1.points[i].x != b3.points[i].x;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("the square shape is the four corners in fixed order") {
  PointCloud sq = gen_standard(Shape::square, 2, 1);
  REQUIRE(sq.size() == 4);
  CHECK(sq.points[0].x == Vec{0.0, 0.0});
  CHECK(sq.points[1].x == Vec{0.0, 1.0});
  CHECK(sq.points[2].x == Vec{1.0, 0.0});
  CHECK(sq.points[3].x == Vec{1.0, 1.0});
  CHECK_THROWS_AS(gen_standard(Shape::square, 3, 1), ValidationError);
}

TEST_CASE("binary tree of depth two: exact averages and separations") {
  TreeExample t = gen_tree({2, 1.0, 2, 0.0, 1});
  REQUIRE(t.cloud.size() == 7);
  CHECK(t.cloud.dim == 4);
  CHECK(t.level == std::vector<std::size_t>{0, 1, 1, 2, 2, 2, 2});
  CHECK(t.parent == std::vector<std::ptrdiff_t>{-1, 0, 0, 1, 1, 2, 2});
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t c : t.children[i]) CHECK(t.parent[c] == static_cast<std::ptrdiff_t>(i));

  // every internal node is the exact average of its children, coordinatewise
  for (std::size_t i = 0; i < 7; ++i) {
    if (t.children[i].empty()) continue;
    for (std::size_t k = 0; k < t.cloud.dim; ++k) {
      double s = 0.0;
      for (std::size_t c : t.children[i]) s += t.cloud.points[c].x[k];
      CHECK(t.cloud.points[i].x[k] == s / static_cast<double>(t.children[i].size()));
    }
  }

  // all pairs at least eps_tree apart in sup norm, parent-child exactly so
  double min_pair = kInf;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = i + 1; j < 7; ++j)
      min_pair = std::min(min_pair, lp_dist(t.cloud.points[i].x, t.cloud.points[j].x, kInf));
  CHECK(min_pair >= 1.0);
  CHECK(lp_dist(t.cloud.points[0].x, t.cloud.points[1].x, kInf) == 1.0);

  // scores: sup distance to the odd levels, so 0 there and 1 elsewhere
  CHECK(t.f.values[0][0] == 1.0);
  CHECK(t.f.values[1][0] == 0.0);
  CHECK(t.f.values[2][0] == 0.0);
  for (std::size_t i = 3; i < 7; ++i) CHECK(t.f.values[i][0] == 1.0);
}

TEST_CASE("tree jitter stays within the averaging budget") {
  TreeSpec spec{3, 1.0, 2, 0.5, 9};
  TreeExample t = gen_tree(spec);
  TreeExample t2 = gen_tree(spec);
  REQUIRE(t.cloud.size() == 15);
  CHECK(t.cloud.dim == 8);
  for (std::size_t i = 0; i < t.cloud.size(); ++i) {
    CHECK(t.cloud.points[i].x == t2.cloud.points[i].x);
    if (t.children[i].empty()) continue;
    Vec avg(t.cloud.dim, 0.0);
    for (std::size_t c : t.children[i])
      for (std::size_t k = 0; k < t.cloud.dim; ++k) avg[k] += t.cloud.points[c].x[k];
    double resid = 0.0;
    for (std::size_t k = 0; k < t.cloud.dim; ++k)
      resid = std::max(resid,
                       std::abs(t.cloud.points[i].x[k] - avg[k] / t.children[i].size()));
    const double budget = 1.0 * std::ldexp(1.0, -static_cast<int>(t.level[i]) - 2);
    CHECK(resid <= budget + 1e-15);
  }
  // separation degrades by at most slack/8 under the jitter
  double min_pair = kInf;
  for (std::size_t i = 0; i < t.cloud.size(); ++i)
    for (std::size_t j = i + 1; j < t.cloud.size(); ++j)
      min_pair = std::min(min_pair, lp_dist(t.cloud.points[i].x, t.cloud.points[j].x, kInf));
  CHECK(min_pair >= 1.0 * (1.0 - 0.5 / 8.0) - 1e-12);
}

TEST_CASE("tree shape bookkeeping for branching three") {
  TreeExample t = gen_tree({2, 0.5, 3, 0.0, 1});
  CHECK(t.cloud.size() == 13);
  CHECK(t.cloud.dim == 9);
  CHECK(t.children[0].size() == 3);
  CHECK_THROWS_AS(gen_tree({13, 1.0, 2, 0.0, 1}), CapacityError);
  CHECK_THROWS_AS(gen_tree({0, 1.0, 2, 0.0, 1}), ValidationError);
  CHECK_THROWS_AS(gen_tree({2, -1.0, 2, 0.0, 1}), ValidationError);
}

TEST_CASE("norm-one maps have unit values and rescaled oscillation") {
  PointCloud A = gen_standard(Shape::grid, 1, 21);
  std::vector<double> vals;
  for (const auto& pt : A.points) vals.push_back(std::abs(pt.x[0] - 0.3));
  ScoredMap g = real_map(A, vals);
  ScoredMap F = gen_norm_one_map(g, 2.0);
  REQUIRE(F.size() == 21);
  CHECK(F.metric.kind == Metric::Kind::lp);
  CHECK(F.metric.p == 1.0);
  for (const auto& v : F.values) {
    REQUIRE(v.size() == 2);
    CHECK(std::abs(v[0]) + std::abs(v[1]) == 1.0);  // bitwise
  }
  // oscillation scales by exactly 2/diam on every subset
  const double diam = 1.0;  // grid end points
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    IndexSet S;
    for (std::size_t i = 0; i < 21; ++i)
      if (rng() % 3 == 0) S.push_back(i);
    if (S.size() < 2) continue;
    CHECK(oscillation(F, S) ==
          doctest::Approx(2.0 / diam * oscillation(g, S)).epsilon(1e-12));
  }
}

TEST_CASE("norm-one construction rejects unusable score functions") {
  PointCloud A = gen_standard(Shape::grid, 1, 11);
  std::vector<double> neg(11, 0.0);
  neg[3] = -0.1;
  CHECK_THROWS_AS(gen_norm_one_map(real_map(A, neg)), ValidationError);
  std::vector<double> off(11, 0.5);  // never vanishes
  CHECK_THROWS_AS(gen_norm_one_map(real_map(A, off)), ValidationError);
  std::vector<double> steep(11, 0.0);
  steep[5] = 0.9;  // jumps 0.9 over a step of 0.1
  CHECK_THROWS_AS(gen_norm_one_map(real_map(A, steep)), ValidationError);
  std::vector<double> tall(11, 0.0);
  tall[10] = 1.5;  // exceeds the domain diameter, even though 1-Lipschitz fails first anyway
  CHECK_THROWS_AS(gen_norm_one_map(real_map(A, tall)), ValidationError);
}

TEST_CASE("norm-one tree map stalls the cluster derivation but not the exact one") {
  TreeExample t = gen_tree({2, 1.0, 2, 0.0, 1});
  ScoredMap F = gen_norm_one_map(t.f, kInf);
  const double diam = sup_diam(t.cloud);
  const double eps = 2.0 * (1.0 / 2.0) / diam;  // the value gap of F
  Tolerances tol = Tolerances::defaults();
  DerivationTrace cl = dz_index(F, 0.9 * eps, DeriveMode::cluster, tol);
  CHECK(cl.stalled);
  CHECK(cl.stalled_at == 2);
  REQUIRE(!cl.stages.empty());
  CHECK(cl.stages.back().survivors == IndexSet{0, 1, 2});
  DerivationTrace ex = dz_index(F, 0.9 * eps, DeriveMode::exact, tol);
  CHECK(!ex.stalled);
  CHECK(ex.dz >= 2);
}

TEST_CASE("separating metrics weight functionals dyadically") {
  PointCloud two = gen_standard(Shape::grid, 1, 2);
  SepMetricResult r = gen_sep_metric(two, {Functional{{1.0}}});
  CHECK(r.separating);
  CHECK(r.metric.kind == Metric::Kind::table);
  CHECK(r.metric.rows[0][1] == 0.5);
  CHECK(r.metric.rows[1][0] == 0.5);
  CHECK(r.metric.rows[0][0] == 0.0);

  SepMetricResult r2 = gen_sep_metric(two, {Functional{{1.0}}, Functional{{1.0}}});
  CHECK(r2.metric.rows[0][1] == 0.75);
}

TEST_CASE("non-separating functional families are flagged, not rejected") {
  PointCloud sq = gen_standard(Shape::square, 2, 1);
  SepMetricResult r = gen_sep_metric(sq, {Functional{{1.0, 0.0}}});
  CHECK(!r.separating);
  // still a valid pseudometric table: corners sharing the first coordinate
  // are at distance zero
  CHECK(r.metric.rows[0][1] == 0.0);
  CHECK(r.metric.rows[0][2] == 0.5);
  r.metric.validate(4);
}

TEST_CASE("separating metric validation and capacity") {
  PointCloud two = gen_standard(Shape::grid, 1, 2);
  CHECK_THROWS_AS(gen_sep_metric(two, {}), ValidationError);
  CHECK_THROWS_AS(gen_sep_metric(two, {Functional{{2.0}}}), ValidationError);
  CHECK_THROWS_AS(gen_sep_metric(two, {Functional{{1.0, 0.0}}}), ValidationError);
  PointCloud big = gen_standard(Shape::grid, 1, 2049);
  CHECK_THROWS_AS(gen_sep_metric(big, {Functional{{1.0}}}), CapacityError);
}

TEST_CASE("martingale run on the binary tree is exact at depth two") {
  TreeExample t = gen_tree({2, 1.0, 2, 0.0, 1});
  ScoredMap f = identity_map(t.cloud, kInf);
  Tolerances tol = Tolerances::defaults();
  MartingaleRun run = martingale_run(f, 0.5, 2, tol);
  CHECK(run.pass);
  CHECK(run.refinement_ok);
  CHECK(run.measurable_ok);
  REQUIRE(run.levels.size() == 3);
  CHECK(run.levels[0].size() == 1);
  CHECK(run.levels[1].size() == 2);
  CHECK(run.levels[2].size() == 4);
  CHECK(run.levels[0][0].lo == Rational(0));
  CHECK(run.levels[0][0].hi == Rational(1));
  CHECK(run.levels[1][1].lo == Rational(1, 2));
  REQUIRE(run.residuals.size() == 2);
  CHECK(run.residuals[0] == 0.0);
  CHECK(run.residuals[1] == 0.0);
  CHECK(run.residual_sum == 0.0);
  CHECK(run.residual_bounds == std::vector<double>{0.03125, 0.015625});
  CHECK(run.separations == std::vector<double>{1.0, 1.0});
  CHECK(run.min_step_dist == std::vector<double>{1.0, 1.0});
  CHECK(run.weight_residuals == std::vector<double>{0.0, 0.0});

  // each level refines the one before it with matching endpoints
  for (std::size_t n = 0; n + 1 < run.levels.size(); ++n) {
    Rational cover(0);
    for (const auto& iv : run.levels[n + 1]) cover += iv.hi - iv.lo;
    CHECK(cover == Rational(1));
  }
}

TEST_CASE("martingale depth is capped by the tree height") {
  TreeExample t = gen_tree({2, 1.0, 2, 0.0, 1});
  ScoredMap f = identity_map(t.cloud, kInf);
  Tolerances tol = Tolerances::defaults();
  CHECK_THROWS_AS(martingale_run(f, 0.5, 3, tol), ValidationError);
  MartingaleRun trivial = martingale_run(f, 0.5, 0, tol);
  CHECK(trivial.pass);
  CHECK(trivial.levels.size() == 1);
  CHECK(trivial.residuals.empty());
  CHECK(trivial.residual_sum == 0.0);
}

TEST_CASE("martingale preconditions: lp values over a stalled derivation") {
  Tolerances tol = Tolerances::defaults();
  PointCloud A = gen_standard(Shape::grid, 1, 21);
  ScoredMap constant = real_map(A, std::vector<double>(21, 0.5));
  CHECK_THROWS_AS(martingale_run(constant, 0.5, 1, tol), ValidationError);

  TreeExample t = gen_tree({2, 1.0, 2, 0.0, 1});
  ScoredMap f = identity_map(t.cloud, kInf);
  ScoredMap tabled = f;
  tabled.metric.kind = Metric::Kind::table;
  tabled.metric.rows.assign(7, std::vector<double>(7, 1.0));
  for (std::size_t i = 0; i < 7; ++i) tabled.metric.rows[i][i] = 0.0;
  CHECK_THROWS_AS(martingale_run(tabled, 0.5, 1, tol), ValidationError);

  CHECK_THROWS_AS(martingale_run(f, -1.0, 1, tol), ValidationError);
  CHECK_THROWS_AS(martingale_run(f, 0.5, -1, tol), ValidationError);
}

TEST_CASE("martingale separation failure is reported, not thrown") {
  PointCloud A = gen_standard(Shape::grid, 1, 21);
  std::vector<double> vals;
  for (const auto& pt : A.points) vals.push_back(pt.x[0]);
  ScoredMap f = real_map(A, vals);
  Tolerances tol = Tolerances::defaults();
  MartingaleRun run = martingale_run(f, 0.4, 1, tol);
  CHECK(!run.pass);
  REQUIRE(run.separations.size() == 1);
  CHECK(run.separations[0] == 0.25);  // half a step towards 0 and 0.5 each
  CHECK(run.residuals[0] == 0.0);
  CHECK(run.refinement_ok);
  CHECK(run.measurable_ok);
}
