#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dentlab {

using Vec = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

// Malformed or inconsistent input. The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An exact enumeration was requested above its size caps, or a resource
// limit was hit. The CLI maps this to exit code 3.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
Vec vsub(const Vec& a, const Vec& b);
Vec vadd(const Vec& a, const Vec& b);
Vec vscale(const Vec& a, double s);
// p must be 1, 2 or +infinity.
double lp_norm(const Vec& a, double p);
double lp_dist(const Vec& a, const Vec& b, double p);

struct Functional {
  Vec coeffs;
  double operator()(const Vec& x) const { return dot(coeffs, x); }
};

struct LabeledPoint {
  std::string id;
  Vec x;
};

struct PointCloud {
  std::size_t dim = 0;
  std::vector<LabeledPoint> points;

  std::size_t size() const { return points.size(); }
  const Vec& operator[](std::size_t i) const { return points[i].x; }
  // Checks dimensions, finiteness and label uniqueness.
  void validate() const;
  double diameter(double p = 2.0) const;
};

struct Metric {
  enum class Kind { lp, table };
  Kind kind = Kind::lp;
  double p = 2.0;                 // 1, 2 or +infinity when kind == lp
  std::vector<Vec> rows;          // n x n when kind == table

  double dist(const Vec& a, const Vec& b) const;
  // Validates symmetry, zero diagonal and the triangle inequality on tables;
  // n is the expected table size (ignored for lp metrics).
  void validate(std::size_t n) const;
};

// A map sampled on a cloud. Every algorithm consumes only the induced
// pairwise distance value_dist(i, j), so explicit tables, products and
// rescaled metrics all flow through the same code paths.
struct ScoredMap {
  PointCloud domain;
  std::vector<Vec> values;        // one value vector per point; empty rows allowed for table metrics
  Metric metric;

  std::size_t size() const { return domain.size(); }
  double value_dist(std::size_t i, std::size_t j) const;
  // Scalar view for real-valued maps (values rows of length 1).
  double scalar(std::size_t i) const;
  bool real_valued() const;
  void validate() const;
};

struct Slice {
  Functional functional;
  double depth = 0.0;             // the t in "u(x) > sup - t"
  IndexSet members;               // indices into the domain cloud, ascending
};

struct Tolerances {
  double sep_tol = 1e-9;          // hull membership slack
  double osc_tol = 1e-9;          // diameter comparisons
  std::vector<double> t_schedule; // strictly decreasing slice depths
  std::size_t budget = 512;       // candidate directions per search
  std::size_t exact_cap = 0;      // 0: default size policy for exact enumeration

  static Tolerances defaults();
  void validate() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace dentlab
