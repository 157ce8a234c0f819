#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcwalk/geometry.hpp"

namespace rcwalk {

// Gauge h: [0,1] -> [0,inf), continuous, increasing, h(0) = 0, doubling.
// Cover and packing costs are sums of h(side / 2^n) over chosen cubes.
class MeasureFunction {
 public:
  enum class Kind { Power, LogBoostedPower, LogDampedPower, Tabulated };

  // r^alpha, alpha > 0.
  static MeasureFunction power(double alpha);

  // r^{d-2} (log 1/r)^{3d(d-2)/2}, with the log factor frozen above
  // r0 = exp(-3d/2) so the function stays increasing on (0,1].
  static MeasureFunction log_boosted_power(int d);

  // r^{d-2} (log 1/r)^{-damping}. The log factor is frozen for r >= 1/2:
  // the raw formula blows up at r = 1, while every cover/packing cost is
  // evaluated at r <= 1/2, so values are unaffected and the function stays
  // in the admissible class on all of (0,1].
  // Default damping: smallest integer exceeding (3/log 2 + 1)(d-2), plus 1.
  static MeasureFunction log_damped_power(int d, double damping = 0.0);

  // Piecewise-linear through increasing (r, value) nodes, implicit (0,0).
  static MeasureFunction tabulated(std::vector<std::pair<double, double>> nodes);

  static double default_damping(int d);

  double operator()(double r) const;
  Kind kind() const { return kind_; }
  double alpha() const { return a_; }

 private:
  MeasureFunction(Kind k, double a, double b, double r0)
      : kind_(k), a_(a), b_(b), r0_(r0) {}
  Kind kind_;
  double a_ = 1, b_ = 0, r0_ = 0;
  std::vector<std::pair<double, double>> nodes_;
};

struct InsufficientShells : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- Covers (dyadic) ----------------------------------------------------

struct CoverResult {
  double value = 0;
  std::vector<std::pair<int, LatticePoint>> cubes;  // (level, anchor)
};

// Exact minimal dyadic-cover cost of A ∩ S_n: bottom-up tree DP,
// cost(cell) = min(h(side/2^n), sum over occupied children).
// Points outside S_n are ignored.
CoverResult nu_dyadic(std::span<const LatticePoint> a, int n, const MeasureFunction& h);

// Value-only DP over pre-encoded shell-n Morton keys (sorted, unique).
double nu_dyadic_value(std::span<const std::uint64_t> keys, int d, int n, const MeasureFunction& h);

// Sum of nu_dyadic over shells 1..n_max.
double m_h_partial(std::span<const LatticePoint> a, const MeasureFunction& h, int n_max);

// ---- Packings (semi-dyadic) ---------------------------------------------

struct PackResult {
  double value = 0;
  std::vector<std::pair<int, LatticePoint>> cubes;  // (level, center)
  bool exact = false;  // greedy certified optimal by exhaustive search
};

// Greedy disjoint packing by cubes \tilde V(x, 2^k), x in A ∩ S_n,
// k <= (1-eps) n, largest level first, then lexicographic anchor order.
// Lower-bounds the true packing value; for instances with <= 12 points an
// exhaustive search certifies optimality (exact flag).
PackResult tau_pack(std::span<const LatticePoint> a, int n, double eps, const MeasureFunction& h);

// Geometry-only greedy: the accepted cubes do not depend on h, so one pass
// serves every gauge. counts[k] = number of accepted level-k cubes.
std::vector<std::int64_t> pack_level_counts(std::span<const LatticePoint> a, int n, double eps);
double pack_value_from_counts(std::span<const std::int64_t> counts, int n, const MeasureFunction& h);

// Sum of tau_pack values over shells 1..n_max.
double p_h_partial(std::span<const LatticePoint> a, double eps, const MeasureFunction& h, int n_max);

// ---- Dimension estimators ------------------------------------------------

struct SlopeFit {
  double alpha = 0;
  double slope = 0;
  double slope_stderr = 0;
  int npts = 0;
};

struct DimEstimate {
  double alpha_hat = 0;
  bool no_crossing = false;  // alpha_hat then holds the grid boundary
  std::vector<SlopeFit> fits;
};

// values(i, j) = shell measure for alphas[i] at shells[j]. Fits the slope of
// log2(value) against n per alpha and interpolates the zero crossing.
// Shells with value <= 0 are skipped; every alpha needs >= 4 usable shells.
DimEstimate dim_from_shell_values(std::span<const double> alphas, std::span<const int> shells,
                                  const Eigen::MatrixXd& values);

// Convenience wrappers evaluating the measures on a point set.
DimEstimate dim_estimate(std::span<const LatticePoint> a, std::span<const double> alphas, int n_min, int n_max);
DimEstimate dimp_estimate(std::span<const LatticePoint> a, std::span<const double> alphas, int n_min, int n_max,
                          double eps = 0.3);

}  // namespace rcwalk
