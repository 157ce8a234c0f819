#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcwalk/environment.hpp"
#include "rcwalk/walk.hpp"

namespace rcwalk {

struct SolverDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SourceOutsideBox : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularGreenMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GreenSolveConfig {
  int radius = 16;      // truncation box = V(0, 2*radius); absorbing outside
  double tol = 1e-10;   // relative residual of the conjugate-gradient solve
  int max_iter = 0;     // 0: derived from the box side
};

// Flat indexing of the truncation box V(0, 2R)^d.
struct BoxIndex {
  int d = 3;
  Coord radius = 0;          // coordinates in [-R, R)
  std::int64_t side = 0;     // 2R
  std::int64_t ncells = 0;

  BoxIndex() = default;
  BoxIndex(int d_, Coord r);
  std::int64_t index(const LatticePoint& p) const {
    std::int64_t idx = 0;
    for (int i = 0; i < d; ++i) {
      const std::int64_t c = static_cast<std::int64_t>(p[i]) + radius;
      if (c < 0 || c >= side) return -1;
      idx = idx * side + c;
    }
    return idx;
  }
  LatticePoint point(std::int64_t idx) const;
  std::int64_t stride(int axis) const;
};

// Truncated Green function for one source: the solution of
//   mu_x u(x) - sum_{y ~ x} mu_xy u(y) = 1{x = source}
// on the box with absorbing boundary, i.e. u(x) = expected total VSRW time
// at x before the walk from `source` leaves the box.
class GreenField {
 public:
  BoxIndex box;
  Eigen::VectorXd values;
  double residual = 0;
  int iterations = 0;

  double at(const LatticePoint& p) const {
    const std::int64_t i = box.index(p);
    return i < 0 ? 0.0 : values[i];
  }
};

GreenField green_exact(const Environment& env, const LatticePoint& source, const GreenSolveConfig& cfg);

struct McEstimate {
  double mean = 0;
  double stderr_of_mean = 0;
  std::int64_t replicas = 0;
};

// Monte Carlo occupation-time estimate of g(x,y): mean total VSRW time at y
// before the walk exits V(0, 2^escape_shell). Truncation bias is
// O(2^{-escape_shell (d-2)}).
McEstimate green_mc(const Environment& env, const LatticePoint& x, const LatticePoint& y,
                    std::int64_t replicas, int escape_shell, std::uint64_t seed);

// Fraction of walks from x that meet the set a before exiting
// V(0, 2^escape_shell).
McEstimate hitting_prob_mc(const Environment& env, const LatticePoint& x, const PointSet& a,
                           std::int64_t replicas, int escape_shell, std::uint64_t seed);

struct CapacityResult {
  std::vector<LatticePoint> set;
  Eigen::MatrixXd green;    // Green submatrix G_A (symmetrized)
  Eigen::VectorXd charge;   // equilibrium charge b, G_A b = 1 on A
  double cap = 0;           // sum of charges
  double min_charge = 0;
  double residual = 0;      // max |(G_A b)(x) - 1|
  int radius = 0;
  bool negative_charge = false;  // truncation artifact warning
};

// Capacity via the Green submatrix: one box solve per point of A, then the
// dense system G_A b = 1.
CapacityResult capacity(const Environment& env, std::span<const LatticePoint> a, const GreenSolveConfig& cfg);

struct EquilibriumResult {
  double cap = 0;
  Eigen::VectorXd charge;
  double residual = 0;
  int radius = 0;
  bool negative_charge = false;
};

// Same capacity from a single box solve: u = 1 on A, harmonic off A,
// absorbed at the boundary; the charge is the conductance flux out of A.
// Scales to shell-sized sets where the dense route cannot.
EquilibriumResult capacity_equilibrium(const Environment& env, std::span<const LatticePoint> a,
                                       const GreenSolveConfig& cfg);

struct DiscreteCapResult {
  double value = 0;  // 2^mesh * Cap^(mesh)(A)
  int mesh = 0;
  bool mesh_warning = false;  // mesh 0 with adjacent points in A
  bool monte_carlo = false;   // fallback path was used
};

// Time-discretized capacity: watch the walk only at multiples of 2^-mesh and
// sum the no-return probabilities over A, scaled by 2^mesh. Converges to
// capacity() from below as the mesh refines. Kernel by scaled Taylor matrix
// exponential for small boxes, Monte Carlo above `kDenseKernelLimit` cells.
inline constexpr std::int64_t kDenseKernelLimit = 5000;
DiscreteCapResult capacity_discrete_approx(const Environment& env, std::span<const LatticePoint> a, int mesh,
                                           const GreenSolveConfig& cfg, std::int64_t mc_replicas = 4000,
                                           std::uint64_t mc_seed = 1);

struct WienerSeries {
  std::vector<double> terms;     // terms[i] = 2^{-n(d-2)} Cap(A cap S_n), n = i+1
  std::vector<double> partials;
  bool divergent_like = false;
  double fitted_ratio = 0;  // geometric ratio fitted on the last half
};

// Transience series over a shell-indexed family (per_shell[i] lives in shell
// i+1). Per-shell capacities use the equilibrium route on V(0, 2^{n+1}).
WienerSeries wiener_series(const Environment& env, const std::vector<std::vector<LatticePoint>>& per_shell,
                           double tol = 1e-8);

}  // namespace rcwalk
