#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcwalk/fractal.hpp"
#include "rcwalk/harness/config.hpp"
#include "rcwalk/potential.hpp"
#include "rcwalk/stats.hpp"
#include "rcwalk/walk.hpp"

namespace rcwalk {

struct BadBeta : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dimension experiment: per replica, walk to the exit of V(0, 2^n_max),
// bucket the integer-time skeleton range by shell, evaluate cover and
// packing measures over the alpha grid and estimate both dimensions.
struct DimensionReport {
  struct Row {
    int replica;
    double alpha;
    int shell;
    double nu, tau;
  };
  std::vector<Row> rows;
  std::vector<double> alpha_h, alpha_p;  // per replica
  MeanStderr mean_h, mean_p;
  std::vector<std::uint64_t> jumps;
  double runtime_s = 0;
};

DimensionReport run_dimension(const Config& cfg);

// Shell-indexed family of prescribed discrete Hausdorff dimension beta:
// inside shell n, the ceil(beta)-dimensional coordinate plane thinned to a
// sublattice of spacing 2^{ceil(n (1 - beta/j))}.
class TestSet {
 public:
  TestSet(double beta, int d, int n_shells);

  double beta() const { return beta_; }
  int shells() const { return n_shells_; }
  int plane_dim() const { return j_; }

  bool contains(const LatticePoint& p) const;
  std::vector<LatticePoint> shell_points(int n) const;
  std::vector<std::vector<LatticePoint>> family(int n_max) const;  // [i] -> shell i+1

 private:
  double beta_;
  int d_, j_, n_shells_;
  std::vector<Coord> spacing_;  // per shell, 1-based
};

inline TestSet make_test_set(double beta, int d, int n_shells) { return TestSet(beta, d, n_shells); }

// Hitting experiment against a test set: which shells the skeleton range
// meets, per replica, cross-referenced with the transience series.
struct HittingReport {
  std::vector<std::vector<std::uint8_t>> shell_hit;  // [replica][shell], 1-based shells
  std::vector<int> last_hit_shell;                   // per replica (0: never)
  std::vector<double> hit_fraction;                  // per shell over replicas
  WienerSeries wiener;
  bool critical_indeterminate = false;  // beta == d-2: the dichotomy is silent
  std::string classification;           // "transient-miss" / "recurrent-hit" / "critical - indeterminate"
  double runtime_s = 0;
};

HittingReport run_hitting(const Config& cfg, const TestSet& set);

}  // namespace rcwalk
