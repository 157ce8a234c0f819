#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "rcwalk/environment.hpp"
#include "rcwalk/geometry.hpp"

namespace rcwalk {

struct ResourceLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HorizonExceeded : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Clock { VSRW, CSRW };

struct StopRule {
  enum class Kind { ExitCube, Horizon, MaxJumps };
  Kind kind = Kind::MaxJumps;
  int exit_n = 0;          // ExitCube: stop on leaving V(0, 2^exit_n)
  double horizon = 0;      // Horizon: VSRW time
  std::uint64_t jumps = 0; // MaxJumps

  static StopRule exit_cube(int n) {
    if (n < 1) throw std::invalid_argument("exit_cube: shell exponent must be >= 1");
    return StopRule{Kind::ExitCube, n, 0, 0};
  }
  static StopRule at_horizon(double t) {
    if (t < 0) throw std::invalid_argument("horizon: time must be >= 0");
    return StopRule{Kind::Horizon, 0, t, 0};
  }
  static StopRule max_jumps(std::uint64_t m) { return StopRule{Kind::MaxJumps, 0, 0, m}; }
};

enum class StopReason { ExitedCube, HorizonReached, MaxJumpsReached, ObserverStop };

struct WalkOptions {
  // Effort budget: naive jumps count 1, aggregated excursion blocks a small
  // constant. Guards runaway runs; physical jump counts can legitimately
  // exceed any budget in heavy-tailed environments.
  std::uint64_t effort_budget = std::uint64_t{1} << 32;

  // Aggregate bounce excursions around dominant edges/sites into closed-form
  // blocks (geometric visit count, gamma sojourn times). Without this,
  // heavy-tailed trap models are unsimulatable: a site with kappa^a = K is
  // visited ~K consecutive times. Automatically off for MaxJumps and Horizon
  // stops and inside simulate(), which are jump-exact.
  bool aggregate_excursions = true;
  double sticky_signal = 256.0;        // 1-hop trigger
  double min_expected_bounces = 128.0; // 2-hop confirmation
};

// Receives the walk as it runs. Default implementations ignore everything.
class WalkObserver {
 public:
  virtual ~WalkObserver() = default;
  // Arrival at p; called for the start point with times (0,0).
  virtual void on_move(const LatticePoint& /*p*/, double /*t_vsrw*/, double /*t_csrw*/) {}
  // Site visited inside an aggregated excursion block (no per-visit times).
  virtual void on_touch(const LatticePoint& /*p*/) {}
  // Total VSRW time spent at p during one visit (or one block).
  virtual void on_sojourn(const LatticePoint& /*p*/, double /*t_vsrw*/) {}
  // Occupant at integer VSRW time t = 0, 1, 2, ...
  virtual void on_integer_time(std::int64_t /*t*/, const LatticePoint& /*p*/) {}
  // Polled after every arrival; return true to end the walk early.
  virtual bool wants_stop() const { return false; }
};

struct WalkResult {
  StopReason reason = StopReason::MaxJumpsReached;
  LatticePoint final_pos;
  double t_vsrw = 0, t_csrw = 0;  // clock values at the stop
  std::uint64_t physical_jumps = 0;
  std::uint64_t blocks = 0;  // aggregated excursions taken
};

WalkResult run_walk(const Environment& env, const LatticePoint& start, const StopRule& stop, RngStream& rng,
                    WalkObserver& obs, const WalkOptions& opt = {});

// ---- Materialized trajectories -------------------------------------------

struct Trajectory {
  std::vector<LatticePoint> positions;   // positions[0] = start
  std::vector<double> vsrw_times;        // arrival times, strictly increasing from 0
  std::vector<double> csrw_times;
  StopReason stop_reason = StopReason::MaxJumpsReached;
  double stop_time = 0;  // VSRW clock at the stop (== horizon for Horizon stops)

  int dim() const { return positions.empty() ? 0 : positions.front().dim(); }
  std::size_t jumps() const { return positions.empty() ? 0 : positions.size() - 1; }
};

// Jump-exact simulation (no excursion aggregation).
Trajectory simulate(const Environment& env, const LatticePoint& start, const StopRule& stop, RngStream& rng,
                    const WalkOptions& opt = {});

// One jump of the chain: neighbor y with probability mu_xy / mu_x.
LatticePoint next_site(const Environment& env, const LatticePoint& x, RngStream& rng);

// Exponential holding time at x: mean 1/mu_x (VSRW) or 1 (CSRW).
double holding_time(const Environment& env, const LatticePoint& x, Clock clock, RngStream& rng);

// ---- Ranges ----------------------------------------------------------------

// Shell-bucketed visited sets: the full range (every visited site) and the
// integer-time skeleton range. Buckets store shell-local Morton keys.
class RangeSet {
 public:
  explicit RangeSet(int d) : d_(d) {}

  void add_full(const LatticePoint& p);
  void add_skeleton(const LatticePoint& p);
  void seal();  // sort + dedupe every bucket

  int dim() const { return d_; }
  int max_shell() const { return static_cast<int>(full_.size()) - 1; }
  std::span<const std::uint64_t> full_keys(int n) const;
  std::span<const std::uint64_t> skeleton_keys(int n) const;
  std::vector<LatticePoint> full_points(int n) const;
  std::vector<LatticePoint> skeleton_points(int n) const;
  std::int64_t full_size() const;
  std::int64_t skeleton_size() const;

 private:
  static void add(std::vector<std::vector<std::uint64_t>>& buckets, const LatticePoint& p);
  int d_;
  bool sealed_ = false;
  std::vector<std::vector<std::uint64_t>> full_, skel_;
};

// Observer that accumulates a RangeSet while the walk runs.
class RangeAccumulator : public WalkObserver {
 public:
  explicit RangeAccumulator(int d) : range_(d) {}
  void on_move(const LatticePoint& p, double, double) override { range_.add_full(p); }
  void on_touch(const LatticePoint& p) override { range_.add_full(p); }
  void on_integer_time(std::int64_t, const LatticePoint& p) override { range_.add_skeleton(p); }
  RangeSet take() {
    range_.seal();
    return std::move(range_);
  }

 private:
  RangeSet range_;
};

RangeSet record_range(const Trajectory& traj);

using PointSet = std::unordered_set<LatticePoint, LatticePointHash>;

// Number of integer VSRW times n in [0, stop_time] whose occupant lies in f.
std::int64_t sojourn_time(const Trajectory& traj, const PointSet& f);

// sup over jump positions with vsrw_time <= t of |position - start|.
double max_displacement(const Trajectory& traj, double t);

}  // namespace rcwalk
