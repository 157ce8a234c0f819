#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "rcwalk/stats.hpp"
#include "rcwalk/walk.hpp"

using namespace rcwalk;

namespace {

Environment srw3(std::uint64_t seed = 1) { return Environment::rcm(3, seed, ConductanceLaw::constant(1)); }

}  // namespace

TEST_CASE("next_site: uniform neighbor frequencies under constant conductances") {
  const auto env = srw3();
  RngStream rng(42);
  const LatticePoint origin(3);
  std::map<std::uint64_t, int> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const LatticePoint y = next_site(env, origin, rng);
    CHECK(are_neighbors(origin, y));
    ++freq[y.hash()];
  }
  CHECK(freq.size() == 6);
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(p * (1 - p) / n);
  for (const auto& [k, c] : freq)
    CHECK(std::abs(static_cast<double>(c) / n - p) < 3 * sigma + 1e-12);
}

TEST_CASE("next_site: a dominant edge is taken with probability K/(K+5)") {
  // hunt for a seed whose origin has exactly one big incident edge
  const double big = 1e6;
  for (std::uint64_t seed = 0;; ++seed) {
    const auto env = Environment::rcm(3, seed, ConductanceLaw::two_point(big, 0.2));
    const LatticePoint origin(3);
    double w[6];
    env.incident_conductances(origin, w, nullptr);
    int nbig = 0, big_idx = -1;
    for (int j = 0; j < 6; ++j)
      if (w[j] > 1.5) {
        ++nbig;
        big_idx = j;
      }
    if (nbig != 1) continue;

    const LatticePoint target = origin.neighbor(big_idx >> 1, (big_idx & 1) ? -1 : +1);
    RngStream rng(7);
    const int n = 100000;
    int taken = 0;
    for (int i = 0; i < n; ++i)
      if (next_site(env, origin, rng) == target) ++taken;
    const double expect = big / (big + 5.0);
    const double sigma = std::sqrt(expect * (1 - expect) / n);
    CHECK(static_cast<double>(taken) / n >= expect - 3 * sigma - 1e-9);
    break;
  }
}

TEST_CASE("holding times: stated means, strict positivity") {
  const auto env = srw3();
  RngStream rng(11);
  const LatticePoint x(3);
  std::vector<double> cs(100000), vs(100000);
  for (auto& v : cs) {
    v = holding_time(env, x, Clock::CSRW, rng);
    CHECK(v > 0);
  }
  for (auto& v : vs) {
    v = holding_time(env, x, Clock::VSRW, rng);
    CHECK(v > 0);
  }
  CHECK(mean_stderr(cs).mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean_stderr(vs).mean == doctest::Approx(1.0 / 6.0).epsilon(0.012));  // 1/6 +- 0.002
}

TEST_CASE("simulate: trajectory invariants and stop rules") {
  const auto env = srw3();
  RngStream rng(5);

  // MaxJumps(0): the trajectory is just the start
  const auto t0 = simulate(env, LatticePoint{1, 0, 0}, StopRule::max_jumps(0), rng);
  CHECK(t0.positions.size() == 1);
  CHECK(t0.positions[0] == LatticePoint{1, 0, 0});
  CHECK(t0.vsrw_times[0] == 0.0);
  CHECK(t0.stop_reason == StopReason::MaxJumpsReached);

  // ExitCube: final position outside, all earlier strictly inside
  for (int n : {1, 3, 5}) {
    RngStream r2(100 + n);
    const auto traj = simulate(env, LatticePoint(3), StopRule::exit_cube(n), r2);
    CHECK(traj.stop_reason == StopReason::ExitedCube);
    const Cube cube = v_n(3, n);
    CHECK_FALSE(cube.contains(traj.positions.back()));
    for (std::size_t i = 0; i + 1 < traj.positions.size(); ++i) CHECK(cube.contains(traj.positions[i]));
  }

  // neighbor chain + strictly increasing clocks
  RngStream r3(17);
  const auto traj = simulate(env, LatticePoint(3), StopRule::max_jumps(5000), r3);
  CHECK(traj.jumps() == 5000);
  for (std::size_t i = 1; i < traj.positions.size(); ++i) {
    CHECK(are_neighbors(traj.positions[i - 1], traj.positions[i]));
    CHECK(traj.vsrw_times[i] > traj.vsrw_times[i - 1]);
    CHECK(traj.csrw_times[i] > traj.csrw_times[i - 1]);
  }

  // start outside the exit cube is a precondition violation
  CHECK_THROWS_AS(simulate(env, LatticePoint{9, 9, 9}, StopRule::exit_cube(2), rng), std::invalid_argument);
}

TEST_CASE("simulate: reproducibility under identical seeds") {
  const auto env = Environment::rcm(3, 77, ConductanceLaw::uniform(1, 5));
  RngStream a = RngStream::from(123, 1, 0), b = RngStream::from(123, 1, 0);
  const auto ta = simulate(env, LatticePoint(3), StopRule::max_jumps(2000), a);
  const auto tb = simulate(env, LatticePoint(3), StopRule::max_jumps(2000), b);
  REQUIRE(ta.positions.size() == tb.positions.size());
  for (std::size_t i = 0; i < ta.positions.size(); ++i) {
    CHECK(ta.positions[i] == tb.positions[i]);
    CHECK(ta.vsrw_times[i] == tb.vsrw_times[i]);
    CHECK(ta.csrw_times[i] == tb.csrw_times[i]);
  }
}

TEST_CASE("clock coupling: scaling conductances leaves the jump chain, divides VSRW time") {
  const double lam = 4.0;  // power of two: time ratio is exact in floating point
  const auto env1 = Environment::rcm(3, 5, ConductanceLaw::constant(1));
  const auto env2 = Environment::rcm(3, 5, ConductanceLaw::constant(lam));
  RngStream a = RngStream::from(9, 2, 0), b = RngStream::from(9, 2, 0);
  const auto t1 = simulate(env1, LatticePoint(3), StopRule::max_jumps(3000), a);
  const auto t2 = simulate(env2, LatticePoint(3), StopRule::max_jumps(3000), b);
  REQUIRE(t1.positions.size() == t2.positions.size());
  for (std::size_t i = 0; i < t1.positions.size(); ++i) {
    CHECK(t1.positions[i] == t2.positions[i]);  // identical jump chain
    CHECK(t2.vsrw_times[i] == doctest::Approx(t1.vsrw_times[i] / lam).epsilon(1e-14));
    CHECK(t2.csrw_times[i] == t1.csrw_times[i]);  // CSRW clock is scale free
  }
  // same jump chain, different VSRW speeds: identical full range
  const auto r1 = record_range(t1), r2 = record_range(t2);
  for (int n = 1; n <= std::max(r1.max_shell(), r2.max_shell()); ++n) {
    const auto k1 = r1.full_keys(n), k2 = r2.full_keys(n);
    REQUIRE(k1.size() == k2.size());
    for (std::size_t i = 0; i < k1.size(); ++i) CHECK(k1[i] == k2[i]);
  }
}

TEST_CASE("diffusive exit scaling: mean jumps to leave V(0,2^n) grow fourfold per shell") {
  const auto env = srw3();
  double prev_mean = 0;
  for (int n = 4; n <= 7; ++n) {
    std::vector<double> jumps;
    for (int r = 0; r < 400; ++r) {
      RngStream rng = RngStream::from(31, n, r);
      struct Counter : WalkObserver {
      } obs;
      const auto res = run_walk(env, LatticePoint(3), StopRule::exit_cube(n), rng, obs);
      jumps.push_back(static_cast<double>(res.physical_jumps));
    }
    const double mean = mean_stderr(jumps).mean;
    if (n > 4) {
      const double ratio = mean / prev_mean;
      CHECK(ratio == doctest::Approx(4.0).epsilon(0.075));  // 4.0 +- 0.3
    }
    prev_mean = mean;
  }
}

TEST_CASE("record_range: skeleton, full range, and counting rules") {
  const auto env = srw3();
  RngStream rng(13);
  const auto traj = simulate(env, LatticePoint(3), StopRule::at_horizon(500.5), rng);
  CHECK(traj.stop_reason == StopReason::HorizonReached);
  CHECK(traj.stop_time == 500.5);

  const RangeSet range = record_range(traj);
  CHECK(range.full_size() <= static_cast<std::int64_t>(traj.jumps()) + 1);
  CHECK(range.skeleton_size() <= range.full_size());

  // skeleton points are a subset of the full range
  for (int n = 1; n <= range.max_shell(); ++n) {
    const auto full = range.full_keys(n);
    for (const auto k : range.skeleton_keys(n)) {
      CHECK(std::binary_search(full.begin(), full.end(), k));
    }
  }

  // T(Z^d) over horizon T counts floor(T) + 1 integer times
  PointSet everything;
  for (std::size_t i = 0; i < traj.positions.size(); ++i) everything.insert(traj.positions[i]);
  CHECK(sojourn_time(traj, everything) == 501);

  // a set never visited scores zero
  PointSet far = {LatticePoint{400, 400, 400}};
  CHECK(sojourn_time(traj, far) == 0);

  // single-point trajectory: both ranges are {start}
  RngStream r0(1);
  const auto t0 = simulate(env, LatticePoint{2, 1, 0}, StopRule::max_jumps(0), r0);
  const auto rr = record_range(t0);
  CHECK(rr.full_size() == 1);
  CHECK(rr.full_points(shell_index(LatticePoint{2, 1, 0}))[0] == LatticePoint{2, 1, 0});
}

TEST_CASE("sojourn time in cubes scales like 2^(2k)") {
  const auto env = srw3();
  // mean T(V(0,2^k)) across k = 4..7: log2-ratio 2.0 +- 0.3 per shell step
  std::vector<double> means;
  for (int k = 4; k <= 7; ++k) {
    const Cube cube = v_n(3, k);
    std::vector<double> samples;
    for (int r = 0; r < 60; ++r) {
      RngStream rng = RngStream::from(99, k, r);
      class CubeCount : public WalkObserver {
       public:
        explicit CubeCount(const Cube& c) : c_(&c) {}
        void on_integer_time(std::int64_t, const LatticePoint& p) override {
          if (c_->contains(p)) ++n_;
        }
        double n_ = 0;
        const Cube* c_;
      } obs(cube);
      run_walk(env, LatticePoint(3), StopRule::exit_cube(k + 3), rng, obs);
      samples.push_back(obs.n_);
    }
    means.push_back(mean_stderr(samples).mean);
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    const double log_ratio = std::log2(means[i] / means[i - 1]);
    CHECK(log_ratio == doctest::Approx(2.0).epsilon(0.15));  // 2.0 +- 0.3
  }
}

TEST_CASE("max_displacement: monotone, zero at zero, diffusive order") {
  const auto env = srw3();
  RngStream rng(21);
  const auto traj = simulate(env, LatticePoint(3), StopRule::at_horizon(10000.0), rng);
  CHECK(max_displacement(traj, 0.0) == 0.0);
  double prev = 0;
  for (double t = 500; t <= 10000; t += 500) {
    const double m = max_displacement(traj, t);
    CHECK(m >= prev);
    prev = m;
  }
  CHECK_THROWS_AS(max_displacement(traj, 20000.0), HorizonExceeded);

  // median over replicas of |X_T| / sqrt(T) sits at diffusive order
  std::vector<double> ratios;
  for (int r = 0; r < 60; ++r) {
    RngStream rr = RngStream::from(77, 3, r);
    const auto t = simulate(env, LatticePoint(3), StopRule::at_horizon(10000.0), rr);
    ratios.push_back(max_displacement(t, 10000.0) / 100.0);
  }
  const double med = percentile(ratios, 0.5);
  CHECK(med > 0.3);
  CHECK(med < 3.0);
}

TEST_CASE("excursion aggregation matches naive simulation statistically") {
  // a trap model heavy enough to trigger blocks but still runnable naively
  const auto env = Environment::btm(3, 2718, 1.0, ConductanceLaw::pareto(1.0));
  const StopRule stop = StopRule::exit_cube(4);
  WalkOptions naive;
  naive.aggregate_excursions = false;
  WalkOptions fast;
  fast.aggregate_excursions = true;
  fast.sticky_signal = 16.0;       // aggressive trigger for the test
  fast.min_expected_bounces = 16.0;

  const int reps = 400;
  std::vector<double> jumps_naive, jumps_fast, time_naive, time_fast, range_naive, range_fast;
  std::uint64_t blocks = 0;
  for (int r = 0; r < reps; ++r) {
    RngStream ra = RngStream::from(1, 10, r), rb = RngStream::from(2, 20, r);
    RangeAccumulator acc_a(3);
    const auto res_a = run_walk(env, LatticePoint(3), stop, ra, acc_a, naive);
    jumps_naive.push_back(static_cast<double>(res_a.physical_jumps));
    time_naive.push_back(res_a.t_vsrw);
    range_naive.push_back(static_cast<double>(acc_a.take().full_size()));

    RangeAccumulator acc_b(3);
    const auto res_b = run_walk(env, LatticePoint(3), stop, rb, acc_b, fast);
    jumps_fast.push_back(static_cast<double>(res_b.physical_jumps));
    time_fast.push_back(res_b.t_vsrw);
    range_fast.push_back(static_cast<double>(acc_b.take().full_size()));
    blocks += res_b.blocks;
  }
  CHECK(blocks > 0);  // aggregation actually exercised
  // exit time, jump count and range size agree within 5 joint standard errors
  auto close = [](std::vector<double>& a, std::vector<double>& b) {
    const auto ma = mean_stderr(a), mb = mean_stderr(b);
    const double se = std::hypot(ma.stderr_of_mean, mb.stderr_of_mean);
    return std::abs(ma.mean - mb.mean) <= 5 * se;
  };
  CHECK(close(time_naive, time_fast));
  CHECK(close(range_naive, range_fast));
  CHECK(close(jumps_naive, jumps_fast));
}

TEST_CASE("effort budget trips as ResourceLimit") {
  const auto env = srw3();
  RngStream rng(3);
  WalkOptions opt;
  opt.effort_budget = 10;
  struct Nop : WalkObserver {
  } obs;
  CHECK_THROWS_AS(run_walk(env, LatticePoint(3), StopRule::exit_cube(10), rng, obs, opt), ResourceLimit);
}
