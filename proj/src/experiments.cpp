#include "rcwalk/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

namespace rcwalk {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Runs fn(replica) for each replica, optionally across threads. Outputs are
// written into per-replica slots, so the merge order is fixed regardless of
// the thread count.
void for_each_replica(int replicas, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1) {
    for (int r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= replicas) return;
        try {
          fn(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

DimensionReport run_dimension(const Config& cfg) {
  cfg.validate();
  const Environment env = cfg.environment();
  if (env.dim() < 3)
    throw std::invalid_argument(
        "run_dimension: d <= 2 walks are recurrent and fill the whole lattice; nothing to estimate");
  const auto alphas = cfg.alpha_grid();
  const int n_min = cfg.n_min(), n_max = cfg.n_max();
  const int replicas = cfg.replicas();
  const StopRule stop = StopRule::exit_cube(n_max);
  const double eps = cfg.eps();
  WalkOptions wopt;
  wopt.effort_budget = static_cast<std::uint64_t>(cfg.get_int("walk.budget", std::int64_t{1} << 32));

  std::vector<int> shells;
  for (int n = n_min; n <= n_max; ++n) shells.push_back(n);

  DimensionReport rep;
  rep.alpha_h.resize(replicas);
  rep.alpha_p.resize(replicas);
  rep.jumps.resize(replicas);
  std::vector<std::vector<DimensionReport::Row>> rows(replicas);

  const double t0 = now_s();
  for_each_replica(replicas, cfg.threads(), [&](int r) {
    RngStream rng = RngStream::from(cfg.seed(), 0x7265706cULL, static_cast<std::uint64_t>(r));
    RangeAccumulator acc(env.dim());
    const WalkResult wres = run_walk(env, cfg.start(), stop, rng, acc, wopt);
    RangeSet range = acc.take();
    rep.jumps[r] = wres.physical_jumps;

    Eigen::MatrixXd nu(alphas.size(), shells.size()), tau(alphas.size(), shells.size());
    for (std::size_t j = 0; j < shells.size(); ++j) {
      const int n = shells[j];
      const auto keys = range.skeleton_keys(n);
      auto pts = range.skeleton_points(n);
      const auto counts = pack_level_counts(pts, n, eps);
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        const auto h = MeasureFunction::power(alphas[i]);
        nu(i, j) = nu_dyadic_value(keys, env.dim(), n, h);
        tau(i, j) = pack_value_from_counts(counts, n, h);
      }
    }
    const auto est_h = dim_from_shell_values(alphas, shells, nu);
    const auto est_p = dim_from_shell_values(alphas, shells, tau);
    rep.alpha_h[r] = est_h.alpha_hat;
    rep.alpha_p[r] = est_p.alpha_hat;
    for (std::size_t i = 0; i < alphas.size(); ++i)
      for (std::size_t j = 0; j < shells.size(); ++j)
        rows[r].push_back({r, alphas[i], shells[j], nu(i, j), tau(i, j)});
  });
  rep.runtime_s = now_s() - t0;

  for (auto& rr : rows) rep.rows.insert(rep.rows.end(), rr.begin(), rr.end());
  rep.mean_h = mean_stderr(rep.alpha_h);
  rep.mean_p = mean_stderr(rep.alpha_p);
  return rep;
}

TestSet::TestSet(double beta, int d, int n_shells) : beta_(beta), d_(d), n_shells_(n_shells) {
  if (!(beta > 0) || beta > d) throw BadBeta("test set: beta must lie in (0, d]");
  if (n_shells < 1) throw std::invalid_argument("test set: need at least one shell");
  j_ = static_cast<int>(std::ceil(beta - 1e-12));
  spacing_.assign(n_shells + 1, 1);
  for (int n = 1; n <= n_shells; ++n) {
    // clamped to n-1 so every shell keeps a representative (its inner face)
    const int e = static_cast<int>(std::ceil(n * (1.0 - beta / j_) - 1e-9));
    spacing_[n] = Coord{1} << std::clamp(e, 0, n - 1);
  }
}

bool TestSet::contains(const LatticePoint& p) const {
  if (p.dim() != d_) return false;
  for (int i = j_; i < d_; ++i)
    if (p[i] != 0) return false;
  const int n = shell_index(p);
  if (n > n_shells_) return false;
  const Coord s = spacing_[n];
  for (int i = 0; i < j_; ++i)
    if (p[i] % s != 0) return false;
  return true;
}

std::vector<LatticePoint> TestSet::shell_points(int n) const {
  if (n < 1 || n > n_shells_) return {};
  const Coord s = spacing_[n];
  const Coord half = Coord{1} << (n - 1);
  std::vector<Coord> axis_vals;
  for (Coord v = -((half) / s) * s; v < half; v += s) {
    if (v >= -half) axis_vals.push_back(v);
  }
  std::vector<LatticePoint> pts;
  LatticePoint p(d_);
  std::vector<std::size_t> idx(j_, 0);
  for (;;) {
    for (int i = 0; i < j_; ++i) p[i] = axis_vals[idx[i]];
    if (shell_index(p) == n) pts.push_back(p);
    int i = 0;
    for (; i < j_; ++i) {
      if (++idx[i] < axis_vals.size()) break;
      idx[i] = 0;
    }
    if (i == j_) break;
  }
  return pts;
}

std::vector<std::vector<LatticePoint>> TestSet::family(int n_max) const {
  std::vector<std::vector<LatticePoint>> fam;
  for (int n = 1; n <= std::min(n_max, n_shells_); ++n) fam.push_back(shell_points(n));
  return fam;
}

namespace {

class TestSetHitProbe : public WalkObserver {
 public:
  TestSetHitProbe(const TestSet& set, int n_shells) : set_(&set), hit_(n_shells + 2, 0) {}
  void on_integer_time(std::int64_t, const LatticePoint& p) override {
    if (set_->contains(p)) {
      const int n = shell_index(p);
      if (n < static_cast<int>(hit_.size())) hit_[n] = 1;
    }
  }
  const std::vector<std::uint8_t>& hits() const { return hit_; }

 private:
  const TestSet* set_;
  std::vector<std::uint8_t> hit_;
};

}  // namespace

HittingReport run_hitting(const Config& cfg, const TestSet& set) {
  cfg.validate();
  const Environment env = cfg.environment();
  if (env.dim() < 3) throw std::invalid_argument("run_hitting: requires d >= 3");
  const int n_max = cfg.n_max();
  const int replicas = cfg.replicas();
  const StopRule stop = StopRule::exit_cube(n_max);
  WalkOptions wopt;
  wopt.effort_budget = static_cast<std::uint64_t>(cfg.get_int("walk.budget", std::int64_t{1} << 32));

  HittingReport rep;
  rep.shell_hit.assign(replicas, {});
  rep.last_hit_shell.assign(replicas, 0);

  const double t0 = now_s();
  for_each_replica(replicas, cfg.threads(), [&](int r) {
    RngStream rng = RngStream::from(cfg.seed(), 0x68697472ULL, static_cast<std::uint64_t>(r));
    TestSetHitProbe probe(set, n_max);
    run_walk(env, cfg.start(), stop, rng, probe, wopt);
    rep.shell_hit[r] = probe.hits();
    for (int n = 1; n <= n_max; ++n)
      if (probe.hits()[n]) rep.last_hit_shell[r] = n;
  });

  rep.hit_fraction.assign(n_max + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    int c = 0;
    for (int r = 0; r < replicas; ++r) c += rep.shell_hit[r][n];
    rep.hit_fraction[n] = static_cast<double>(c) / replicas;
  }

  const int wiener_n = static_cast<int>(cfg.get_int("wiener.n_max", 7));
  rep.wiener = wiener_series(env, set.family(wiener_n), cfg.get_double("wiener.tol", 1e-8));

  rep.critical_indeterminate = std::abs(set.beta() - (env.dim() - 2)) < 1e-12;
  if (rep.critical_indeterminate) {
    rep.classification = "critical - indeterminate";
  } else {
    rep.classification = rep.wiener.divergent_like ? "recurrent-hit" : "transient-miss";
  }
  rep.runtime_s = now_s() - t0;
  return rep;
}

}  // namespace rcwalk
