#include "rcwalk/harness/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "rcwalk/stats.hpp"
#include "rcwalk/walk.hpp"

namespace rcwalk {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Timer {
  double t0 = now_s();
  double elapsed() const { return now_s() - t0; }
};

}  // namespace

CheckReport check_slln(double p, double a, double delta, int n, int trials, std::uint64_t seed) {
  if (p <= 0 || p >= 1 || delta <= 0) throw std::invalid_argument("check_slln: need p in (0,1), delta > 0");
  Timer timer;
  CheckReport rep;
  rep.name = "slln";
  double worst = 1.0;
  for (int t = 0; t < trials; ++t) {
    RngStream rng = RngStream::from(seed, 0x736c6c6eULL, static_cast<std::uint64_t>(t));
    std::int64_t s = 0;
    double min_ratio = 1.0;
    bool b_prev = rng.uniform01() >= std::min(1.0, a);  // B_0
    for (int i = 1; i <= n; ++i) {
      const bool a_i = b_prev && (rng.uniform01() < p);  // P(A_i | B_{i-1}) = p exactly
      if (a_i) ++s;
      b_prev = rng.uniform01() >= std::min(1.0, a * std::exp(-delta * i));
      if (2 * i >= n) min_ratio = std::min(min_ratio, static_cast<double>(s) / i);
    }
    worst = std::min(worst, min_ratio);
  }
  rep.fitted["min_tail_ratio"] = worst;
  rep.fitted["threshold"] = p / 4.0;
  rep.samples = static_cast<std::int64_t>(trials) * n;
  rep.pass = worst >= p / 4.0;
  rep.note = "threshold p/4 is a calibration heuristic, not a bound from theory";
  rep.runtime_s = timer.elapsed();
  return rep;
}

namespace {

// Position snapshots at fixed VSRW times, taken from one walk per replica.
class SnapshotProbe : public WalkObserver {
 public:
  explicit SnapshotProbe(const std::vector<double>& times) : times_(&times) {}
  void on_move(const LatticePoint& p, double tv, double) override {
    while (next_ < times_->size() && tv > (*times_)[next_]) snaps_.push_back(prev_), ++next_;
    prev_ = p;
  }
  // the walk ended at the horizon: the final position occupies the rest
  void finish(const LatticePoint& final_pos) {
    while (next_ < times_->size()) snaps_.push_back(final_pos), ++next_;
  }
  const std::vector<LatticePoint>& snaps() const { return snaps_; }

 private:
  const std::vector<double>* times_;
  std::size_t next_ = 0;
  LatticePoint prev_;
  std::vector<LatticePoint> snaps_;
};

}  // namespace

CheckReport check_heat_kernel(const Environment& env, std::vector<double> t_grid, std::int64_t replicas,
                              std::uint64_t seed) {
  Timer timer;
  std::sort(t_grid.begin(), t_grid.end());
  const int d = env.dim();
  const int nt = static_cast<int>(t_grid.size());
  const double t_top = t_grid.back();
  const StopRule stop = StopRule::at_horizon(t_top);

  // window half-sides ~ sqrt(t)/2: occupancy / volume estimates sup_y p_t
  std::vector<Coord> win(nt);
  std::vector<double> vol(nt);
  for (int k = 0; k < nt; ++k) {
    win[k] = std::max<Coord>(1, static_cast<Coord>(std::llround(0.5 * std::sqrt(t_grid[k]))));
    vol[k] = std::pow(2.0 * win[k], d);
  }
  std::vector<std::int64_t> in_window(nt, 0);
  std::unordered_map<LatticePoint, std::int64_t, LatticePointHash> top_counts;

  for (std::int64_t r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::from(seed, 0x68656174ULL, static_cast<std::uint64_t>(r));
    SnapshotProbe probe(t_grid);
    const auto res = run_walk(env, LatticePoint(d), stop, rng, probe);
    probe.finish(res.final_pos);
    for (int k = 0; k < nt; ++k) {
      if (probe.snaps()[k].linf_norm() < win[k]) ++in_window[k];
    }
    ++top_counts[probe.snaps()[nt - 1]];
  }

  // sup-density fit: log p_hat vs log t
  std::vector<double> xs, ys;
  for (int k = 0; k < nt; ++k) {
    const double p_hat = static_cast<double>(in_window[k]) / (vol[k] * static_cast<double>(replicas));
    if (p_hat > 0) {
      xs.push_back(std::log(t_grid[k]));
      ys.push_back(std::log(p_hat));
    }
  }
  const auto sup_fit = fit_line(xs, ys);

  // radial Gaussian profile at the largest t: bin by |y|^2 / t
  const int nbins = 12;
  const double qmax = 9.0;
  std::vector<double> bin_count(nbins, 0), bin_sites(nbins, 0);
  {
    const Coord r_max = static_cast<Coord>(std::ceil(3.0 * std::sqrt(t_top)));
    std::vector<Coord> c(d, -r_max);
    for (;;) {
      double q = 0;
      for (int i = 0; i < d; ++i) q += static_cast<double>(c[i]) * c[i];
      q /= t_top;
      if (q < qmax) bin_sites[static_cast<int>(q / qmax * nbins)] += 1;
      int i = 0;
      for (; i < d; ++i) {
        if (++c[i] <= r_max) break;
        c[i] = -r_max;
      }
      if (i == d) break;
    }
  }
  for (const auto& [p, cnt] : top_counts) {
    double q = 0;
    for (int i = 0; i < d; ++i) q += static_cast<double>(p[i]) * p[i];
    q /= t_top;
    if (q < qmax) bin_count[static_cast<int>(q / qmax * nbins)] += static_cast<double>(cnt);
  }
  std::vector<double> qx, qy;
  for (int b = 0; b < nbins; ++b) {
    if (bin_count[b] >= 50 && bin_sites[b] > 0) {
      qx.push_back((b + 0.5) * qmax / nbins);
      qy.push_back(std::log(bin_count[b] / bin_sites[b] / static_cast<double>(replicas)));
    }
  }
  LinearFit prof_fit;
  if (qx.size() >= 3) prof_fit = fit_line(qx, qy);

  CheckReport rep;
  rep.name = "heat_kernel";
  rep.fitted["sup_slope"] = sup_fit.slope;
  rep.fitted["sup_slope_stderr"] = sup_fit.slope_stderr;
  rep.fitted["sup_slope_target"] = -0.5 * d;
  rep.fitted["profile_slope"] = prof_fit.slope;
  rep.fitted["profile_r2"] = prof_fit.r2;
  rep.samples = replicas;
  rep.pass = std::abs(sup_fit.slope + 0.5 * d) <= 0.3 && prof_fit.r2 >= 0.9 && prof_fit.slope < 0;
  rep.runtime_s = timer.elapsed();
  return rep;
}

namespace {

class MaxDispProbe : public WalkObserver {
 public:
  explicit MaxDispProbe(const LatticePoint& start) : start_(start) {}
  void on_move(const LatticePoint& p, double, double) override {
    best_ = std::max(best_, p.euclid_dist(start_));
  }
  void on_touch(const LatticePoint& p) override { best_ = std::max(best_, p.euclid_dist(start_)); }
  double best() const { return best_; }

 private:
  LatticePoint start_;
  double best_ = 0;
};

}  // namespace

CheckReport check_maximal(const Environment& env, double t_horizon, std::vector<double> lambdas,
                          std::int64_t replicas, std::uint64_t seed) {
  Timer timer;
  std::sort(lambdas.begin(), lambdas.end());
  if (lambdas.front() <= 0 || lambdas.back() >= 0.5 * std::sqrt(t_horizon))
    throw std::invalid_argument("check_maximal: lambda grid outside (0, sqrt(T)/2)");
  const double rt = std::sqrt(t_horizon);
  const StopRule stop = StopRule::at_horizon(t_horizon);
  std::vector<double> sups(replicas);
  for (std::int64_t r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::from(seed, 0x6d617869ULL, static_cast<std::uint64_t>(r));
    MaxDispProbe probe(LatticePoint(env.dim()));
    run_walk(env, LatticePoint(env.dim()), stop, rng, probe);
    sups[r] = probe.best();
  }
  std::vector<double> xs, ys, tails;
  bool monotone = true;
  double prev_tail = 1.0;
  for (const double lam : lambdas) {
    std::int64_t c = 0;
    for (const double s : sups)
      if (s > lam * rt) ++c;
    const double tail = static_cast<double>(c) / static_cast<double>(replicas);
    tails.push_back(tail);
    if (tail > prev_tail + 1e-12) monotone = false;
    prev_tail = tail;
    if (tail > 0) {
      xs.push_back(lam * lam);
      ys.push_back(std::log(tail));
    }
  }
  CheckReport rep;
  rep.name = "maximal";
  if (xs.size() >= 3) {
    const auto f = fit_line(xs, ys);
    rep.fitted["lambda2_slope"] = f.slope;
    rep.fitted["lambda2_slope_stderr"] = f.slope_stderr;
    rep.fitted["r2"] = f.r2;
    rep.pass = f.slope < 0 && f.r2 >= 0.9 && monotone;
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    rep.fitted["tail_" + std::to_string(lambdas[i])] = tails[i];
  rep.samples = replicas;
  rep.runtime_s = timer.elapsed();
  return rep;
}

namespace {

// integer marks falling inside the cube V(0, 2^k)
class CubeSojournProbe : public WalkObserver {
 public:
  explicit CubeSojournProbe(Coord half) : half_(half) {}
  void on_integer_time(std::int64_t, const LatticePoint& p) override {
    for (int i = 0; i < p.dim(); ++i) {
      if (p[i] < -half_ || p[i] >= half_) return;
    }
    ++count_;
  }
  std::int64_t count() const { return count_; }

 private:
  Coord half_;
  std::int64_t count_ = 0;
};

std::vector<LatticePoint> sojourn_starts(int d, int k) {
  std::vector<LatticePoint> starts;
  starts.emplace_back(d);  // center
  const Coord off = std::max<Coord>(1, Coord{1} << (k - 2));
  for (int mask = 0; mask < (1 << d); ++mask) {
    LatticePoint p(d);
    for (int i = 0; i < d; ++i) p[i] = ((mask >> i) & 1) ? off : -off;
    starts.push_back(p);
  }
  return starts;
}

}  // namespace

CheckReport check_sojourn_tail(const Environment& env, int k_min, int k_max, std::vector<double> lambdas,
                               std::int64_t replicas, std::uint64_t seed) {
  Timer timer;
  const int d = env.dim();
  CheckReport rep;
  rep.name = "sojourn_tail";

  std::vector<double> ratio_per_k;
  const int k_tail = std::max(k_min, std::min(k_max, 5));
  std::vector<double> tail_samples;
  double tail_m_hat = 0;

  for (int k = k_min; k <= k_max; ++k) {
    const auto starts = sojourn_starts(d, k);
    const StopRule stop = StopRule::exit_cube(k + 3);
    const std::int64_t per_start =
        std::max<std::int64_t>(1, (k == k_tail ? 8 * replicas : replicas) / static_cast<std::int64_t>(starts.size()));
    std::vector<double> means;
    std::vector<double> all;
    for (std::size_t s = 0; s < starts.size(); ++s) {
      std::vector<double> samples(per_start);
      for (std::int64_t r = 0; r < per_start; ++r) {
        RngStream rng = RngStream::from(seed, 0x736f6a6fULL,
                                        (static_cast<std::uint64_t>(k) << 40) |
                                            (static_cast<std::uint64_t>(s) << 32) | static_cast<std::uint64_t>(r));
        CubeSojournProbe probe(Coord{1} << (k - 1));
        run_walk(env, starts[s], stop, rng, probe);
        samples[r] = static_cast<double>(probe.count());
      }
      means.push_back(mean_stderr(samples).mean);
      all.insert(all.end(), samples.begin(), samples.end());
    }
    const double m_hat = *std::max_element(means.begin(), means.end());
    ratio_per_k.push_back(mean_stderr(all).mean / std::ldexp(1.0, 2 * k));
    rep.fitted["mean_ratio_k" + std::to_string(k)] = ratio_per_k.back();
    if (k == k_tail) {
      tail_samples = all;
      tail_m_hat = m_hat;
      rep.fitted["m_hat"] = m_hat;
    }
  }

  // exponential tail of T / M_hat
  std::vector<double> xs, ys;
  for (const double lam : lambdas) {
    std::int64_t c = 0;
    for (const double t : tail_samples)
      if (t >= lam * tail_m_hat) ++c;
    const double tail = static_cast<double>(c) / static_cast<double>(tail_samples.size());
    if (tail > 0 && tail < 1) {
      xs.push_back(lam);
      ys.push_back(std::log(tail));
    }
  }
  bool tail_ok = false;
  if (xs.size() >= 3) {
    const auto f = fit_line(xs, ys);
    rep.fitted["tail_slope"] = f.slope;
    rep.fitted["tail_slope_stderr"] = f.slope_stderr;
    rep.fitted["tail_r2"] = f.r2;
    tail_ok = f.slope < 0 && f.r2 >= 0.9;
  }
  const auto [lo, hi] = std::minmax_element(ratio_per_k.begin(), ratio_per_k.end());
  const bool bounded = *hi <= 2.0 * *lo;
  rep.fitted["ratio_spread"] = *hi / *lo;
  rep.samples = static_cast<std::int64_t>(tail_samples.size());
  rep.pass = tail_ok && bounded;
  rep.runtime_s = timer.elapsed();
  return rep;
}

CheckReport check_lil(const Environment& env, int t_exp_min, int t_exp_max, std::int64_t replicas,
                      std::uint64_t seed) {
  Timer timer;
  if (t_exp_min < 4 || t_exp_max <= t_exp_min)
    throw std::invalid_argument("check_lil: need 4 <= t_exp_min < t_exp_max");
  const int d = env.dim();
  std::vector<double> t_grid;
  for (int e = t_exp_min; e <= t_exp_max; ++e) t_grid.push_back(std::ldexp(1.0, e));
  const StopRule stop = StopRule::at_horizon(t_grid.back());

  // max displacement at each dyadic checkpoint, per replica
  class CheckpointProbe : public WalkObserver {
   public:
    CheckpointProbe(const LatticePoint& start, const std::vector<double>& ts)
        : start_(start), ts_(&ts), best_at_(ts.size(), 0) {}
    void on_move(const LatticePoint& p, double tv, double) override {
      while (next_ < ts_->size() && tv > (*ts_)[next_]) {
        best_at_[next_] = running_;
        ++next_;
      }
      running_ = std::max(running_, p.euclid_dist(start_));
    }
    void finish() {
      while (next_ < ts_->size()) best_at_[next_++] = running_;
    }
    const std::vector<double>& best_at() const { return best_at_; }

   private:
    LatticePoint start_;
    const std::vector<double>* ts_;
    std::vector<double> best_at_;
    double running_ = 0;
    std::size_t next_ = 0;
  };

  std::vector<std::vector<double>> ratios(t_grid.size());
  for (std::int64_t r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::from(seed, 0x6c696c21ULL, static_cast<std::uint64_t>(r));
    CheckpointProbe probe(LatticePoint(d), t_grid);
    run_walk(env, LatticePoint(d), stop, rng, probe);
    probe.finish();
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      const double t = t_grid[k];
      ratios[k].push_back(probe.best_at()[k] / std::sqrt(t * std::log(std::log(t))));
    }
  }
  CheckReport rep;
  rep.name = "lil";
  std::vector<double> p95;
  for (std::size_t k = 0; k < t_grid.size(); ++k) p95.push_back(percentile(ratios[k], 0.95));
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    rep.fitted["p95_t2e" + std::to_string(t_exp_min + static_cast<int>(k))] = p95[k];
  rep.fitted["p95_first"] = p95.front();
  rep.fitted["p95_last"] = p95.back();
  rep.samples = replicas;
  rep.pass = std::isfinite(p95.back()) && p95.back() <= p95.front() && p95.back() > 0;
  rep.runtime_s = timer.elapsed();
  return rep;
}

}  // namespace rcwalk
