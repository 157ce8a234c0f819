#include "rcwalk/walk.hpp"

#include <algorithm>
#include <cmath>

namespace rcwalk {

// ---- distribution samplers (declared in rng.hpp) ---------------------------

double gamma_shape(RngStream& rng, double shape) {
  if (shape < 1.0) throw std::invalid_argument("gamma_shape: shape must be >= 1");
  // Marsaglia-Tsang
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal01(rng);
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::uint64_t binomial(RngStream& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial(rng, n, 1.0 - p);
  const double np = static_cast<double>(n) * p;
  if (n <= 64) {
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i)
      if (rng.uniform01() < p) ++k;
    return k;
  }
  if (np < 30.0) {
    // inverse CDF walk from k = 0
    const double odds = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
    double cdf = pmf;
    const double u = rng.uniform01();
    std::uint64_t k = 0;
    while (u > cdf && k < n) {
      pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
      cdf += pmf;
      ++k;
    }
    return k;
  }
  // large count: rounded normal, clamped
  const double sd = std::sqrt(np * (1.0 - p));
  const double x = np + sd * normal01(rng);
  if (x <= 0) return 0;
  if (x >= static_cast<double>(n)) return n;
  return static_cast<std::uint64_t>(std::llround(x));
}

// ---- engine -----------------------------------------------------------------

namespace {

inline bool inside_cube(const LatticePoint& p, Coord half) {
  for (int i = 0; i < p.dim(); ++i) {
    if (p[i] < -half || p[i] >= half) return false;
  }
  return true;
}

struct Incident {
  double w[2 * kMaxDim];
  double mu = 0;
  double self = 1;  // kappa_x^a for trap models
};

inline LatticePoint step(const LatticePoint& x, int idx) {
  return x.neighbor(idx >> 1, (idx & 1) ? -1 : +1);
}

inline int pick_weighted(const double* w, int m, double total, double u) {
  double r = u * total;
  for (int j = 0; j < m - 1; ++j) {
    r -= w[j];
    if (r < 0) return j;
  }
  return m - 1;
}

}  // namespace

WalkResult run_walk(const Environment& env, const LatticePoint& start, const StopRule& stop, RngStream& rng,
                    WalkObserver& obs, const WalkOptions& opt) {
  const int d = env.dim();
  if (start.dim() != d) throw std::invalid_argument("run_walk: start dimension mismatch");
  const int nn = 2 * d;
  const Coord cube_half = (stop.kind == StopRule::Kind::ExitCube) ? (Coord{1} << (stop.exit_n - 1)) : 0;
  if (stop.kind == StopRule::Kind::ExitCube && !inside_cube(start, cube_half))
    throw std::invalid_argument("run_walk: start lies outside the exit cube");

  const bool may_aggregate = opt.aggregate_excursions && stop.kind == StopRule::Kind::ExitCube;

  WalkResult res;
  LatticePoint x = start;
  double tv = 0, tc = 0;
  std::int64_t next_mark = 0;
  std::uint64_t jumps = 0, effort = 0, blocks = 0;
  obs.on_move(x, 0, 0);
  if (obs.wants_stop()) {
    res.reason = StopReason::ObserverStop;
    res.final_pos = x;
    return res;
  }

  Incident inc;
  for (;;) {
    if (stop.kind == StopRule::Kind::MaxJumps && jumps >= stop.jumps) {
      res.reason = StopReason::MaxJumpsReached;
      break;
    }
    if (effort >= opt.effort_budget)
      throw ResourceLimit("run_walk: effort budget exhausted before the stop rule triggered");

    inc.mu = env.incident_conductances(x, inc.w, &inc.self);
    double maxw = inc.w[0];
    for (int j = 1; j < nn; ++j) maxw = std::max(maxw, inc.w[j]);

    // Bounce-excursion aggregation around a dominant site/edge.
    if (may_aggregate) {
      const bool signal = (env.kind() == ModelKind::BTM)
                              ? inc.self >= opt.sticky_signal
                              : maxw >= opt.sticky_signal * (inc.mu - maxw);
      if (signal) {
        effort += 4;
        double mu_z[2 * kMaxDim], ebar = 0;
        bool ok = true;
        for (int j = 0; j < nn; ++j) {
          const LatticePoint z = step(x, j);
          if (!inside_cube(z, cube_half)) {
            ok = false;
            break;
          }
          mu_z[j] = env.total_conductance(z);
          ebar += inc.w[j] / inc.mu * (1.0 - inc.w[j] / mu_z[j]);
        }
        if (ok && 1.0 / ebar >= opt.min_expected_bounces) {
          // visits to the hub until escape ~ Geometric(ebar)
          const double ug = rng.uniform_open();
          const double mf = 1.0 + std::floor(std::log(ug) / std::log1p(-ebar));
          const std::uint64_t m_hub =
              (mf >= 9.0e18) ? std::uint64_t{1} << 62 : static_cast<std::uint64_t>(mf);
          // escape neighbor
          double pe[2 * kMaxDim];
          for (int j = 0; j < nn; ++j) pe[j] = inc.w[j] / inc.mu * (1.0 - inc.w[j] / mu_z[j]);
          const int jstar = pick_weighted(pe, nn, ebar, rng.uniform01());
          // non-final neighbor visits ~ Multinomial(m_hub - 1, p_j q_j / (1 - ebar))
          std::uint64_t m_z[2 * kMaxDim];
          std::uint64_t rem = m_hub - 1;
          double pleft = 1.0 - ebar;
          for (int j = 0; j < nn; ++j) {
            if (j == nn - 1) {
              m_z[j] = rem;  // last category absorbs the remainder
              break;
            }
            const double rj = inc.w[j] / inc.mu * (inc.w[j] / mu_z[j]);
            m_z[j] = (rem > 0 && pleft > 0) ? binomial(rng, rem, std::min(1.0, rj / pleft)) : 0;
            rem -= m_z[j];
            pleft -= rj;
          }
          m_z[jstar] += 1;  // the escape visit
          // sojourn times: sums of exponentials
          double t_state[1 + 2 * kMaxDim];
          t_state[0] = (m_hub == 1 ? rng.exponential(1.0) : gamma_shape(rng, static_cast<double>(m_hub))) / inc.mu;
          double dur = t_state[0], dur_c = t_state[0] * inc.mu;
          for (int j = 0; j < nn; ++j) {
            if (m_z[j] == 0) {
              t_state[1 + j] = 0;
              continue;
            }
            t_state[1 + j] =
                (m_z[j] == 1 ? rng.exponential(1.0) : gamma_shape(rng, static_cast<double>(m_z[j]))) / mu_z[j];
            dur += t_state[1 + j];
            dur_c += t_state[1 + j] * mu_z[j];
          }
          obs.on_sojourn(x, t_state[0]);
          for (int j = 0; j < nn; ++j) {
            if (m_z[j]) {
              obs.on_touch(step(x, j));
              obs.on_sojourn(step(x, j), t_state[1 + j]);
            }
          }
          // occupant at integer marks inside the block: sampled by sojourn
          // weight (exact in the long-block limit, O(1/m_hub) otherwise)
          if (static_cast<double>(next_mark) < tv + dur) {
            double tw[1 + 2 * kMaxDim];
            int occ[1 + 2 * kMaxDim], m = 0;
            for (int s = 0; s <= nn; ++s) {
              if (t_state[s] > 0) {
                tw[m] = t_state[s];
                occ[m++] = s;
              }
            }
            while (static_cast<double>(next_mark) < tv + dur) {
              const int s = occ[pick_weighted(tw, m, dur, rng.uniform01())];
              obs.on_integer_time(next_mark, s == 0 ? x : step(x, s - 1));
              ++next_mark;
              ++effort;
            }
          }
          // landing site: from the escape neighbor, away from the hub
          const LatticePoint zs = step(x, jstar);
          double wz[2 * kMaxDim];
          env.incident_conductances(zs, wz, nullptr);
          int back = 0;
          for (int j = 0; j < nn; ++j) {
            if (step(zs, j) == x) {
              back = j;
              break;
            }
          }
          const double total_out = std::max(0.0, mu_z[jstar] - wz[back]);
          wz[back] = 0;
          const int out = pick_weighted(wz, nn, total_out, rng.uniform01());
          tv += dur;
          tc += dur_c;
          jumps += 2 * m_hub;  // m_hub capped below 2^62, no overflow
          effort += 16;
          ++blocks;
          x = step(zs, out);
          obs.on_move(x, tv, tc);
          if (!inside_cube(x, cube_half)) {
            res.reason = StopReason::ExitedCube;
            break;
          }
          if (obs.wants_stop()) {
            res.reason = StopReason::ObserverStop;
            break;
          }
          continue;
        }
      }
    }

    // naive step: one shared uniform couples the two clocks
    const double u_hold = rng.uniform_open();
    const double hold_c = -std::log(u_hold);
    const double hold_v = hold_c / inc.mu;

    if (stop.kind == StopRule::Kind::Horizon && tv + hold_v > stop.horizon) {
      while (static_cast<double>(next_mark) <= stop.horizon) obs.on_integer_time(next_mark++, x);
      obs.on_sojourn(x, stop.horizon - tv);
      tc += (stop.horizon - tv) * inc.mu;
      tv = stop.horizon;
      res.reason = StopReason::HorizonReached;
      break;
    }
    while (static_cast<double>(next_mark) < tv + hold_v) obs.on_integer_time(next_mark++, x);
    obs.on_sojourn(x, hold_v);

    const int idx = pick_weighted(inc.w, nn, inc.mu, rng.uniform01());
    tv += hold_v;
    tc += hold_c;
    ++jumps;
    ++effort;
    x = step(x, idx);
    obs.on_move(x, tv, tc);
    if (stop.kind == StopRule::Kind::ExitCube && !inside_cube(x, cube_half)) {
      res.reason = StopReason::ExitedCube;
      break;
    }
    if (obs.wants_stop()) {
      res.reason = StopReason::ObserverStop;
      break;
    }
  }

  res.final_pos = x;
  res.t_vsrw = tv;
  res.t_csrw = tc;
  res.physical_jumps = jumps;
  res.blocks = blocks;
  return res;
}

namespace {

class Recorder : public WalkObserver {
 public:
  Trajectory traj;
  void on_move(const LatticePoint& p, double tv, double tc) override {
    traj.positions.push_back(p);
    traj.vsrw_times.push_back(tv);
    traj.csrw_times.push_back(tc);
  }
};

}  // namespace

Trajectory simulate(const Environment& env, const LatticePoint& start, const StopRule& stop, RngStream& rng,
                    const WalkOptions& opt) {
  Recorder rec;
  WalkOptions o = opt;
  o.aggregate_excursions = false;  // trajectories are jump-exact
  auto res = run_walk(env, start, stop, rng, rec, o);
  rec.traj.stop_reason = res.reason;
  rec.traj.stop_time = res.t_vsrw;
  return std::move(rec.traj);
}

LatticePoint next_site(const Environment& env, const LatticePoint& x, RngStream& rng) {
  double w[2 * kMaxDim];
  const double mu = env.incident_conductances(x, w, nullptr);
  const int idx = pick_weighted(w, 2 * env.dim(), mu, rng.uniform01());
  return step(x, idx);
}

double holding_time(const Environment& env, const LatticePoint& x, Clock clock, RngStream& rng) {
  if (clock == Clock::CSRW) return rng.exponential(1.0);
  return rng.exponential(1.0 / env.total_conductance(x));
}

// ---- RangeSet ----------------------------------------------------------------

void RangeSet::add(std::vector<std::vector<std::uint64_t>>& buckets, const LatticePoint& p) {
  const int n = shell_index(p);
  if (static_cast<std::size_t>(n) >= buckets.size()) buckets.resize(n + 1);
  buckets[n].push_back(morton_encode(p, n));
}

void RangeSet::add_full(const LatticePoint& p) { add(full_, p); }
void RangeSet::add_skeleton(const LatticePoint& p) { add(skel_, p); }

void RangeSet::seal() {
  if (sealed_) return;
  for (auto* side : {&full_, &skel_}) {
    for (auto& b : *side) {
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
    }
  }
  if (skel_.size() > full_.size()) full_.resize(skel_.size());
  sealed_ = true;
}

std::span<const std::uint64_t> RangeSet::full_keys(int n) const {
  static const std::vector<std::uint64_t> empty;
  if (n < 0 || static_cast<std::size_t>(n) >= full_.size()) return empty;
  return full_[n];
}
std::span<const std::uint64_t> RangeSet::skeleton_keys(int n) const {
  static const std::vector<std::uint64_t> empty;
  if (n < 0 || static_cast<std::size_t>(n) >= skel_.size()) return empty;
  return skel_[n];
}

std::vector<LatticePoint> RangeSet::full_points(int n) const {
  std::vector<LatticePoint> pts;
  for (auto k : full_keys(n)) pts.push_back(morton_decode(k, d_, n));
  return pts;
}
std::vector<LatticePoint> RangeSet::skeleton_points(int n) const {
  std::vector<LatticePoint> pts;
  for (auto k : skeleton_keys(n)) pts.push_back(morton_decode(k, d_, n));
  return pts;
}

std::int64_t RangeSet::full_size() const {
  std::int64_t s = 0;
  for (const auto& b : full_) s += static_cast<std::int64_t>(b.size());
  return s;
}
std::int64_t RangeSet::skeleton_size() const {
  std::int64_t s = 0;
  for (const auto& b : skel_) s += static_cast<std::int64_t>(b.size());
  return s;
}

RangeSet record_range(const Trajectory& traj) {
  RangeSet r(traj.dim());
  const auto& tvs = traj.vsrw_times;
  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    r.add_full(traj.positions[i]);
    double lo = tvs[i];
    double hi_excl;
    if (i + 1 < traj.positions.size()) {
      hi_excl = tvs[i + 1];
    } else if (traj.stop_reason == StopReason::HorizonReached) {
      hi_excl = std::nextafter(traj.stop_time, traj.stop_time + 1);  // inclusive of the horizon mark
    } else {
      continue;  // the dwell at the final position is not simulated
    }
    for (std::int64_t m = static_cast<std::int64_t>(std::ceil(lo)); m < hi_excl; ++m)
      r.add_skeleton(traj.positions[i]);
  }
  r.seal();
  return r;
}

std::int64_t sojourn_time(const Trajectory& traj, const PointSet& f) {
  std::int64_t count = 0;
  const auto& tvs = traj.vsrw_times;
  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    if (!f.count(traj.positions[i])) continue;
    const double lo = tvs[i];
    std::int64_t first = static_cast<std::int64_t>(std::ceil(lo));
    std::int64_t last_excl;
    if (i + 1 < traj.positions.size()) {
      last_excl = static_cast<std::int64_t>(std::ceil(tvs[i + 1]));
    } else if (traj.stop_reason == StopReason::HorizonReached) {
      last_excl = static_cast<std::int64_t>(std::floor(traj.stop_time)) + 1;
    } else {
      continue;
    }
    if (last_excl > first) count += last_excl - first;
  }
  return count;
}

double max_displacement(const Trajectory& traj, double t) {
  if (t > traj.stop_time)
    throw HorizonExceeded("max_displacement: queried time exceeds the trajectory horizon");
  const LatticePoint& start = traj.positions.front();
  double best = 0;
  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    if (traj.vsrw_times[i] > t) break;
    best = std::max(best, traj.positions[i].euclid_dist(start));
  }
  return best;
}

}  // namespace rcwalk
