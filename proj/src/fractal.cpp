#include "rcwalk/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rcwalk/stats.hpp"

namespace rcwalk {

// ---- MeasureFunction ------------------------------------------------------

MeasureFunction MeasureFunction::power(double alpha) {
  if (alpha <= 0) throw std::invalid_argument("measure function: alpha must be positive");
  return MeasureFunction(Kind::Power, alpha, 0, 0);
}

MeasureFunction MeasureFunction::log_boosted_power(int d) {
  if (d < 3) throw std::invalid_argument("log_boosted_power: requires d >= 3");
  const double a = d - 2;
  const double b = 1.5 * d * (d - 2);
  return MeasureFunction(Kind::LogBoostedPower, a, b, std::exp(-1.5 * d));
}

double MeasureFunction::default_damping(int d) {
  const double x = (3.0 / std::log(2.0) + 1.0) * (d - 2);
  return std::floor(x) + 1.0 + 1.0;  // smallest integer strictly above x, plus one
}

MeasureFunction MeasureFunction::log_damped_power(int d, double damping) {
  if (d < 3) throw std::invalid_argument("log_damped_power: requires d >= 3");
  if (damping <= 0) damping = default_damping(d);
  return MeasureFunction(Kind::LogDampedPower, d - 2, damping, 0.5);
}

MeasureFunction MeasureFunction::tabulated(std::vector<std::pair<double, double>> nodes) {
  std::sort(nodes.begin(), nodes.end());
  double last_r = 0, last_v = 0;
  for (auto& [r, v] : nodes) {
    if (r <= last_r || v < last_v) throw std::invalid_argument("tabulated measure: nodes must increase");
    last_r = r;
    last_v = v;
  }
  MeasureFunction f(Kind::Tabulated, 0, 0, 0);
  f.nodes_ = std::move(nodes);
  return f;
}

double MeasureFunction::operator()(double r) const {
  if (r <= 0) return 0;
  switch (kind_) {
    case Kind::Power:
      return std::pow(r, a_);
    case Kind::LogBoostedPower: {
      const double rr = std::min(r, r0_);
      return std::pow(r, a_) * std::pow(std::log(1.0 / rr), b_);
    }
    case Kind::LogDampedPower: {
      const double rr = std::min(r, r0_);
      return std::pow(r, a_) * std::pow(std::log(1.0 / rr), -b_);
    }
    case Kind::Tabulated: {
      double pr = 0, pv = 0;
      for (const auto& [nr, nv] : nodes_) {
        if (r <= nr) return pv + (nv - pv) * (r - pr) / (nr - pr);
        pr = nr;
        pv = nv;
      }
      return pv;
    }
  }
  return 0;
}

// ---- Cover DP --------------------------------------------------------------

namespace {

std::vector<std::uint64_t> shell_keys(std::span<const LatticePoint> a, int n) {
  std::vector<std::uint64_t> keys;
  for (const auto& p : a) {
    if (shell_index(p) == n) keys.push_back(morton_encode(p, n));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

struct CoverDp {
  std::span<const std::uint64_t> keys;
  int d, n;
  const MeasureFunction* h;
  double h_leaf;
  std::vector<std::pair<int, LatticePoint>>* out = nullptr;

  double solve(std::size_t lo, std::size_t hi, int level) {
    if (hi - lo == 1) {
      if (out) out->emplace_back(0, morton_decode(keys[lo], d, n));
      return h_leaf;
    }
    // split into occupied children (cells at level-1)
    const int shift = d * (level - 1);
    double split = 0;
    std::vector<std::pair<int, LatticePoint>> sub;
    auto* saved = out;
    if (out) out = &sub;
    std::size_t i = lo;
    while (i < hi) {
      const std::uint64_t id = keys[i] >> shift;
      std::size_t j = i + 1;
      while (j < hi && (keys[j] >> shift) == id) ++j;
      split += solve(i, j, level - 1);
      i = j;
    }
    out = saved;
    const double whole = (*h)(std::ldexp(1.0, level - n));
    if (whole <= split) {
      if (out) out->emplace_back(level, morton_cell_anchor(keys[lo], d, n, level));
      return whole;
    }
    if (out) out->insert(out->end(), sub.begin(), sub.end());
    return split;
  }
};

double cover_value(std::span<const std::uint64_t> keys, int d, int n, const MeasureFunction& h,
                   std::vector<std::pair<int, LatticePoint>>* out) {
  if (keys.empty()) return 0;
  CoverDp dp{keys, d, n, &h, h(std::ldexp(1.0, -n)), out};
  // roots: the 2^d level-(n-1) orthant cells of V_n; larger dyadic cubes
  // never straddle the coordinate hyperplanes, so per-orthant DP is exact
  const int shift = d * (n - 1);
  double total = 0;
  std::size_t i = 0;
  while (i < keys.size()) {
    const std::uint64_t id = keys[i] >> shift;
    std::size_t j = i + 1;
    while (j < keys.size() && (keys[j] >> shift) == id) ++j;
    total += dp.solve(i, j, n - 1);
    i = j;
  }
  return total;
}

}  // namespace

CoverResult nu_dyadic(std::span<const LatticePoint> a, int n, const MeasureFunction& h) {
  CoverResult res;
  auto keys = shell_keys(a, n);
  if (keys.empty()) return res;
  res.value = cover_value(keys, a.front().dim(), n, h, &res.cubes);
  return res;
}

double nu_dyadic_value(std::span<const std::uint64_t> keys, int d, int n, const MeasureFunction& h) {
  return cover_value(keys, d, n, h, nullptr);
}

double m_h_partial(std::span<const LatticePoint> a, const MeasureFunction& h, int n_max) {
  if (n_max < 1) throw std::invalid_argument("m_h_partial: need n_max >= 1");
  double total = 0;
  for (int n = 1; n <= n_max; ++n) total += nu_dyadic(a, n, h).value;
  return total;
}

// ---- Packing greedy ---------------------------------------------------------

namespace {

// Cell keys for packing bookkeeping: dyadic cells within the window
// V(0, 2^{n+1}) packed as (level, reduced coordinates).
struct CellKeys {
  int d, n;
  Coord offset;  // 2^n

  CellKeys(int d_, int n_) : d(d_), n(n_), offset(Coord{1} << n_) {
    if (5 + d * (n + 1) > 63) throw std::domain_error("pack: shell too deep for cell keys");
  }
  std::uint64_t key(int level, const LatticePoint& anchor) const {
    std::uint64_t k = static_cast<std::uint64_t>(level);
    for (int i = 0; i < d; ++i) {
      k = (k << (n + 1)) | static_cast<std::uint64_t>((anchor[i] + offset) >> level);
    }
    return k;
  }
  std::uint64_t ancestor_key(int level, const LatticePoint& anchor, int up_level) const {
    std::uint64_t k = static_cast<std::uint64_t>(up_level);
    for (int i = 0; i < d; ++i) {
      k = (k << (n + 1)) | static_cast<std::uint64_t>((anchor[i] + offset) >> up_level);
    }
    return k;
  }
};

struct PackGreedy {
  int d, n, kmax;
  CellKeys ck;
  std::vector<std::unordered_set<std::uint64_t>> cells;  // accepted region, by cell level

  PackGreedy(int d_, int n_, int kmax_) : d(d_), n(n_), kmax(kmax_), ck(d_, n_), cells(std::max(kmax_, 1)) {}

  bool blocked(int cell_level, const LatticePoint& anchor) const {
    for (int l = cell_level; l < static_cast<int>(cells.size()); ++l) {
      if (!cells[l].empty() && cells[l].count(ck.ancestor_key(cell_level, anchor, l))) return true;
    }
    return false;
  }

  // Cube of level k centered at c (level 0: the single point c). Returns
  // false when it meets the accepted region, else accepts and records it.
  bool try_accept(int k, const LatticePoint& c) {
    if (k == 0) {
      if (blocked(0, c)) return false;
      cells[0].insert(ck.key(0, c));
      return true;
    }
    const Coord half = Coord{1} << (k - 1);
    // the 2^d dyadic cells of level k-1 tiling [c - half, c + half)
    std::array<LatticePoint, 16> part;
    int m = 0;
    for (int mask = 0; mask < (1 << d); ++mask) {
      LatticePoint a = c;
      for (int i = 0; i < d; ++i) a[i] = c[i] + ((mask >> i) & 1 ? 0 : -half);
      if (blocked(k - 1, a)) return false;
      part[m++] = a;
    }
    for (int i = 0; i < m; ++i) cells[k - 1].insert(ck.key(k - 1, part[i]));
    return true;
  }

  bool point_covered(const LatticePoint& p) const { return blocked(0, p); }
};

int pack_kmax(int n, double eps) {
  int k = static_cast<int>(std::floor((1.0 - eps) * n + 1e-9));
  return std::clamp(k, 0, n - 1);
}

std::vector<LatticePoint> shell_points_sorted(std::span<const LatticePoint> a, int n) {
  std::vector<LatticePoint> pts;
  for (const auto& p : a)
    if (shell_index(p) == n) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<std::int64_t> pack_greedy_run(const std::vector<LatticePoint>& pts, int d, int n, int kmax,
                                          std::vector<std::pair<int, LatticePoint>>* out) {
  std::vector<std::int64_t> counts(kmax + 1, 0);
  if (pts.empty()) return counts;
  PackGreedy g(d, n, kmax);
  std::vector<LatticePoint> alive = pts;
  for (int k = kmax; k >= 0; --k) {
    for (const auto& p : alive) {
      const LatticePoint c = (k >= 1) ? closest_semi_dyadic(p, k).center : p;
      if (g.try_accept(k, c)) {
        ++counts[k];
        if (out) out->emplace_back(k, c);
      }
    }
    if (k > 0) {
      std::vector<LatticePoint> next;
      next.reserve(alive.size());
      for (const auto& p : alive)
        if (!g.point_covered(p)) next.push_back(p);
      alive.swap(next);
      if (alive.empty()) break;
    }
  }
  return counts;
}

// Exhaustive max-value packing for small instances; branch over one cube
// choice (or none) per anchor point with box-disjointness.
struct PackExhaustive {
  int n, kmax;
  const MeasureFunction* h;
  const std::vector<LatticePoint>* pts;
  std::vector<Cube> chosen;
  std::vector<double> level_val;
  double best = 0;

  void run(std::size_t i, double acc) {
    best = std::max(best, acc);
    if (i >= pts->size()) return;
    double optimistic = acc;
    for (std::size_t j = i; j < pts->size(); ++j) optimistic += level_val[kmax];
    if (optimistic <= best) return;
    for (int k = kmax; k >= 0; --k) {
      const LatticePoint c = (k >= 1) ? closest_semi_dyadic((*pts)[i], k).center : (*pts)[i];
      Cube box = (k >= 1) ? SemiDyadicCube{k, c}.box() : Cube{c, 1};
      bool ok = true;
      for (const auto& b : chosen) {
        if (b.intersects(box)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen.push_back(box);
      run(i + 1, acc + level_val[k]);
      chosen.pop_back();
    }
    run(i + 1, acc);  // no cube anchored at this point
  }
};

}  // namespace

std::vector<std::int64_t> pack_level_counts(std::span<const LatticePoint> a, int n, double eps) {
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("pack: eps must lie in (0,1)");
  const int kmax = pack_kmax(n, eps);
  auto pts = shell_points_sorted(a, n);
  const int d = a.empty() ? 1 : a.front().dim();
  return pack_greedy_run(pts, d, n, kmax, nullptr);
}

double pack_value_from_counts(std::span<const std::int64_t> counts, int n, const MeasureFunction& h) {
  double v = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k]) v += static_cast<double>(counts[k]) * h(std::ldexp(1.0, static_cast<int>(k) - n));
  }
  return v;
}

PackResult tau_pack(std::span<const LatticePoint> a, int n, double eps, const MeasureFunction& h) {
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("pack: eps must lie in (0,1)");
  PackResult res;
  const int kmax = pack_kmax(n, eps);
  auto pts = shell_points_sorted(a, n);
  if (pts.empty()) return res;
  const int d = pts.front().dim();
  auto counts = pack_greedy_run(pts, d, n, kmax, &res.cubes);
  res.value = pack_value_from_counts(counts, n, h);

  if (pts.size() <= 12) {
    PackExhaustive ex;
    ex.n = n;
    ex.kmax = kmax;
    ex.h = &h;
    ex.pts = &pts;
    ex.level_val.resize(kmax + 1);
    for (int k = 0; k <= kmax; ++k) ex.level_val[k] = h(std::ldexp(1.0, k - n));
    ex.run(0, 0.0);
    res.exact = res.value >= ex.best * (1.0 - 1e-12);
  }
  return res;
}

double p_h_partial(std::span<const LatticePoint> a, double eps, const MeasureFunction& h, int n_max) {
  if (n_max < 1) throw std::invalid_argument("p_h_partial: need n_max >= 1");
  double total = 0;
  for (int n = 1; n <= n_max; ++n) total += tau_pack(a, n, eps, h).value;
  return total;
}

// ---- Dimension estimators ----------------------------------------------------

DimEstimate dim_from_shell_values(std::span<const double> alphas, std::span<const int> shells,
                                  const Eigen::MatrixXd& values) {
  if (alphas.size() < 2) throw std::invalid_argument("dim estimate: need an alpha grid");
  DimEstimate est;
  est.fits.reserve(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < shells.size(); ++j) {
      const double v = values(static_cast<int>(i), static_cast<int>(j));
      if (v > 0) {
        xs.push_back(shells[j]);
        ys.push_back(std::log2(v));
      }
    }
    if (xs.size() < 4)
      throw InsufficientShells("dim estimate: fewer than 4 shells carry positive measure values");
    auto f = fit_line(xs, ys);
    est.fits.push_back(SlopeFit{alphas[i], f.slope, f.slope_stderr, f.n});
  }
  for (std::size_t i = 0; i + 1 < est.fits.size(); ++i) {
    const double s0 = est.fits[i].slope, s1 = est.fits[i + 1].slope;
    if (s0 >= 0 && s1 < 0) {
      est.alpha_hat = alphas[i] + (alphas[i + 1] - alphas[i]) * s0 / (s0 - s1);
      return est;
    }
  }
  est.no_crossing = true;
  est.alpha_hat = (est.fits.front().slope < 0) ? 0.0 : alphas.back();
  return est;
}

DimEstimate dim_estimate(std::span<const LatticePoint> a, std::span<const double> alphas, int n_min, int n_max) {
  std::vector<int> shells;
  for (int n = n_min; n <= n_max; ++n) shells.push_back(n);
  Eigen::MatrixXd values(alphas.size(), shells.size());
  const int d = a.empty() ? 1 : a.front().dim();
  for (std::size_t j = 0; j < shells.size(); ++j) {
    auto keys = shell_keys(a, shells[j]);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      values(static_cast<int>(i), static_cast<int>(j)) =
          nu_dyadic_value(keys, d, shells[j], MeasureFunction::power(alphas[i]));
    }
  }
  return dim_from_shell_values(alphas, shells, values);
}

DimEstimate dimp_estimate(std::span<const LatticePoint> a, std::span<const double> alphas, int n_min, int n_max,
                          double eps) {
  std::vector<int> shells;
  for (int n = n_min; n <= n_max; ++n) shells.push_back(n);
  Eigen::MatrixXd values(alphas.size(), shells.size());
  for (std::size_t j = 0; j < shells.size(); ++j) {
    auto counts = pack_level_counts(a, shells[j], eps);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      values(static_cast<int>(i), static_cast<int>(j)) =
          pack_value_from_counts(counts, shells[j], MeasureFunction::power(alphas[i]));
    }
  }
  return dim_from_shell_values(alphas, shells, values);
}

}  // namespace rcwalk
