#include "rcwalk/potential.hpp"

#include <Eigen/LU>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

#include "rcwalk/stats.hpp"

namespace rcwalk {

BoxIndex::BoxIndex(int d_, Coord r) : d(d_), radius(r), side(2 * static_cast<std::int64_t>(r)) {
  if (r < 1) throw std::invalid_argument("box: radius must be >= 1");
  ncells = 1;
  for (int i = 0; i < d; ++i) {
    ncells *= side;
    if (ncells > (std::int64_t{1} << 40)) throw std::invalid_argument("box: too many cells");
  }
}

LatticePoint BoxIndex::point(std::int64_t idx) const {
  LatticePoint p(d);
  for (int i = d - 1; i >= 0; --i) {
    p[i] = static_cast<Coord>(idx % side) - radius;
    idx /= side;
  }
  return p;
}

std::int64_t BoxIndex::stride(int axis) const {
  std::int64_t s = 1;
  for (int i = axis + 1; i < d; ++i) s *= side;
  return s;
}

namespace {

// Conductance Laplacian on the box with absorbing boundary, cached edge
// weights. apply() computes mu .* v - adjacency, with optional pinned cells
// treated as identity rows (their v entries stay zero throughout CG).
struct ConductanceGrid {
  BoxIndex box;
  std::vector<float> wplus[kMaxDim];  // edge weight cell -> cell + stride(axis)
  Eigen::VectorXd mu;
  Eigen::VectorXd inv_diag;
  const std::uint8_t* pinned = nullptr;

  ConductanceGrid(const Environment& env, Coord radius) : box(env.dim(), radius) {
    const int d = box.d;
    const std::int64_t n = box.ncells;
    mu.resize(n);
    const bool constant = env.kind() == ModelKind::RCM && env.law().kind() == ConductanceLaw::Kind::Constant;
    for (int a = 0; a < d; ++a) wplus[a].resize(n);
    if (constant) {
      const double v = env.law().param_a();
      for (int a = 0; a < d; ++a) std::fill(wplus[a].begin(), wplus[a].end(), static_cast<float>(v));
      mu.setConstant(2.0 * d * v);
    } else {
      for (std::int64_t i = 0; i < n; ++i) {
        const LatticePoint p = box.point(i);
        double total = 0;
        for (int a = 0; a < d; ++a) {
          const double w = env.conductance_step(p, a, +1);
          wplus[a][i] = static_cast<float>(w);
          total += w;
          const std::int64_t s = box.stride(a);
          const std::int64_t ca = (i / s) % box.side;
          total += (ca > 0) ? static_cast<double>(wplus[a][i - s]) : env.conductance_step(p, a, -1);
        }
        mu[i] = total;
      }
    }
    inv_diag = mu.cwiseInverse();
  }

  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    const std::int64_t n = box.ncells;
    out.array() = mu.array() * v.array();
    for (int a = 0; a < box.d; ++a) {
      const std::int64_t s = box.stride(a);
      const std::int64_t period = s * box.side;
      const float* w = wplus[a].data();
      const double* vv = v.data();
      double* oo = out.data();
      for (std::int64_t b = 0; b < n; b += period) {
        const std::int64_t end = b + period - s;
        for (std::int64_t i = b; i < end; ++i) {
          const double wi = w[i];
          oo[i] -= wi * vv[i + s];
          oo[i + s] -= wi * vv[i];
        }
      }
    }
    if (pinned) {
      for (std::int64_t i = 0; i < n; ++i) {
        if (pinned[i]) out[i] = v[i];
      }
    }
  }

  // total conductance of the edge from box cell of p along axis a, dir
  double edge_weight(const Environment& env, const LatticePoint& p, int a, int dir) const {
    return env.conductance_step(p, a, dir);
  }
};

struct CgOutcome {
  int iterations = 0;
  double rel_residual = 0;
};

CgOutcome pcg(const ConductanceGrid& g, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iter) {
  const std::int64_t n = g.box.ncells;
  x.setZero(n);
  Eigen::VectorXd r = b, z(n), p(n), ap(n);
  const double bnorm = b.norm();
  CgOutcome out;
  if (bnorm == 0) return out;
  z.array() = r.array() * g.inv_diag.array();
  if (g.pinned) {
    for (std::int64_t i = 0; i < n; ++i)
      if (g.pinned[i]) z[i] = r[i];
  }
  p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    g.apply(p, ap);
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    out.rel_residual = r.norm() / bnorm;
    if (out.rel_residual <= tol) return out;
    z.array() = r.array() * g.inv_diag.array();
    if (g.pinned) {
      for (std::int64_t i = 0; i < n; ++i)
        if (g.pinned[i]) z[i] = r[i];
    }
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return out;
}

int default_max_iter(const GreenSolveConfig& cfg, std::int64_t side) {
  return cfg.max_iter > 0 ? cfg.max_iter : static_cast<int>(40 * side + 400);
}

void require_transient(const Environment& env, const char* what) {
  if (env.dim() < 3) throw std::invalid_argument(std::string(what) + ": requires d >= 3 (transient walks)");
}

Coord required_radius(std::span<const LatticePoint> pts) {
  std::int64_t m = 0;
  for (const auto& p : pts) m = std::max(m, p.linf_norm());
  return static_cast<Coord>(2 * m);
}

}  // namespace

GreenField green_exact(const Environment& env, const LatticePoint& source, const GreenSolveConfig& cfg) {
  require_transient(env, "green_exact");
  ConductanceGrid grid(env, cfg.radius);
  const std::int64_t src = grid.box.index(source);
  if (src < 0) throw SourceOutsideBox("green_exact: source lies outside the truncation box");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(grid.box.ncells);
  b[src] = 1.0;
  GreenField field;
  field.box = grid.box;
  auto out = pcg(grid, b, field.values, cfg.tol, default_max_iter(cfg, grid.box.side));
  field.residual = out.rel_residual;
  field.iterations = out.iterations;
  if (out.rel_residual > cfg.tol)
    throw SolverDiverged("green_exact: residual " + std::to_string(out.rel_residual) + " above tolerance");
  return field;
}

namespace {

class SojournProbe : public WalkObserver {
 public:
  explicit SojournProbe(const LatticePoint& target) : target_(target) {}
  void on_sojourn(const LatticePoint& p, double t) override {
    if (p == target_) total_ += t;
  }
  double total() const { return total_; }

 private:
  LatticePoint target_;
  double total_ = 0;
};

class HitProbe : public WalkObserver {
 public:
  explicit HitProbe(const PointSet& a) : a_(&a) {}
  void on_move(const LatticePoint& p, double, double) override { check(p); }
  void on_touch(const LatticePoint& p) override { check(p); }
  bool wants_stop() const override { return hit_; }
  bool hit() const { return hit_; }

 private:
  void check(const LatticePoint& p) {
    if (!hit_ && a_->count(p)) hit_ = true;
  }
  const PointSet* a_;
  bool hit_ = false;
};

}  // namespace

McEstimate green_mc(const Environment& env, const LatticePoint& x, const LatticePoint& y,
                    std::int64_t replicas, int escape_shell, std::uint64_t seed) {
  require_transient(env, "green_mc");
  std::vector<double> samples(replicas);
  const StopRule stop = StopRule::exit_cube(escape_shell);
  for (std::int64_t r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::from(seed, 0x67726d63ULL, static_cast<std::uint64_t>(r));
    SojournProbe probe(y);
    run_walk(env, x, stop, rng, probe);
    samples[r] = probe.total();
  }
  auto m = mean_stderr(samples);
  return McEstimate{m.mean, m.stderr_of_mean, replicas};
}

McEstimate hitting_prob_mc(const Environment& env, const LatticePoint& x, const PointSet& a,
                           std::int64_t replicas, int escape_shell, std::uint64_t seed) {
  require_transient(env, "hitting_prob_mc");
  const StopRule stop = StopRule::exit_cube(escape_shell);
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < replicas; ++r) {
    RngStream rng = RngStream::from(seed, 0x68697463ULL, static_cast<std::uint64_t>(r));
    HitProbe probe(a);
    run_walk(env, x, stop, rng, probe);
    if (probe.hit()) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(replicas);
  const double se = std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(replicas)) /
                              static_cast<double>(replicas));
  return McEstimate{p, se, replicas};
}

namespace {

std::vector<LatticePoint> dedupe(std::span<const LatticePoint> a) {
  std::vector<LatticePoint> pts(a.begin(), a.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

CapacityResult capacity(const Environment& env, std::span<const LatticePoint> a, const GreenSolveConfig& cfg) {
  require_transient(env, "capacity");
  if (a.empty()) throw std::invalid_argument("capacity: empty set");
  CapacityResult res;
  res.set = dedupe(a);
  res.radius = cfg.radius;
  if (cfg.radius < required_radius(res.set))
    throw SourceOutsideBox("capacity: truncation radius below twice the farthest point");

  const int m = static_cast<int>(res.set.size());
  ConductanceGrid grid(env, cfg.radius);
  const int max_iter = default_max_iter(cfg, grid.box.side);
  res.green.resize(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid.box.ncells), u;
  for (int j = 0; j < m; ++j) {
    const std::int64_t src = grid.box.index(res.set[j]);
    rhs[src] = 1.0;
    auto out = pcg(grid, rhs, u, cfg.tol, max_iter);
    if (out.rel_residual > cfg.tol) throw SolverDiverged("capacity: green solve did not converge");
    rhs[src] = 0.0;
    for (int i = 0; i < m; ++i) res.green(i, j) = u[grid.box.index(res.set[i])];
  }
  res.green = 0.5 * (res.green + res.green.transpose()).eval();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(res.green);
  if (ldlt.info() != Eigen::Success) throw SingularGreenMatrix("capacity: Green submatrix not factorizable");
  res.charge = ldlt.solve(Eigen::VectorXd::Ones(m));
  res.residual = (res.green * res.charge - Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff();
  if (!(res.residual < 1e-6)) throw SingularGreenMatrix("capacity: equilibrium system solved poorly");
  res.cap = res.charge.sum();
  res.min_charge = res.charge.minCoeff();
  res.negative_charge = res.min_charge < -1e-8 * res.charge.cwiseAbs().maxCoeff();
  return res;
}

EquilibriumResult capacity_equilibrium(const Environment& env, std::span<const LatticePoint> a,
                                       const GreenSolveConfig& cfg) {
  require_transient(env, "capacity_equilibrium");
  if (a.empty()) throw std::invalid_argument("capacity_equilibrium: empty set");
  auto pts = dedupe(a);
  if (cfg.radius < required_radius(pts))
    throw SourceOutsideBox("capacity_equilibrium: truncation radius below twice the farthest point");

  ConductanceGrid grid(env, cfg.radius);
  const std::int64_t n = grid.box.ncells;
  std::vector<std::uint8_t> pin(n, 0);
  for (const auto& p : pts) pin[grid.box.index(p)] = 1;
  grid.pinned = pin.data();

  // u = 1 on A, harmonic elsewhere in the box, 0 outside: substitute
  // u = 1_A + u_hat and solve for u_hat on the complement.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const int d = grid.box.d;
  for (const auto& p : pts) {
    for (int axis = 0; axis < d; ++axis) {
      for (int dir : {+1, -1}) {
        const LatticePoint q = p.neighbor(axis, dir);
        const std::int64_t qi = grid.box.index(q);
        if (qi >= 0 && !pin[qi]) rhs[qi] += grid.edge_weight(env, p, axis, dir);
      }
    }
  }
  Eigen::VectorXd uhat;
  auto out = pcg(grid, rhs, uhat, cfg.tol, default_max_iter(cfg, grid.box.side));
  if (out.rel_residual > cfg.tol)
    throw SolverDiverged("capacity_equilibrium: potential solve did not converge");

  EquilibriumResult res;
  res.radius = cfg.radius;
  res.residual = out.rel_residual;
  res.charge.resize(static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // charge = conductance flux out of A: sum_z mu_yz (1 - u(z))
    double b = 0;
    for (int axis = 0; axis < d; ++axis) {
      for (int dir : {+1, -1}) {
        const LatticePoint q = pts[i].neighbor(axis, dir);
        const std::int64_t qi = grid.box.index(q);
        if (qi >= 0 && pin[qi]) continue;  // u = 1 there
        const double u = (qi >= 0) ? uhat[qi] : 0.0;
        b += grid.edge_weight(env, pts[i], axis, dir) * (1.0 - u);
      }
    }
    res.charge[static_cast<int>(i)] = b;
  }
  res.cap = res.charge.sum();
  res.negative_charge = res.charge.minCoeff() < -1e-8 * res.charge.cwiseAbs().maxCoeff();
  return res;
}

// ---- time-discretized capacity ------------------------------------------------

namespace {

Eigen::SparseMatrix<double> rate_matrix(const Environment& env, const BoxIndex& box) {
  const int d = box.d;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(box.ncells) * (2 * d + 1));
  for (std::int64_t i = 0; i < box.ncells; ++i) {
    const LatticePoint p = box.point(i);
    double total = 0;
    for (int axis = 0; axis < d; ++axis) {
      for (int dir : {+1, -1}) {
        const double w = env.conductance_step(p, axis, dir);
        total += w;
        const std::int64_t j = box.index(p.neighbor(axis, dir));
        if (j >= 0) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
      }
    }
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), -total);
  }
  Eigen::SparseMatrix<double> q(static_cast<int>(box.ncells), static_cast<int>(box.ncells));
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

// exp(t Q) v by scaling + truncated Taylor series.
Eigen::VectorXd expm_apply(const Eigen::SparseMatrix<double>& q, double t, Eigen::VectorXd v, double qnorm) {
  int squarings = 0;
  double tt = t;
  while (tt * qnorm > 0.5) {
    tt *= 0.5;
    ++squarings;
  }
  const int reps = 1 << squarings;
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::VectorXd sum = v, term = v;
    for (int k = 1; k <= 200; ++k) {
      term = (q * term) * (tt / k);
      sum += term;
      if (term.lpNorm<1>() <= 1e-13 * sum.lpNorm<1>()) break;
    }
    v = sum;
  }
  return v;
}

}  // namespace

DiscreteCapResult capacity_discrete_approx(const Environment& env, std::span<const LatticePoint> a, int mesh,
                                           const GreenSolveConfig& cfg, std::int64_t mc_replicas,
                                           std::uint64_t mc_seed) {
  require_transient(env, "capacity_discrete_approx");
  if (mesh < 0) throw std::invalid_argument("capacity_discrete_approx: mesh exponent must be >= 0");
  DiscreteCapResult res;
  res.mesh = mesh;
  if (a.empty()) return res;
  auto pts = dedupe(a);
  if (cfg.radius < required_radius(pts))
    throw SourceOutsideBox("capacity_discrete_approx: truncation radius below twice the farthest point");
  if (mesh == 0) {
    for (std::size_t i = 0; i < pts.size() && !res.mesh_warning; ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (pts[i].l1_dist(pts[j]) == 1) {
          res.mesh_warning = true;
          break;
        }
  }
  const BoxIndex box(env.dim(), cfg.radius);
  const double dt = std::ldexp(1.0, -mesh);

  if (box.ncells <= kDenseKernelLimit) {
    const int n = static_cast<int>(box.ncells);
    auto q = rate_matrix(env, box);
    double qnorm = 0;
    for (int i = 0; i < n; ++i) qnorm = std::max(qnorm, 2.0 * std::abs(q.coeff(i, i)));
    Eigen::MatrixXd kernel(n, n);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      e[j] = 1.0;
      kernel.col(j) = expm_apply(q, dt, e, qnorm);
      e[j] = 0.0;
    }
    // hitting probabilities w(x) = P_x(skeleton meets A before absorption)
    std::vector<std::uint8_t> in_a(n, 0);
    for (const auto& p : pts) in_a[box.index(p)] = 1;
    std::vector<int> comp;
    for (int i = 0; i < n; ++i)
      if (!in_a[i]) comp.push_back(i);
    const int nc = static_cast<int>(comp.size());
    Eigen::MatrixXd m(nc, nc);
    Eigen::VectorXd rhs(nc);
    for (int r = 0; r < nc; ++r) {
      double s = 0;
      for (const auto& p : pts) s += kernel(comp[r], box.index(p));
      rhs[r] = s;
      for (int c = 0; c < nc; ++c) m(r, c) = ((r == c) ? 1.0 : 0.0) - kernel(comp[r], comp[c]);
    }
    Eigen::VectorXd wc = m.partialPivLu().solve(rhs);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    for (int r = 0; r < nc; ++r) w[comp[r]] = wc[r];
    double cap_mesh = 0;
    for (const auto& p : pts) {
      const double ret = kernel.row(box.index(p)).dot(w);
      cap_mesh += std::max(0.0, 1.0 - ret);
    }
    res.value = cap_mesh / dt;
    return res;
  }

  // Monte Carlo fallback: watch the walk at multiples of dt.
  res.monte_carlo = true;
  double cap_mesh = 0;
  std::vector<double> w(2 * kMaxDim);
  PointSet aset(pts.begin(), pts.end());
  for (std::size_t yi = 0; yi < pts.size(); ++yi) {
    std::int64_t escapes = 0;
    for (std::int64_t r = 0; r < mc_replicas; ++r) {
      RngStream rng = RngStream::from(mc_seed, 0x6d636170ULL, (yi << 32) | static_cast<std::uint64_t>(r));
      LatticePoint x = pts[yi];
      double tv = 0, next_t = dt;
      bool returned = false;
      while (box.index(x) >= 0) {
        const double mu = env.incident_conductances(x, w.data(), nullptr);
        const double hold = rng.exponential(1.0) / mu;
        while (next_t < tv + hold) {
          if (aset.count(x)) {
            returned = true;
            break;
          }
          next_t += dt;
        }
        if (returned) break;
        tv += hold;
        double rr = rng.uniform01() * mu;
        int idx = 2 * env.dim() - 1;
        for (int j = 0; j < 2 * env.dim() - 1; ++j) {
          rr -= w[j];
          if (rr < 0) {
            idx = j;
            break;
          }
        }
        x = x.neighbor(idx >> 1, (idx & 1) ? -1 : +1);
      }
      if (!returned) ++escapes;
    }
    cap_mesh += static_cast<double>(escapes) / static_cast<double>(mc_replicas);
  }
  res.value = cap_mesh / dt;
  return res;
}

WienerSeries wiener_series(const Environment& env, const std::vector<std::vector<LatticePoint>>& per_shell,
                           double tol) {
  require_transient(env, "wiener_series");
  WienerSeries ws;
  const int d = env.dim();
  double partial = 0;
  for (std::size_t i = 0; i < per_shell.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    std::vector<LatticePoint> shell_pts;
    for (const auto& p : per_shell[i])
      if (shell_index(p) == n) shell_pts.push_back(p);
    double term = 0;
    if (!shell_pts.empty()) {
      GreenSolveConfig cfg;
      cfg.radius = Coord{1} << n;
      cfg.tol = tol;
      const double cap = capacity_equilibrium(env, shell_pts, cfg).cap;
      term = std::ldexp(cap, -n * (d - 2));
    }
    partial += term;
    ws.terms.push_back(term);
    ws.partials.push_back(partial);
  }
  // geometric decay fitted on the last half of the positive terms
  std::vector<double> xs, ys;
  const int nmax = static_cast<int>(ws.terms.size());
  for (int n = (nmax + 1) / 2; n <= nmax; ++n) {
    const double t = ws.terms[n - 1];
    if (t > 0) {
      xs.push_back(n);
      ys.push_back(std::log2(t));
    }
  }
  if (xs.size() >= 2) {
    ws.fitted_ratio = std::pow(2.0, fit_line(xs, ys).slope);
    ws.divergent_like = ws.fitted_ratio >= 0.8;
  } else {
    ws.fitted_ratio = 0;
    ws.divergent_like = false;
  }
  return ws;
}

}  // namespace rcwalk
