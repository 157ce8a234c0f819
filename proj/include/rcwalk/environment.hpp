#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rcwalk/lattice.hpp"
#include "rcwalk/rng.hpp"

namespace rcwalk {

struct WrongModel : std::logic_error {
  using std::logic_error::logic_error;
};

// Edge/site weight law with support in [1, inf), sampled by inverse CDF
// from one uniform draw.
class ConductanceLaw {
 public:
  enum class Kind { Constant, Uniform, Pareto, TwoPoint };

  static ConductanceLaw constant(double v);
  static ConductanceLaw uniform(double lo, double hi);
  static ConductanceLaw pareto(double shape);               // support [1, inf)
  static ConductanceLaw two_point(double big, double p_big);  // values {1, big}

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  double sample(double u) const {  // u in [0,1)
    switch (kind_) {
      case Kind::Constant: return a_;
      case Kind::Uniform: return a_ + u * (b_ - a_);
      case Kind::Pareto: return std::pow(1.0 - u, -1.0 / a_);
      case Kind::TwoPoint: return (u < b_) ? a_ : 1.0;
    }
    return 1.0;
  }
  double cdf(double x) const;
  double mean() const;  // +inf when the law has no first moment

  std::string describe() const;

 private:
  ConductanceLaw(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_, b_;
};

enum class ModelKind { RCM, BTM };

inline double pow_site(double kappa, double a) {
  if (a == 1.0) return kappa;
  if (a == 0.0) return 1.0;
  return std::pow(kappa, a);
}

// Deterministic conductance field on the infinite lattice. Nothing is
// stored: every edge (RCM) or site (BTM) value is regenerated from
// (seed, canonical key), so instances are trivially shareable across
// threads and identical seeds give identical environments.
class Environment {
 public:
  static Environment rcm(int d, std::uint64_t seed, ConductanceLaw law);
  static Environment btm(int d, std::uint64_t seed, double a, ConductanceLaw site_law);

  int dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  ModelKind kind() const { return kind_; }
  const ConductanceLaw& law() const { return law_; }
  double btm_a() const { return btm_a_; }

  // mu_e for a canonical edge; always >= 1.
  double conductance(const Edge& e) const {
    if (kind_ == ModelKind::RCM) return law_.sample(edge_uniform(e));
    return pow_site(kappa(e.a), btm_a_) * pow_site(kappa(e.b), btm_a_);
  }
  double conductance(const LatticePoint& x, const LatticePoint& y) const {
    return conductance(canonical_edge(x, y));
  }

  // mu_x = sum of conductances over the 2d incident edges.
  double total_conductance(const LatticePoint& x) const {
    double s = 0;
    for (int i = 0; i < d_; ++i) {
      s += conductance_step(x, i, +1);
      s += conductance_step(x, i, -1);
    }
    return s;
  }

  // BTM site value kappa_x >= 1.
  double kappa(const LatticePoint& x) const {
    if (kind_ != ModelKind::BTM) throw WrongModel("kappa: environment is not a trap model");
    return site_law_.sample(site_uniform(x));
  }

  // Trap-model transition rate w_{xy} = kappa_x^{a-1} kappa_y^a.
  double btm_rate(const LatticePoint& x, const LatticePoint& y) const {
    if (kind_ != ModelKind::BTM) throw WrongModel("btm_rate: environment is not a trap model");
    if (!are_neighbors(x, y)) throw NotNeighbors("btm_rate: not lattice neighbors");
    return std::pow(kappa(x), btm_a_ - 1.0) * std::pow(kappa(y), btm_a_);
  }

  // Conductance of the edge from x one step along `axis` in direction `dir`,
  // without building the neighbor point. Hot path of the walk.
  double conductance_step(const LatticePoint& x, int axis, int dir) const;

  // Fills w[0..2d-1] with incident conductances in axis-major order
  // (+0,-0,+1,-1,...) and returns their sum. For BTM also leaves
  // kappa_x^a in *self_weight when requested.
  double incident_conductances(const LatticePoint& x, double* w, double* self_weight = nullptr) const;

  std::string describe() const;

 private:
  Environment(int d, std::uint64_t seed, ModelKind kind, ConductanceLaw law, double a, ConductanceLaw site_law);

  double edge_uniform(const Edge& e) const;
  double site_uniform(const LatticePoint& x) const;
  static void check_coord(Coord c);

  int d_;
  std::uint64_t seed_;
  ModelKind kind_;
  ConductanceLaw law_;       // edge law (RCM); for BTM equals site_law_
  double btm_a_;
  ConductanceLaw site_law_;  // kappa law (BTM)
  std::uint64_t edge_key_, site_key_;
};

}  // namespace rcwalk
