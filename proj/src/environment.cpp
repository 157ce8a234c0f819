#include "rcwalk/environment.hpp"

#include <limits>

namespace rcwalk {

ConductanceLaw ConductanceLaw::constant(double v) {
  if (v < 1.0) throw std::invalid_argument("constant law: value must be >= 1");
  return ConductanceLaw(Kind::Constant, v, 0);
}
ConductanceLaw ConductanceLaw::uniform(double lo, double hi) {
  if (lo < 1.0 || hi < lo) throw std::invalid_argument("uniform law: need 1 <= lo <= hi");
  return ConductanceLaw(Kind::Uniform, lo, hi);
}
ConductanceLaw ConductanceLaw::pareto(double shape) {
  if (shape <= 0.0) throw std::invalid_argument("pareto law: shape must be positive");
  return ConductanceLaw(Kind::Pareto, shape, 0);
}
ConductanceLaw ConductanceLaw::two_point(double big, double p_big) {
  if (big < 1.0) throw std::invalid_argument("two-point law: big value must be >= 1");
  if (p_big < 0.0 || p_big > 1.0) throw std::invalid_argument("two-point law: probability out of range");
  return ConductanceLaw(Kind::TwoPoint, big, p_big);
}

double ConductanceLaw::cdf(double x) const {
  switch (kind_) {
    case Kind::Constant: return x >= a_ ? 1.0 : 0.0;
    case Kind::Uniform:
      if (x < a_) return 0.0;
      if (x >= b_) return 1.0;
      return (x - a_) / (b_ - a_);
    case Kind::Pareto: return x < 1.0 ? 0.0 : 1.0 - std::pow(x, -a_);
    case Kind::TwoPoint:
      if (x < 1.0) return 0.0;
      if (x < a_) return 1.0 - b_;
      return 1.0;
  }
  return 0.0;
}

double ConductanceLaw::mean() const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Uniform: return 0.5 * (a_ + b_);
    case Kind::Pareto: return a_ > 1.0 ? a_ / (a_ - 1.0) : std::numeric_limits<double>::infinity();
    case Kind::TwoPoint: return b_ * a_ + (1.0 - b_);
  }
  return 1.0;
}

std::string ConductanceLaw::describe() const {
  switch (kind_) {
    case Kind::Constant: return "constant(" + std::to_string(a_) + ")";
    case Kind::Uniform: return "uniform(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
    case Kind::Pareto: return "pareto(" + std::to_string(a_) + ")";
    case Kind::TwoPoint: return "twopoint(" + std::to_string(a_) + ",p=" + std::to_string(b_) + ")";
  }
  return "?";
}

Environment::Environment(int d, std::uint64_t seed, ModelKind kind, ConductanceLaw law, double a,
                         ConductanceLaw site_law)
    : d_(d), seed_(seed), kind_(kind), law_(law), btm_a_(a), site_law_(site_law) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("environment: dimension out of range");
  edge_key_ = KeyedHash(seed).absorb(0x45444745ULL).digest();  // edge stream
  site_key_ = KeyedHash(seed).absorb(0x53495445ULL).digest();  // site stream, independent of edges
}

Environment Environment::rcm(int d, std::uint64_t seed, ConductanceLaw law) {
  return Environment(d, seed, ModelKind::RCM, law, 0.0, law);
}
Environment Environment::btm(int d, std::uint64_t seed, double a, ConductanceLaw site_law) {
  if (a < 0.0 || a > 1.0) throw std::invalid_argument("btm: exponent a must lie in [0,1]");
  return Environment(d, seed, ModelKind::BTM, site_law, a, site_law);
}

void Environment::check_coord(Coord c) {
  if (c <= -kCoordLimit || c >= kCoordLimit)
    throw CoordOutOfRange("environment: coordinate exceeds the 2^20 key-packing bound");
}

double Environment::edge_uniform(const Edge& e) const {
  KeyedHash h(edge_key_);
  for (int i = 0; i < d_; ++i) {
    check_coord(e.a[i]);
    h.absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(e.a[i])));
  }
  h.absorb(static_cast<std::uint64_t>(e.axis()));
  return u64_to_unit(h.digest());
}

double Environment::site_uniform(const LatticePoint& x) const {
  KeyedHash h(site_key_);
  for (int i = 0; i < d_; ++i) {
    check_coord(x[i]);
    h.absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(x[i])));
  }
  return u64_to_unit(h.digest());
}

double Environment::conductance_step(const LatticePoint& x, int axis, int dir) const {
  if (kind_ == ModelKind::BTM) {
    return pow_site(kappa(x), btm_a_) * pow_site(kappa(x.neighbor(axis, dir)), btm_a_);
  }
  // canonical endpoint = smaller along the axis (all other coords equal)
  KeyedHash h(edge_key_);
  for (int i = 0; i < d_; ++i) {
    Coord c = x[i];
    if (i == axis && dir < 0) c -= 1;
    check_coord(c);
    h.absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  }
  h.absorb(static_cast<std::uint64_t>(axis));
  return law_.sample(u64_to_unit(h.digest()));
}

double Environment::incident_conductances(const LatticePoint& x, double* w, double* self_weight) const {
  double total = 0;
  if (kind_ == ModelKind::BTM) {
    const double ka = pow_site(kappa(x), btm_a_);
    if (self_weight) *self_weight = ka;
    int j = 0;
    for (int i = 0; i < d_; ++i) {
      w[j] = pow_site(kappa(x.neighbor(i, +1)), btm_a_) * ka;
      total += w[j++];
      w[j] = pow_site(kappa(x.neighbor(i, -1)), btm_a_) * ka;
      total += w[j++];
    }
    return total;
  }
  if (self_weight) *self_weight = 1.0;
  if (law_.kind() == ConductanceLaw::Kind::Constant) {
    const double v = law_.param_a();
    for (int j = 0; j < 2 * d_; ++j) w[j] = v;
    return v * 2 * d_;
  }
  int j = 0;
  for (int i = 0; i < d_; ++i) {
    w[j] = conductance_step(x, i, +1);
    total += w[j++];
    w[j] = conductance_step(x, i, -1);
    total += w[j++];
  }
  return total;
}

std::string Environment::describe() const {
  std::string s = "d=" + std::to_string(d_) + " seed=" + std::to_string(seed_);
  if (kind_ == ModelKind::RCM) {
    s += " rcm law=" + law_.describe();
  } else {
    s += " btm a=" + std::to_string(btm_a_) + " kappa=" + site_law_.describe();
  }
  return s;
}

}  // namespace rcwalk
