#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "rcwalk/rng.hpp"

namespace rcwalk {

using Coord = std::int32_t;

// Coordinates are capped so that edge/site keys pack into fixed-width words
// without collision (see Environment).
inline constexpr Coord kCoordLimit = 1 << 20;
inline constexpr int kMaxDim = 4;

struct NotNeighbors : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct CoordOutOfRange : std::domain_error {
  using std::domain_error::domain_error;
};

// A point of Z^d, 1 <= d <= kMaxDim. Value type, no heap.
class LatticePoint {
 public:
  LatticePoint() : d_(0) { c_.fill(0); }
  explicit LatticePoint(int d) : d_(d) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("lattice dimension out of range");
    c_.fill(0);
  }
  LatticePoint(std::initializer_list<Coord> cs) : d_(static_cast<int>(cs.size())) {
    if (d_ < 1 || d_ > kMaxDim) throw std::invalid_argument("lattice dimension out of range");
    c_.fill(0);
    int i = 0;
    for (Coord v : cs) c_[i++] = v;
  }

  int dim() const { return d_; }
  Coord operator[](int i) const { return c_[i]; }
  Coord& operator[](int i) { return c_[i]; }

  bool operator==(const LatticePoint& o) const {
    if (d_ != o.d_) return false;
    for (int i = 0; i < d_; ++i)
      if (c_[i] != o.c_[i]) return false;
    return true;
  }
  bool operator!=(const LatticePoint& o) const { return !(*this == o); }

  // Lexicographic order (used for canonical edges and deterministic sweeps).
  bool operator<(const LatticePoint& o) const {
    for (int i = 0; i < d_; ++i) {
      if (c_[i] != o.c_[i]) return c_[i] < o.c_[i];
    }
    return false;
  }

  LatticePoint neighbor(int axis, int dir) const {  // dir = +1 or -1
    LatticePoint p = *this;
    p.c_[axis] += static_cast<Coord>(dir);
    return p;
  }

  // l^1 distance; two points are lattice neighbors iff this equals 1.
  std::int64_t l1_dist(const LatticePoint& o) const {
    std::int64_t s = 0;
    for (int i = 0; i < d_; ++i) s += std::abs(static_cast<std::int64_t>(c_[i]) - o.c_[i]);
    return s;
  }
  std::int64_t linf_norm() const {
    std::int64_t m = 0;
    for (int i = 0; i < d_; ++i) {
      std::int64_t a = std::abs(static_cast<std::int64_t>(c_[i]));
      if (a > m) m = a;
    }
    return m;
  }
  double euclid_dist(const LatticePoint& o) const {
    double s = 0;
    for (int i = 0; i < d_; ++i) {
      double dd = static_cast<double>(c_[i]) - o.c_[i];
      s += dd * dd;
    }
    return std::sqrt(s);
  }

  std::uint64_t hash() const {
    KeyedHash h(0x6c617474ULL);
    for (int i = 0; i < d_; ++i) h.absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(c_[i])));
    h.absorb(static_cast<std::uint64_t>(d_));
    return h.digest();
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < d_; ++i) {
      if (i) s += ",";
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

 private:
  std::array<Coord, kMaxDim> c_;
  int d_;
};

inline bool are_neighbors(const LatticePoint& x, const LatticePoint& y) {
  return x.dim() == y.dim() && x.l1_dist(y) == 1;
}

// Nonoriented nearest-neighbor bond. Canonical: lexicographically smaller
// endpoint first, so Edge(x,y) == Edge(y,x).
struct Edge {
  LatticePoint a, b;  // a < b lexicographically; b = a + unit vector along axis()

  int axis() const {
    for (int i = 0; i < a.dim(); ++i)
      if (a[i] != b[i]) return i;
    return -1;
  }
  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
};

inline Edge canonical_edge(const LatticePoint& x, const LatticePoint& y) {
  if (!are_neighbors(x, y))
    throw NotNeighbors("canonical_edge: points " + x.str() + " and " + y.str() + " are not lattice neighbors");
  return (x < y) ? Edge{x, y} : Edge{y, x};
}

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const { return static_cast<std::size_t>(p.hash()); }
};

}  // namespace rcwalk
