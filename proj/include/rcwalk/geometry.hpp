#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcwalk/lattice.hpp"

namespace rcwalk {

struct EmptySet : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline Coord floor_div(Coord a, Coord b) {  // b > 0
  Coord q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline Coord ceil_div(Coord a, Coord b) { return -floor_div(-a, b); }

// Half-open axis-aligned cube [lo, lo + side)^d.
struct Cube {
  LatticePoint lo;
  Coord side = 1;

  bool contains(const LatticePoint& p) const {
    for (int i = 0; i < lo.dim(); ++i) {
      if (p[i] < lo[i] || p[i] >= lo[i] + side) return false;
    }
    return true;
  }
  bool intersects(const Cube& o) const {
    for (int i = 0; i < lo.dim(); ++i) {
      if (lo[i] + side <= o.lo[i] || o.lo[i] + o.side <= lo[i]) return false;
    }
    return true;
  }
  std::int64_t cardinality() const {
    std::int64_t c = 1;
    for (int i = 0; i < lo.dim(); ++i) c *= side;
    return c;
  }
};

// Corner convention: x_i <= y_i < x_i + n.
inline Cube c_cube(const LatticePoint& x, Coord n) { return Cube{x, n}; }

// Centered convention: x_i - n/2 <= y_i < x_i + n/2 (real bounds). For every
// integer n >= 1 the integer slice has exactly n points per axis, so
// |V(x,n)| = n^d; the integer form of the lower bound is x_i - floor(n/2).
inline Cube v_cube(const LatticePoint& x, Coord n) {
  Cube c{x, n};
  for (int i = 0; i < x.dim(); ++i) c.lo[i] = x[i] - n / 2;
  return c;
}

inline Cube v_n(int d, int n) { return v_cube(LatticePoint(d), Coord{1} << n); }  // V(0, 2^n)

// Shell index: the unique n >= 1 with x in V_n \ V_{n-1} (S_1 = V_1).
inline int shell_index(const LatticePoint& x) {
  std::int64_t m = 1;
  for (int i = 0; i < x.dim(); ++i) {
    std::int64_t lo = -static_cast<std::int64_t>(x[i]);       // need 2^{n-1} >= -x_i
    std::int64_t hi = static_cast<std::int64_t>(x[i]) + 1;    // need 2^{n-1} >= x_i+1
    if (lo > m) m = lo;
    if (hi > m) m = hi;
  }
  int n = 1;
  std::int64_t half = 1;  // 2^{n-1}
  while (half < m) {
    half <<= 1;
    ++n;
  }
  return n;
}

// Dyadic cube of level k containing x: side 2^k, anchor on 2^k Z^d.
struct DyadicCube {
  int level = 0;
  LatticePoint anchor;

  Cube box() const { return Cube{anchor, Coord{1} << level}; }
  bool operator==(const DyadicCube& o) const { return level == o.level && anchor == o.anchor; }
};

inline DyadicCube dyadic_cube(const LatticePoint& x, int k) {
  if (k < 0) throw std::invalid_argument("dyadic_cube: level must be >= 0");
  DyadicCube q{k, x};
  for (int i = 0; i < x.dim(); ++i) q.anchor[i] = static_cast<Coord>(floor_div(x[i], Coord{1} << k) * (Coord{1} << k));
  return q;
}

// Semi-dyadic cube of level k >= 1: side 2^k, center on 2^{k-1} Z^d,
// box [center - 2^{k-1}, center + 2^{k-1}). Each point of Z^d lies in 2^d
// of these per level. Level 0 is admitted as the degenerate single-point
// cube V(x,1) = {x} (used by packings).
struct SemiDyadicCube {
  int level = 1;
  LatticePoint center;

  Cube box() const {
    if (level == 0) return Cube{center, 1};
    Cube c{center, Coord{1} << level};
    Coord h = Coord{1} << (level - 1);
    for (int i = 0; i < center.dim(); ++i) c.lo[i] = center[i] - h;
    return c;
  }
  bool operator==(const SemiDyadicCube& o) const { return level == o.level && center == o.center; }
};

// The semi-dyadic cube of level k whose center is l-infinity closest to x;
// ties broken by the lexicographically smallest center. Always contains x.
SemiDyadicCube closest_semi_dyadic(const LatticePoint& x, int k);

// Side s(A): smallest r with A inside some C(x, r).
Coord side(std::span<const LatticePoint> pts);

// --- Shell-local Morton keys -------------------------------------------
// Points of V_n are offset to [0, 2^n)^d and bit-interleaved; the top d*j
// bits of a key identify the level-(n-j) dyadic cell. Requires d*n <= 63.

std::uint64_t morton_encode(const LatticePoint& x, int n);
LatticePoint morton_decode(std::uint64_t key, int d, int n);

// Anchor (original coordinates) of the level-k dyadic cell given by the top
// bits of a shell-n Morton key.
LatticePoint morton_cell_anchor(std::uint64_t key, int d, int n, int k);

}  // namespace rcwalk
