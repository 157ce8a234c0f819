#include "rcwalk/geometry.hpp"

#include <limits>

namespace rcwalk {

SemiDyadicCube closest_semi_dyadic(const LatticePoint& x, int k) {
  if (k < 1) throw std::invalid_argument("closest_semi_dyadic: level must be >= 1");
  const Coord h = Coord{1} << (k - 1);

  // Distance to the nearest multiple of h, per axis; the overall minimal
  // l-infinity distance is the max of these.
  Coord m = 0;
  for (int i = 0; i < x.dim(); ++i) {
    Coord r = x[i] - floor_div(x[i], h) * h;  // in [0, h)
    Coord di = std::min(r, h - r);
    if (di > m) m = di;
  }
  // Among centers within distance m the lexicographically smallest one takes
  // the smallest admissible coordinate on every axis.
  SemiDyadicCube q{k, x};
  for (int i = 0; i < x.dim(); ++i) q.center[i] = ceil_div(x[i] - m, h) * h;
  return q;
}

Coord side(std::span<const LatticePoint> pts) {
  if (pts.empty()) throw EmptySet("side: empty point set");
  const int d = pts.front().dim();
  Coord best = 0;
  for (int i = 0; i < d; ++i) {
    Coord lo = std::numeric_limits<Coord>::max(), hi = std::numeric_limits<Coord>::min();
    for (const auto& p : pts) {
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    best = std::max(best, static_cast<Coord>(hi - lo + 1));
  }
  return best;
}

std::uint64_t morton_encode(const LatticePoint& x, int n) {
  const int d = x.dim();
  if (d * n > 63) throw std::domain_error("morton_encode: d*n exceeds 63 bits");
  const Coord half = (n >= 1) ? (Coord{1} << (n - 1)) : 1;
  for (int i = 0; i < d; ++i) {
    if (x[i] < -half || x[i] >= half)
      throw std::domain_error("morton_encode: point outside V_n");
  }
  std::uint64_t key = 0;
  for (int bit = n - 1; bit >= 0; --bit) {
    for (int i = 0; i < d; ++i) {
      std::uint64_t off = static_cast<std::uint64_t>(static_cast<std::int64_t>(x[i]) + half);
      key = (key << 1) | ((off >> bit) & 1u);
    }
  }
  return key;
}

LatticePoint morton_decode(std::uint64_t key, int d, int n) {
  const Coord half = (n >= 1) ? (Coord{1} << (n - 1)) : 1;
  LatticePoint x(d);
  for (int bit = 0; bit < n; ++bit) {
    for (int i = d - 1; i >= 0; --i) {
      x[i] |= static_cast<Coord>((key & 1u) << bit);
      key >>= 1;
    }
  }
  for (int i = 0; i < d; ++i) x[i] -= half;
  return x;
}

LatticePoint morton_cell_anchor(std::uint64_t key, int d, int n, int k) {
  std::uint64_t prefix = (k >= n) ? 0 : key >> (static_cast<std::uint64_t>(d) * k);
  LatticePoint a = morton_decode(prefix << (static_cast<std::uint64_t>(d) * k), d, n);
  return a;
}

}  // namespace rcwalk
