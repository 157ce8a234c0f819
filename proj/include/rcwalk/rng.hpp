#pragma once

#include <cstdint>
#include <cmath>

namespace rcwalk {

// SplitMix64 finalizer: a 64-bit bijection with full avalanche. All seeded
// randomness in the project (environment values, walk streams) is built
// from this one primitive so results are reproducible bit-for-bit.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Keyed hash over a short word sequence. Order-sensitive.
struct KeyedHash {
  std::uint64_t state;

  explicit KeyedHash(std::uint64_t seed) : state(mix64(seed ^ kGolden)) {}

  KeyedHash& absorb(std::uint64_t w) {
    state = mix64((state + kGolden) ^ w);
    return *this;
  }
  std::uint64_t digest() const { return mix64(state + kGolden); }
};

inline double u64_to_unit(std::uint64_t r) {
  // [0, 1), 53-bit resolution
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

inline double u64_to_open_unit(std::uint64_t r) {
  // (0, 1), never returns an endpoint
  return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based stream (SplitMix64). Cheap to fork: derive a child key and
// the child is statistically independent of the parent, which is how the
// harness hands one stream to each replica.
class RngStream {
 public:
  RngStream() : key_(0), ctr_(0) {}
  explicit RngStream(std::uint64_t key) : key_(key), ctr_(0) {}

  static RngStream from(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    KeyedHash h(master);
    h.absorb(tag).absorb(index);
    return RngStream(h.digest());
  }

  std::uint64_t next_u64() { return mix64(key_ + kGolden * ++ctr_); }

  double uniform01() { return u64_to_unit(next_u64()); }        // [0,1)
  double uniform_open() { return u64_to_open_unit(next_u64()); } // (0,1)

  // Exponential with the given mean; strictly positive.
  double exponential(double mean) { return -mean * std::log(uniform_open()); }

  // UniformRandomBitGenerator interface
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return next_u64(); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return ctr_; }
  void set_counter(std::uint64_t c) { ctr_ = c; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
};

// Standard normal via Box-Muller on the counter stream.
inline double normal01(RngStream& rng) {
  double u1 = rng.uniform_open();
  double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Gamma(shape, 1) by Marsaglia-Tsang squeeze; exact for shape >= 1.
double gamma_shape(RngStream& rng, double shape);

// Binomial(n, p). Exact Bernoulli loop for small n, inverse-CDF walk for
// moderate np, rounded normal for large np(1-p) (used only inside excursion
// blocks where counts are astronomically large).
std::uint64_t binomial(RngStream& rng, std::uint64_t n, double p);

}  // namespace rcwalk
