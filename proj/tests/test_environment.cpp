#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rcwalk/environment.hpp"
#include "rcwalk/stats.hpp"

using namespace rcwalk;

namespace {

// deterministic stream of distinct edges in a growing box
std::vector<Edge> sample_edges(int d, std::size_t count, std::uint64_t seed) {
  std::vector<Edge> edges;
  RngStream rng(seed);
  while (edges.size() < count) {
    LatticePoint x(d);
    for (int i = 0; i < d; ++i)
      x[i] = static_cast<Coord>(rng.next_u64() % 2000) - 1000;
    const int axis = static_cast<int>(rng.next_u64() % d);
    edges.push_back(canonical_edge(x, x.neighbor(axis, +1)));
  }
  return edges;
}

}  // namespace

TEST_CASE("constant law environment") {
  const auto env = Environment::rcm(3, 42, ConductanceLaw::constant(1.0));
  for (const auto& e : sample_edges(3, 50, 1)) CHECK(env.conductance(e) == 1.0);
  CHECK(env.total_conductance(LatticePoint{0, 0, 0}) == 6.0);
}

TEST_CASE("determinism and symmetry of conductances") {
  const auto env1 = Environment::rcm(3, 999, ConductanceLaw::uniform(1, 5));
  const auto env2 = Environment::rcm(3, 999, ConductanceLaw::uniform(1, 5));
  RngStream rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    LatticePoint x(3);
    for (int i = 0; i < 3; ++i) x[i] = static_cast<Coord>(rng.next_u64() % 1000) - 500;
    const int axis = static_cast<int>(rng.next_u64() % 3);
    const LatticePoint y = x.neighbor(axis, +1);
    const double w1 = env1.conductance(canonical_edge(x, y));
    CHECK(w1 == env1.conductance(canonical_edge(y, x)));  // symmetry
    CHECK(w1 == env2.conductance(canonical_edge(x, y)));  // same seed, same value
    CHECK(w1 == env1.conductance_step(x, axis, +1));
    CHECK(w1 == env1.conductance_step(y, axis, -1));
  }
  const auto env3 = Environment::rcm(3, 1000, ConductanceLaw::uniform(1, 5));
  int differs = 0;
  for (const auto& e : sample_edges(3, 100, 5))
    if (env1.conductance(e) != env3.conductance(e)) ++differs;
  CHECK(differs > 90);  // different seeds give a different environment
}

TEST_CASE("support and law bounds") {
  const std::vector<ConductanceLaw> laws = {
      ConductanceLaw::constant(2.5), ConductanceLaw::uniform(1, 5), ConductanceLaw::pareto(0.5),
      ConductanceLaw::pareto(2.0), ConductanceLaw::two_point(1e6, 0.2)};
  for (const auto& law : laws) {
    const auto env = Environment::rcm(3, 7, law);
    for (const auto& e : sample_edges(3, 100000, 11)) {
      CHECK(env.conductance(e) >= 1.0);
    }
  }
  CHECK_THROWS(ConductanceLaw::constant(0.5));
  CHECK_THROWS(ConductanceLaw::uniform(0.2, 5));
  CHECK_THROWS(ConductanceLaw::pareto(0.0));
}

TEST_CASE("uniform(1,5) sample mean over distinct edges") {
  const auto env = Environment::rcm(3, 2024, ConductanceLaw::uniform(1, 5));
  const auto edges = sample_edges(3, 100000, 13);
  double sum = 0;
  for (const auto& e : edges) sum += env.conductance(e);
  const double mean = sum / static_cast<double>(edges.size());
  CHECK(mean == doctest::Approx(3.0).epsilon(0.0067));  // 3.0 +- 0.02
}

TEST_CASE("iid fidelity: KS statistic and disjoint-edge correlation") {
  for (const auto& law : {ConductanceLaw::uniform(1, 5), ConductanceLaw::pareto(1.5)}) {
    const auto env = Environment::rcm(3, 31337, law);
    const auto edges = sample_edges(3, 100000, 17);
    std::vector<double> values;
    for (const auto& e : edges) values.push_back(env.conductance(e));
    const double ks = ks_statistic(values, [&](double x) { return law.cdf(x); });
    CHECK(ks < ks_critical(0.01, values.size()));

    // correlation between neighboring disjoint edges within 3 sigma of zero
    std::vector<double> a, b;
    for (std::size_t i = 0; i + 1 < edges.size(); i += 2) {
      a.push_back(env.conductance(edges[i]));
      b.push_back(env.conductance(edges[i + 1]));
    }
    const double corr = pearson_corr(a, b);
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(a.size())));
  }
}

TEST_CASE("trap model: site values, conductances, rates") {
  const double a = 0.5;
  const auto env = Environment::btm(3, 555, a, ConductanceLaw::pareto(0.5));
  RngStream rng(19);
  for (int trial = 0; trial < 10000; ++trial) {
    LatticePoint x(3);
    for (int i = 0; i < 3; ++i) x[i] = static_cast<Coord>(rng.next_u64() % 200) - 100;
    const int axis = static_cast<int>(rng.next_u64() % 3);
    const LatticePoint y = x.neighbor(axis, +1);
    const double kx = env.kappa(x), ky = env.kappa(y);
    CHECK(kx >= 1.0);
    // bitwise: mu_e = kappa_x^a kappa_y^a
    CHECK(env.conductance(canonical_edge(x, y)) == std::pow(kx, a) * std::pow(ky, a));
    // w_xy = kappa_x^{a-1} kappa_y^a
    CHECK(env.btm_rate(x, y) == doctest::Approx(std::pow(kx, a - 1) * std::pow(ky, a)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(env.btm_rate(LatticePoint{0, 0, 0}, LatticePoint{2, 0, 0}), NotNeighbors);
  const auto rcm = Environment::rcm(3, 1, ConductanceLaw::constant(1));
  CHECK_THROWS_AS(rcm.btm_rate(LatticePoint{0, 0, 0}, LatticePoint{1, 0, 0}), WrongModel);
}

TEST_CASE("trap model special cases") {
  // a = 0: every edge conductance is 1, rate = 1/kappa_x
  const auto env0 = Environment::btm(3, 77, 0.0, ConductanceLaw::pareto(0.5));
  const LatticePoint x{3, -2, 7}, y{3, -2, 8};
  CHECK(env0.conductance(canonical_edge(x, y)) == 1.0);
  CHECK(env0.btm_rate(x, y) == doctest::Approx(1.0 / env0.kappa(x)));

  // kappa == 1: rate 1 for every a
  const auto env1 = Environment::btm(3, 78, 0.7, ConductanceLaw::constant(1.0));
  CHECK(env1.btm_rate(x, y) == doctest::Approx(1.0));

  // a = 1 arithmetic: kappa_x = 2, kappa_y = 3 -> mu = 6, rate = 3
  // (synthesized via a tabulated pair by searching for sites with the wanted
  // kappa is impractical; check the formula directly instead)
  const auto env2 = Environment::btm(3, 79, 1.0, ConductanceLaw::uniform(1, 9));
  const double kx = env2.kappa(x), ky = env2.kappa(y);
  CHECK(env2.conductance(canonical_edge(x, y)) == doctest::Approx(kx * ky));
  CHECK(env2.btm_rate(x, y) == doctest::Approx(ky));
}

TEST_CASE("btm total conductance: mu_x = kappa_x^a sum of neighbor kappa^a") {
  const auto env = Environment::btm(3, 4242, 1.0, ConductanceLaw::uniform(1, 4));
  const LatticePoint x{5, 5, 5};
  double expect = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (int dir : {+1, -1}) expect += env.kappa(x) * env.kappa(x.neighbor(axis, dir));
  CHECK(env.total_conductance(x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("coordinate range is enforced") {
  const auto env = Environment::rcm(3, 5, ConductanceLaw::uniform(1, 2));
  LatticePoint far(3);
  far[0] = (1 << 20);
  CHECK_THROWS_AS(env.conductance(canonical_edge(far, far.neighbor(1, +1))), CoordOutOfRange);
}

TEST_CASE("incident conductances agree with per-edge queries") {
  for (const auto& env :
       {Environment::rcm(3, 12, ConductanceLaw::pareto(0.8)), Environment::btm(3, 12, 0.5, ConductanceLaw::pareto(0.5))}) {
    const LatticePoint x{-3, 9, 1};
    double w[6];
    const double mu = env.incident_conductances(x, w, nullptr);
    double expect = 0;
    int j = 0;
    for (int axis = 0; axis < 3; ++axis) {
      CHECK(w[j++] == doctest::Approx(env.conductance(x, x.neighbor(axis, +1))).epsilon(1e-12));
      CHECK(w[j++] == doctest::Approx(env.conductance(x, x.neighbor(axis, -1))).epsilon(1e-12));
      expect += env.conductance(x, x.neighbor(axis, +1)) + env.conductance(x, x.neighbor(axis, -1));
    }
    CHECK(mu == doctest::Approx(expect).epsilon(1e-12));
    CHECK(mu == doctest::Approx(env.total_conductance(x)).epsilon(1e-12));
  }
}
