#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcwalk/environment.hpp"

namespace rcwalk {

struct CheckReport {
  std::string name;
  std::map<std::string, double> fitted;  // fitted parameters and their standard errors
  bool pass = false;
  std::int64_t samples = 0;
  double runtime_s = 0;
  std::string note;
};

// Dependent-events law of large numbers: a Markov-modulated chain where the
// conditioning event B_i fails with probability a e^{-delta i} and, on B_i,
// A_{i+1} fires with conditional probability exactly p. Passes when the

// worst tail average of S_m/m over m >= n/2 stays above p/4 in every trial
// (the p/4 floor is a calibration heuristic, flagged in the note).
CheckReport check_slln(double p, double a, double delta, int n, int trials, std::uint64_t seed);

// Transition-density shape: sup-density decay (slope -d/2 in log-log, via a
// sqrt(t)-window occupancy estimator around the start) and the Gaussian
// radial profile at the largest t.
CheckReport check_heat_kernel(const Environment& env, std::vector<double> t_grid, std::int64_t replicas,
                              std::uint64_t seed);

// Maximal inequality: empirical tail of sup_{t<=T} |X_t| / sqrt(T) against
// exp(-c lambda^2); requires a negative lambda^2 slope with R^2 >= 0.9.
CheckReport check_maximal(const Environment& env, double t_horizon, std::vector<double> lambdas,
                          std::int64_t replicas, std::uint64_t seed);

// Sojourn-time tail in cubes V(0, 2^k): exponential tail of T/M_hat and the
// boundedness of E[T(V_k)] / 2^{2k} across k.
CheckReport check_sojourn_tail(const Environment& env, int k_min, int k_max, std::vector<double> lambdas,
                               std::int64_t replicas, std::uint64_t seed);

// Iterated-logarithm scaling: the 95th percentile of
// max_{t<=T} |X_t| / sqrt(T log log T) must not grow across dyadic T.
CheckReport check_lil(const Environment& env, int t_exp_min, int t_exp_max, std::int64_t replicas,
                      std::uint64_t seed);

}  // namespace rcwalk
