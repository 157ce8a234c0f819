#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rcwalk {

struct LinearFit {
  double slope = 0, intercept = 0;
  double slope_stderr = 0;
  double r2 = 0;
  int n = 0;
};

// Ordinary least squares y ~ a + b x with the usual slope standard error.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct MeanStderr {
  double mean = 0, stderr_of_mean = 0;
  int n = 0;
};
MeanStderr mean_stderr(std::span<const double> v);

// p in [0,1]; linear interpolation between order statistics.
double percentile(std::vector<double> v, double p);

// Two-sided Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Asymptotic critical value at level alpha: sqrt(-ln(alpha/2)/2) / sqrt(n).
double ks_critical(double alpha, std::size_t n);

double pearson_corr(std::span<const double> x, std::span<const double> y);

}  // namespace rcwalk
