#include "rcwalk/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcwalk {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const int n = static_cast<int>(x.size());
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), yv(y.data(), n);
  const double xm = xv.mean(), ym = yv.mean();
  Eigen::VectorXd xc = xv.array() - xm, yc = yv.array() - ym;
  const double sxx = xc.squaredNorm();
  if (sxx == 0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.n = n;
  f.slope = xc.dot(yc) / sxx;
  f.intercept = ym - f.slope * xm;
  const double ss_res = (yc - f.slope * xc).squaredNorm();
  const double ss_tot = yc.squaredNorm();
  f.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
  f.slope_stderr = (n > 2) ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  return f;
}

MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr m;
  m.n = static_cast<int>(v.size());
  if (m.n == 0) return m;
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), m.n);
  m.mean = vv.mean();
  if (m.n > 1) {
    const double var = (vv.array() - m.mean).square().sum() / (m.n - 1);
    m.stderr_of_mean = std::sqrt(var / m.n);
  }
  return m;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const double idx = p * (static_cast<double>(v.size()) - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1 - frac) + v[lo + 1] * frac;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson_corr: need paired samples");
  const int n = static_cast<int>(x.size());
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), yv(y.data(), n);
  Eigen::VectorXd xc = xv.array() - xv.mean(), yc = yv.array() - yv.mean();
  const double den = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return den > 0 ? xc.dot(yc) / den : 0.0;
}

}  // namespace rcwalk
