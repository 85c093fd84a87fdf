#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace oracle {

/// Two-sample KS by direct evaluation of both empirical CDFs at every pooled point.
inline double ks_brute(std::span<const double> x, std::span<const double> y) {
  auto cdf = [](std::span<const double> s, double t) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [t](double v) { return v <= t; })) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const double t : x) d = std::max(d, std::abs(cdf(x, t) - cdf(y, t)));
  for (const double t : y) d = std::max(d, std::abs(cdf(x, t) - cdf(y, t)));
  return d;
}

/// O(n log n) two-sample KS via binary search in the sorted samples.
inline double ks_sorted(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  auto cdf = [](const std::vector<double>& s, double t) {
    return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const double t : x) d = std::max(d, std::abs(cdf(x, t) - cdf(y, t)));
  for (const double t : y) d = std::max(d, std::abs(cdf(x, t) - cdf(y, t)));
  return d;
}

inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double a = static_cast<double>(n), b = static_cast<double>(m);
  return 1.628 * std::sqrt((a + b) / (a * b));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Solves the 2 x 2 system by Cramer's rule.
inline Eigen::Vector2d solve2(double a, double b, double c, double d, double r1, double r2) {
  const double det = a * d - b * c;
  return {(r1 * d - b * r2) / det, (a * r2 - c * r1) / det};
}

}  // namespace oracle
