#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace gradsamp {

// Compensated (Kahan) summation. Probability vectors must sum to 1 within
// 1e-12 at any n, which plain left-to-right accumulation cannot guarantee.
inline double kahan_sum(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double sum = 0.0;
  double carry = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double y = v[i] - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

inline double kahan_sum(const std::vector<double>& v) {
  return kahan_sum(Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                     static_cast<Eigen::Index>(v.size())));
}

// Type-7 quantile (linear interpolation between order statistics) of an
// already sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, 0.5);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return kahan_sum(v) / static_cast<double>(v.size());
}

// Standard error of the mean (sample standard deviation over sqrt(n)).
inline double standard_error(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1)) /
         std::sqrt(static_cast<double>(n));
}

}  // namespace gradsamp
