#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trapclock/errors.hpp"

namespace trapclock {

// (count, sum, sum of squares) accumulator. Merging is associative, which is
// what makes chunked parallel reductions reproducible.
struct RunningStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sumsq += x * x;
  }

  void merge(const RunningStats& o) {
    count += o.count;
    sum += o.sum;
    sumsq += o.sumsq;
  }

  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }

  // Unbiased sample variance.
  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = sum / n;
    return std::max(0.0, (sumsq - n * m * m) / (n - 1.0));
  }

  double stddev() const { return std::sqrt(variance()); }
  double std_error() const { return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

inline double binomial_se(double p, double n) {
  return n > 0.0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0;
}

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// One-sample statistic against a continuous CDF.
inline double ks_distance(std::vector<double> a, const std::function<double(double)>& cdf) {
  require(!a.empty(), "ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "linear_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

// Log-log slope of y against x.
inline LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "loglog_fit: non-positive value");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly);
}

// SE of a ratio of independent estimates (delta method).
inline double ratio_se(double num, double num_se, double den, double den_se) {
  const double r = num / den;
  return std::abs(r) * std::sqrt((num_se / num) * (num_se / num) + (den_se / den) * (den_se / den));
}

}  // namespace trapclock
