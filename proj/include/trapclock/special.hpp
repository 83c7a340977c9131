#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "trapclock/errors.hpp"

namespace trapclock {

namespace detail {

// Continued fraction for I_x(a,b), modified Lentz. Converges quickly for
// x < (a+1)/(a+b+2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Generalized arcsine distribution function
//   Asl_alpha(u) = (sin(alpha pi) / pi) int_0^u (1-x)^(-alpha) x^(alpha-1) dx,
// i.e. the Beta(alpha, 1-alpha) CDF.
inline double arcsine_cdf(double alpha, double u) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("arcsine_cdf: alpha = " + std::to_string(alpha) + " outside (0,1)");
  }
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError("arcsine_cdf: u = " + std::to_string(u) + " outside [0,1]");
  }
  return regularized_incomplete_beta(alpha, 1.0 - alpha, u);
}

// Asl_alpha(1/(1+rho)): limit of the aging correlation functions.
inline double arcsine_target(double alpha, double rho) {
  if (!(rho > 0.0)) throw DomainError("arcsine_target: rho must be positive");
  return arcsine_cdf(alpha, 1.0 / (1.0 + rho));
}

}  // namespace trapclock
