#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trapclock/chains.hpp"
#include "trapclock/clock_path.hpp"
#include "trapclock/env.hpp"
#include "trapclock/errors.hpp"

namespace trapclock {

enum class ThetaPolicy {
  // d >= 3: theta_n = max(2, floor(a_n^0.1)). Keeps k_n(t) >> 1 at desk n.
  Desk,
  // d >= 3: theta_n = (log n)^gamma3.
  Theorem,
};

struct ScaleOptions {
  double gamma2 = 0.15;
  // <= 0 selects 12/(1-alpha) + 1.
  double gamma3 = 0.0;
  ThetaPolicy policy = ThetaPolicy::Desk;
};

// Scale sequences (c_n, a_n, theta_n, eps_n) for the trap model at scale n.
struct ScaleSet {
  double n = 0.0;
  double c_n = 1.0;
  double a_n = 1.0;
  double theta_n = 1.0;
  double eps_n = 1.0;
  double alpha = 0.5;
  int d = 2;
  double gamma2 = 0.15;
  double gamma3 = 0.0;
  ThetaPolicy policy = ThetaPolicy::Desk;

  // c_n = n; a_n = n^alpha (log n)^(1-alpha) for d = 2 and n^alpha for d >= 3;
  // theta_n = n^(alpha gamma2) for d = 2 (floored at 2), desk or theorem rule
  // for d >= 3.
  static ScaleSet batm(double n, int d, double alpha, const ScaleOptions& opt = {}) {
    if (!(n >= 3.0) || !std::isfinite(n)) throw ValidationError("scale n must be >= 3");
    if (d < 2) throw ValidationError("trap-model scales need d >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    if (!(opt.gamma2 > 0.0 && opt.gamma2 < 1.0 / 6.0)) {
      throw ValidationError("gamma2 must lie in (0, 1/6)");
    }
    ScaleSet s;
    s.n = n;
    s.d = d;
    s.alpha = alpha;
    s.gamma2 = opt.gamma2;
    s.gamma3 = opt.gamma3 > 0.0 ? opt.gamma3 : 12.0 / (1.0 - alpha) + 1.0;
    s.policy = opt.policy;
    if (!(s.gamma3 > 12.0 / (1.0 - alpha))) throw ValidationError("gamma3 must exceed 12/(1-alpha)");
    const double logn = std::log(n);
    s.c_n = n;
    if (d == 2) {
      s.a_n = std::pow(n, alpha) * std::pow(logn, 1.0 - alpha);
      s.theta_n = std::max(2.0, std::pow(n, alpha * s.gamma2));
    } else {
      s.a_n = std::pow(n, alpha);
      s.theta_n = opt.policy == ThetaPolicy::Desk ? std::max(2.0, std::floor(std::pow(s.a_n, 0.1)))
                                                  : std::pow(logn, s.gamma3);
    }
    if (!(s.theta_n < s.a_n)) {
      throw ValidationError("block length theta_n = " + std::to_string(s.theta_n) +
                            " is not below a_n = " + std::to_string(s.a_n));
    }
    s.eps_n = default_eps(d, alpha, s.theta_n);
    return s;
  }

  // Hand-picked scales (toy chains, unit tests).
  static ScaleSet custom(double c_n, double a_n, double theta_n, double alpha, int d = 2) {
    require(c_n > 0.0 && a_n > 0.0 && theta_n > 0.0, "ScaleSet::custom: scales must be positive");
    ScaleSet s;
    s.n = c_n;
    s.c_n = c_n;
    s.a_n = a_n;
    s.theta_n = theta_n;
    s.alpha = alpha;
    s.d = d;
    s.eps_n = default_eps(d, alpha, theta_n);
    return s;
  }

  static double default_eps(int d, double alpha, double theta_n) {
    if (d == 2) return std::pow(std::log(theta_n), -6.0 / (1.0 - alpha));
    return std::pow(theta_n, -1.0 / 3.0);
  }

  double internal_span(double t) const { return std::floor(a_n * t); }

  // k_n(t) = floor(floor(a_n t) / theta_n).
  std::int64_t k_n(double t) const {
    return static_cast<std::int64_t>(std::floor(internal_span(t) / theta_n));
  }

  // floor(a_n t)^(1/2) log floor(a_n t).
  double d_n(double t) const {
    const double m = internal_span(t);
    return m > 1.0 ? std::sqrt(m) * std::log(m) : 1.0;
  }

  double delta_n() const { return std::pow(eps_n, (1.0 - alpha) / 2.0); }

  // Radius (theta log theta)^(1/2) of the ball in the second correlation function.
  double ball_radius() const { return std::sqrt(theta_n * std::log(theta_n)); }
};

// Clock of a trajectory. Continuous: S(t) = sum_x l_t(x) tau(x). Discrete:
// S(k) = sum_{i<=k} e_i / lambda(J(i)).
template <class Env>
ClockPath build_clock(const Env& env, const Trajectory<Env>& traj) {
  std::vector<double> bp{0.0};
  std::vector<double> val;
  if (traj.kind == ChainKind::ContinuousVsrw) {
    val.push_back(0.0);
    double s = 0.0;
    for (const auto& j : traj.jumps) {
      s += j.holding * env.tau(j.from);
      bp.push_back(j.time);
      val.push_back(s);
    }
    if (traj.horizon > bp.back()) {
      s += traj.final_holding * env.tau(traj.final_site());
      bp.push_back(traj.horizon);
      val.push_back(s);
    }
    return ClockPath(std::move(bp), std::move(val), ClockKind::Continuous);
  }
  double s = 0.0;
  for (const auto& j : traj.jumps) {
    s += j.holding / total_rate(env, j.from);
    val.push_back(s);
    bp.push_back(j.time);
  }
  s += traj.final_holding / total_rate(env, traj.final_site());
  val.push_back(s);
  return ClockPath(std::move(bp), std::move(val), ClockKind::Discrete);
}

// Sum_x l_t(x) tau(x) from the final ledger.
template <class Env>
double ledger_clock(const Env& env, const LedgerFor<Env>& ledger) {
  double s = 0.0;
  for (const auto& [x, lt] : ledger.entries) s += lt * env.tau(x);
  return s;
}

// S_n(t) = c_n^-1 S(floor(a_n t)).
inline double rescale(const ClockPath& clock, const ScaleSet& scales, double t) {
  require(t >= 0.0, "rescale: negative time");
  return clock.value_at(scales.internal_span(t)) / scales.c_n;
}

struct BlockSeries {
  std::vector<double> z;  // Z_{n,1}, ..., Z_{n,K}
  double z0 = 0.0;
  double theta_n = 1.0;
  double a_n = 1.0;
  double c_n = 1.0;

  std::int64_t k_n(double t) const {
    return static_cast<std::int64_t>(std::floor(std::floor(a_n * t) / theta_n));
  }
};

inline BlockSeries block_series(const ClockPath& clock, const ScaleSet& scales, double t) {
  const std::int64_t k = scales.k_n(t);
  if (static_cast<double>(k) * scales.theta_n > clock.horizon()) {
    throw RangeExhausted("block_series: need internal time " +
                         std::to_string(static_cast<double>(k) * scales.theta_n) +
                         ", clock covers " + std::to_string(clock.horizon()));
  }
  BlockSeries out;
  out.theta_n = scales.theta_n;
  out.a_n = scales.a_n;
  out.c_n = scales.c_n;
  out.z0 = clock.values().front() / scales.c_n;
  out.z.reserve(static_cast<std::size_t>(std::max<std::int64_t>(k, 0)));
  double prev = clock.value_at(0.0);
  for (std::int64_t i = 1; i <= k; ++i) {
    const double cur = clock.value_at(scales.theta_n * static_cast<double>(i));
    out.z.push_back((cur - prev) / scales.c_n);
    prev = cur;
  }
  return out;
}

// S^b_n(t) = sum_{k=0}^{k_n(t)-1} Z_{n,k+1} + Z_{n,0}.
inline double blocked_clock(const BlockSeries& series, double t) {
  const std::int64_t k = series.k_n(t);
  if (k > static_cast<std::int64_t>(series.z.size())) {
    throw RangeExhausted("blocked_clock: series has " + std::to_string(series.z.size()) +
                         " blocks, k_n(t) = " + std::to_string(k));
  }
  double s = series.z0;
  for (std::int64_t i = 0; i < k; ++i) s += series.z[static_cast<std::size_t>(i)];
  return s;
}

// x in T_n: tau(x)/c_n > eps_n and every neighbor has tau <= eps_n^(-2/alpha).
template <class Env>
bool in_trap_set(const Env& env, const ScaleSet& scales, const typename Env::site_type& x) {
  if (!(env.tau(x) / scales.c_n > scales.eps_n)) return false;
  const double cap = std::pow(scales.eps_n, -2.0 / scales.alpha);
  for (const auto& y : env.neighbors(x)) {
    if (env.tau(y) > cap) return false;
  }
  return true;
}

// Blocked clock restricted to large traps:
// c_n^-1 int_0^{theta_n k_n(t)} tau(J(s)) 1{J(s) in T_n} ds.
template <class Env>
double truncated_blocked_clock(const Env& env, const Trajectory<Env>& traj, const ScaleSet& scales,
                               double t) {
  require(traj.kind == ChainKind::ContinuousVsrw,
          "truncated_blocked_clock: continuous chains only");
  const double end = static_cast<double>(scales.k_n(t)) * scales.theta_n;
  if (end > traj.horizon) throw RangeExhausted("truncated_blocked_clock: horizon too short");
  double s = 0.0;
  double t0 = 0.0;
  auto credit = [&](const typename Env::site_type& x, double from, double to) {
    const double a = std::min(to, end) - from;
    if (a > 0.0 && in_trap_set(env, scales, x)) s += a * env.tau(x);
  };
  for (const auto& j : traj.jumps) {
    if (t0 >= end) break;
    credit(j.from, t0, j.time);
    t0 = j.time;
  }
  if (t0 < end) credit(traj.final_site(), t0, traj.horizon);
  return s / scales.c_n;
}

}  // namespace trapclock
