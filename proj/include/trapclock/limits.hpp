#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trapclock/clock.hpp"
#include "trapclock/clock_path.hpp"
#include "trapclock/errors.hpp"
#include "trapclock/rng.hpp"

namespace trapclock {

// Treatment of the jumps below the cutoff of the Poissonian sampler.
enum class SmallJumps {
  // Dropped entirely: a compound Poisson path.
  Drop,
  // Replaced by their mean, a linear drift alpha delta^(1-alpha) / (1-alpha).
  Compensate,
};

// Reference alpha-stable subordinator with nu(u, inf) = u^-alpha (K = 1).
struct SubordinatorOptions {
  double cutoff = 1e-4;
  SmallJumps small_jumps = SmallJumps::Compensate;
};

inline void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

// Mean contribution per unit time of jumps below delta: int_0^delta u nu(du).
inline double small_jump_drift(double alpha, double delta) {
  return alpha * std::pow(delta, 1.0 - alpha) / (1.0 - alpha);
}

// Jumps above the cutoff in time order. Interarrival times are exponential
// with rate delta^-alpha; sizes are delta U^(-1/alpha).
class SubordinatorStream {
 public:
  SubordinatorStream(double alpha, const SubordinatorOptions& opt, std::uint64_t seed)
      : alpha_(alpha), cutoff_(opt.cutoff), rng_(seed, Substream::kAux) {
    validate_alpha(alpha);
    require(opt.cutoff > 0.0, "SubordinatorStream: cutoff must be positive");
    rate_ = std::pow(cutoff_, -alpha_);
    drift_ = opt.small_jumps == SmallJumps::Compensate ? small_jump_drift(alpha_, cutoff_) : 0.0;
  }

  struct Jump {
    double time;
    double size;
  };

  Jump next() {
    time_ += standard_exponential(rng_) / rate_;
    const double size = cutoff_ * std::pow(uniform_open(rng_), -1.0 / alpha_);
    return {time_, size};
  }

  double drift() const noexcept { return drift_; }
  double cutoff() const noexcept { return cutoff_; }

 private:
  double alpha_;
  double cutoff_;
  double rate_ = 0.0;
  double drift_ = 0.0;
  double time_ = 0.0;
  CounterRng rng_;
};

// V(t) = drift t + sum_{s_i <= t} J_i on [0, horizon]. `drift` is the
// subordinator's own drift and stays 0; `compensation` carries the mean of the
// discarded small jumps.
struct SubordinatorPath {
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  double drift = 0.0;
  double compensation = 0.0;
  double small_jump_cutoff = 0.0;
  double horizon = 0.0;

  double slope() const noexcept { return drift + compensation; }

  double value(double t) const {
    if (t > horizon) throw RangeExhausted("SubordinatorPath: time beyond horizon");
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    double s = 0.0;
    for (auto j = jump_sizes.begin(); j != jump_sizes.begin() + (it - jump_times.begin()); ++j) s += *j;
    return s + slope() * t;
  }
};

inline SubordinatorPath sample_subordinator(double alpha, double horizon, std::uint64_t seed,
                                            const SubordinatorOptions& opt = {}) {
  require(horizon > 0.0, "sample_subordinator: horizon must be positive");
  SubordinatorStream stream(alpha, opt, seed);
  SubordinatorPath path;
  path.compensation = stream.drift();
  path.small_jump_cutoff = opt.cutoff;
  path.horizon = horizon;
  for (;;) {
    const auto j = stream.next();
    if (j.time > horizon) break;
    path.jump_times.push_back(j.time);
    path.jump_sizes.push_back(j.size);
  }
  return path;
}

// V(T) without storing the path.
inline double subordinator_value(double alpha, double horizon, std::uint64_t seed,
                                 const SubordinatorOptions& opt = {}) {
  SubordinatorStream stream(alpha, opt, seed);
  double s = stream.drift() * horizon;
  for (;;) {
    const auto j = stream.next();
    if (j.time > horizon) return s;
    s += j.size;
  }
}

// One-sided stable variable with E exp(-l S) = exp(-l^alpha) (Kanter's
// representation).
template <class Rng>
double positive_stable(double alpha, Rng& rng) {
  validate_alpha(alpha);
  const double u = M_PI * uniform_open(rng);
  const double e = standard_exponential(rng);
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return a * b;
}

// Exact marginal V(T) for nu(u, inf) = u^-alpha: Laplace exponent
// Gamma(1-alpha) l^alpha, hence V(T) = (T Gamma(1-alpha))^(1/alpha) S.
template <class Rng>
double stable_marginal(double alpha, double horizon, Rng& rng) {
  return std::pow(horizon * std::tgamma(1.0 - alpha), 1.0 / alpha) * positive_stable(alpha, rng);
}

// Result of a first passage above level u.
struct Passage {
  double time;   // L_u = inf{t : Y(t) > u}
  double value;  // Y(L_u)
  double level;
  double overshoot() const noexcept { return value - level; }
};

// First passage of a stream-generated subordinator above `level`.
inline Passage first_passage(SubordinatorStream& stream, double level) {
  const double b = stream.drift();
  double t = 0.0, y = 0.0;
  for (;;) {
    const auto j = stream.next();
    const double before = y + b * (j.time - t);
    if (before > level) {
      // Crossed continuously by the compensating drift.
      return {t + (level - y) / b, level, level};
    }
    t = j.time;
    y = before + j.size;
    if (y > level) return {t, y, level};
  }
}

// chi_u(Y) = Y(L_u) - u for the stored path.
inline double overshoot(const SubordinatorPath& path, double level) {
  const double b = path.slope();
  double t = 0.0, y = 0.0;
  for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
    const double before = y + b * (path.jump_times[i] - t);
    if (before > level) return 0.0;
    t = path.jump_times[i];
    y = before + path.jump_sizes[i];
    if (y > level) return y - level;
  }
  if (y + b * (path.horizon - t) > level) return 0.0;
  throw RangeExhausted("overshoot: level " + std::to_string(level) + " not exceeded before horizon");
}

// Overshoot of a clock path. Continuous clocks cross every level continuously.
inline double overshoot(const ClockPath& clock, double level) {
  const auto& v = clock.values();
  const auto it = std::upper_bound(v.begin(), v.end(), level);
  if (it == v.end()) {
    throw RangeExhausted("overshoot: level " + std::to_string(level) + " not exceeded by clock");
  }
  if (clock.kind() == ClockKind::Continuous && it != v.begin()) return 0.0;
  return *it - level;
}

// Overshoot of the blocked clock t -> Z_0 + sum_{k < k_n(t)} Z_{k+1}.
inline double overshoot(const BlockSeries& series, double level) {
  double s = series.z0;
  if (s > level) return s - level;
  for (double z : series.z) {
    s += z;
    if (s > level) return s - level;
  }
  throw RangeExhausted("overshoot: level " + std::to_string(level) + " not exceeded by blocks");
}

// Fractional kinetics sample Z(t) = B_d(V^<-(t)) on a time grid.
struct FKSample {
  double alpha = 0.5;
  int d = 2;
  std::vector<double> times;
  std::vector<double> inverse_times;
  std::vector<std::vector<double>> positions;
};

// Right-continuous inverse V^<-(t) = inf{v : V(v) > t} of a streamed
// subordinator, evaluated at a nondecreasing grid. The stream supplies jumps
// for as long as needed, so no horizon can run short.
inline std::vector<double> inverse_subordinator(SubordinatorStream& stream,
                                                std::span<const double> grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  const double b = stream.drift();
  double t = 0.0, y = 0.0;  // state right after the last processed jump
  auto pending = stream.next();
  double prev_level = 0.0;
  for (double level : grid) {
    require(level >= 0.0 && (out.empty() || level >= prev_level),
            "inverse_subordinator: grid must be nonnegative and nondecreasing");
    prev_level = level;
    for (;;) {
      if (y > level) {
        out.push_back(t);
        break;
      }
      const double before = y + b * (pending.time - t);
      if (before > level) {
        out.push_back(t + (level - y) / b);
        break;
      }
      t = pending.time;
      y = before + pending.size;
      pending = stream.next();
    }
  }
  return out;
}

inline FKSample sample_fk(double alpha, int d, std::span<const double> grid, std::uint64_t seed,
                          const SubordinatorOptions& opt = {}) {
  validate_alpha(alpha);
  require(d >= 1, "sample_fk: d must be >= 1");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0 && (i == 0 || grid[i] >= grid[i - 1]),
            "sample_fk: grid must be nonnegative and nondecreasing");
  }
  FKSample out;
  out.alpha = alpha;
  out.d = d;
  out.times.push_back(0.0);
  for (double g : grid)
    if (g > 0.0) out.times.push_back(g);

  SubordinatorStream stream(alpha, opt, seed);
  out.inverse_times = inverse_subordinator(stream, out.times);
  out.inverse_times.front() = 0.0;

  CounterRng bm(seed, Substream::kDirection);
  std::vector<double> pos(static_cast<std::size_t>(d), 0.0);
  double last = 0.0;
  for (double v : out.inverse_times) {
    const double dt = v - last;
    if (dt > 0.0) {
      const double sd = std::sqrt(dt);
      for (auto& c : pos) c += sd * standard_normal(bm);
    }
    last = v;
    out.positions.push_back(pos);
  }
  return out;
}

// E V^<-(t) = t^alpha / (Gamma(1-alpha) Gamma(1+alpha)) for nu(u, inf) = u^-alpha.
inline double mean_inverse_subordinator(double alpha, double t) {
  return std::pow(t, alpha) / (std::tgamma(1.0 - alpha) * std::tgamma(1.0 + alpha));
}

}  // namespace trapclock
