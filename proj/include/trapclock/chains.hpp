#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "trapclock/clock_path.hpp"
#include "trapclock/env.hpp"
#include "trapclock/errors.hpp"
#include "trapclock/rng.hpp"

namespace trapclock {

enum class ChainKind { DiscreteJ, ContinuousVsrw };

inline constexpr std::size_t kMaxDegree = 32;

template <class Site>
struct JumpRecord {
  double time = 0.0;  // internal time of the jump (step index for discrete chains)
  Site from{};
  Site to{};
  double holding = 0.0;  // time (or exponential mark) credited to `from`
};

template <class Site, class Hash>
struct LocalTimeLedger {
  std::unordered_map<Site, double, Hash> entries;
  double total = 0.0;

  void add(const Site& x, double amount) {
    entries[x] += amount;
    total += amount;
  }

  void merge(const LocalTimeLedger& other) {
    for (const auto& [x, v] : other.entries) entries[x] += v;
    total += other.total;
  }

  double at(const Site& x) const {
    const auto it = entries.find(x);
    return it == entries.end() ? 0.0 : it->second;
  }
};

template <class Site>
struct TrajectoryConfig {
  std::uint64_t traj_seed = 0;
  ChainKind chain_kind = ChainKind::ContinuousVsrw;
  Site start{};
  // Internal-time budget for the VSRW, number of steps for the discrete chain.
  double horizon = 1.0;
  // Stored jumps are capped; exceeding the cap throws CapExceeded.
  std::uint64_t max_jumps = 20'000'000;
  // VSRW only: when nonzero, stop right after this many jumps; the horizon
  // becomes the time of the last jump.
  std::uint64_t stop_after_jumps = 0;

  void validate() const {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be >= 0");
    if (chain_kind == ChainKind::ContinuousVsrw && !(horizon > 0.0)) {
      throw ValidationError("continuous horizon must be > 0");
    }
  }
};

template <class Env>
using LedgerFor = LocalTimeLedger<typename Env::site_type, typename Env::site_hash>;

template <class Env>
struct Trajectory {
  using site_type = typename Env::site_type;
  ChainKind kind = ChainKind::ContinuousVsrw;
  site_type start{};
  double horizon = 0.0;
  LedgerFor<Env> ledger;
  std::vector<JumpRecord<site_type>> jumps;
  // Local time credited to the last site (partial holding or final mark).
  double final_holding = 0.0;

  const site_type& final_site() const { return jumps.empty() ? start : jumps.back().to; }
};

// Normalized p(x, .) over env.neighbors(x), proportional to lambda(x,y).
template <class Env>
std::vector<double> jump_distribution(const Env& env, const typename Env::site_type& x) {
  std::vector<double> p;
  double total = 0.0;
  for (const auto& y : env.neighbors(x)) {
    p.push_back(edge_rate(env, x, y));
    total += p.back();
  }
  for (auto& v : p) v /= total;
  return p;
}

// One step of J: neighbor weights tau(y)^theta, their sum, and the VSRW
// holding rate tau(x)^theta * sum.
template <class Env>
class Neighborhood {
 public:
  using site_type = typename Env::site_type;

  Neighborhood(const Env& env, const site_type& x) : sites_(env.neighbors(x)) {
    const double th = env.theta();
    require(std::size(sites_) <= kMaxDegree, "Neighborhood: degree exceeds kMaxDegree");
    std::size_t i = 0;
    for (const auto& y : sites_) {
      weights_[i] = th == 0.0 ? 1.0 : std::pow(env.tau(y), th);
      weight_sum_ += weights_[i];
      ++i;
    }
    degree_ = i;
    vsrw_rate_ = th == 0.0 ? weight_sum_ : std::pow(env.tau(x), th) * weight_sum_;
  }

  double vsrw_rate() const noexcept { return vsrw_rate_; }
  std::size_t degree() const noexcept { return degree_; }

  // Neighbor selected by one uniform u in (0,1).
  site_type select(double u) const {
    const double target = u * weight_sum_;
    double cum = 0.0;
    auto it = std::begin(sites_);
    for (std::size_t i = 0; i < degree_; ++i, ++it) {
      cum += weights_[i];
      if (target < cum) return *it;
    }
    return *std::next(std::begin(sites_), static_cast<std::ptrdiff_t>(degree_ - 1));
  }

 private:
  decltype(std::declval<const Env&>().neighbors(std::declval<const site_type&>())) sites_;
  std::array<double, kMaxDegree> weights_{};
  double weight_sum_ = 0.0;
  double vsrw_rate_ = 0.0;
  std::size_t degree_ = 0;
};

// Streaming walker shared by the VSRW and the discrete chain. Each call to
// advance() emits the sojourn at the current site and moves to the next one.
// Directions come from their own sub-stream so both chain kinds visit the same
// site sequence for the same seed.
template <class Env>
class Walker {
 public:
  using site_type = typename Env::site_type;

  struct Sojourn {
    site_type site;
    double local_time;  // holding time (VSRW) or exponential mark (discrete)
    site_type next;
  };

  Walker(const Env& env, ChainKind kind, const site_type& start, std::uint64_t seed)
      : env_(&env),
        kind_(kind),
        site_(start),
        holding_rng_(seed, Substream::kHolding),
        direction_rng_(seed, Substream::kDirection),
        mark_rng_(seed, Substream::kMark) {}

  const site_type& site() const noexcept { return site_; }
  ChainKind kind() const noexcept { return kind_; }
  const Env& env() const noexcept { return *env_; }

  Sojourn advance() {
    const Neighborhood<Env> nb(*env_, site_);
    double lt;
    if (kind_ == ChainKind::ContinuousVsrw) {
      lt = standard_exponential(holding_rng_) / nb.vsrw_rate();
    } else {
      lt = standard_exponential(mark_rng_);
    }
    const site_type next = nb.select(uniform_open(direction_rng_));
    Sojourn s{site_, lt, next};
    site_ = next;
    return s;
  }

  // Final local-time draw at the current site without moving (the i = k mark
  // of a discrete chain stopped after k steps).
  double final_mark() { return standard_exponential(mark_rng_); }

 private:
  const Env* env_;
  ChainKind kind_;
  site_type site_;
  CounterRng holding_rng_;
  CounterRng direction_rng_;
  CounterRng mark_rng_;
};

// Kinetic Monte Carlo of the VSRW up to internal time `horizon`. The last
// holding interval is truncated at the horizon and credited to the ledger.
template <class Env>
Trajectory<Env> run_vsrw(const Env& env, const TrajectoryConfig<typename Env::site_type>& traj) {
  traj.validate();
  require(traj.chain_kind == ChainKind::ContinuousVsrw, "run_vsrw: chain_kind must be ContinuousVsrw");
  Trajectory<Env> out;
  out.kind = ChainKind::ContinuousVsrw;
  out.start = traj.start;
  out.horizon = traj.horizon;
  Walker<Env> walker(env, ChainKind::ContinuousVsrw, traj.start, traj.traj_seed);
  double t = 0.0;
  for (;;) {
    const auto s = walker.advance();
    if (t + s.local_time >= traj.horizon) {
      out.final_holding = traj.horizon - t;
      out.ledger.add(s.site, out.final_holding);
      break;
    }
    if (out.jumps.size() >= traj.max_jumps) {
      throw CapExceeded("run_vsrw: more than " + std::to_string(traj.max_jumps) + " jumps");
    }
    t += s.local_time;
    out.ledger.add(s.site, s.local_time);
    out.jumps.push_back({t, s.site, s.next, s.local_time});
    if (traj.stop_after_jumps != 0 && out.jumps.size() == traj.stop_after_jumps) {
      out.horizon = t;
      out.final_holding = 0.0;
      break;
    }
  }
  return out;
}

// Discrete-time chain with i.i.d. mean-one marks: after k = floor(horizon)
// steps the ledger holds sum_{i=0}^{k} e_i 1{J(i) = x}.
template <class Env>
Trajectory<Env> run_discrete(const Env& env,
                             const TrajectoryConfig<typename Env::site_type>& traj) {
  traj.validate();
  require(traj.chain_kind == ChainKind::DiscreteJ, "run_discrete: chain_kind must be DiscreteJ");
  Trajectory<Env> out;
  out.kind = ChainKind::DiscreteJ;
  out.start = traj.start;
  const auto steps = static_cast<std::int64_t>(std::floor(traj.horizon));
  if (static_cast<std::uint64_t>(steps) > traj.max_jumps) {
    throw CapExceeded("run_discrete: " + std::to_string(steps) + " steps exceed the cap");
  }
  out.horizon = static_cast<double>(steps);
  Walker<Env> walker(env, ChainKind::DiscreteJ, traj.start, traj.traj_seed);
  for (std::int64_t i = 0; i < steps; ++i) {
    const auto s = walker.advance();
    out.ledger.add(s.site, s.local_time);
    out.jumps.push_back({static_cast<double>(i + 1), s.site, s.next, s.local_time});
  }
  out.final_holding = walker.final_mark();
  out.ledger.add(walker.site(), out.final_holding);
  return out;
}

template <class Env>
Trajectory<Env> run_chain(const Env& env, const TrajectoryConfig<typename Env::site_type>& traj) {
  return traj.chain_kind == ChainKind::ContinuousVsrw ? run_vsrw(env, traj) : run_discrete(env, traj);
}

// J at internal time v (right-continuous).
template <class Site>
Site site_at_internal_time(std::span<const JumpRecord<Site>> jumps, const Site& start, double v) {
  const auto it = std::upper_bound(jumps.begin(), jumps.end(), v,
                                   [](double t, const JumpRecord<Site>& j) { return t < j.time; });
  if (it == jumps.begin()) return start;
  return std::prev(it)->to;
}

// X(t_phys) = J(S^<-(t_phys)).
template <class Site>
Site position_of_x(std::span<const JumpRecord<Site>> jumps, const Site& start,
                   const ClockPath& clock, double t_phys) {
  require(t_phys >= 0.0, "position_of_x: negative physical time");
  return site_at_internal_time(jumps, start, clock.inverse(t_phys));
}

template <class Env>
typename Env::site_type position_of_x(const Trajectory<Env>& traj, const ClockPath& clock,
                                      double t_phys) {
  return position_of_x(std::span<const JumpRecord<typename Env::site_type>>(traj.jumps), traj.start,
                       clock, t_phys);
}

}  // namespace trapclock
