#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "trapclock/chains.hpp"
#include "trapclock/clock.hpp"
#include "trapclock/env.hpp"
#include "trapclock/errors.hpp"
#include "trapclock/limits.hpp"
#include "trapclock/parallel.hpp"
#include "trapclock/rng.hpp"
#include "trapclock/special.hpp"
#include "trapclock/stats.hpp"

namespace trapclock {

enum class AgingKind { C1, C2, C3, Ceps_batm, Ceps_fk };

constexpr std::string_view to_string(AgingKind k) {
  switch (k) {
    case AgingKind::C1: return "C1";
    case AgingKind::C2: return "C2";
    case AgingKind::C3: return "C3";
    case AgingKind::Ceps_batm: return "Ceps_batm";
    case AgingKind::Ceps_fk: return "Ceps_fk";
  }
  return "?";
}

struct AgingPoint {
  double s = 0.0;
  double rho = 0.0;
  AgingKind kind = AgingKind::C1;
  double eps = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_env = 0;
  std::uint64_t n_traj_per_env = 0;
  double arcsine_target = 0.0;
  std::uint64_t excluded = 0;
  // Standard deviation of the per-environment estimates.
  double env_sd = 0.0;
};

// Quenched estimate of one environment.
struct EnvAgingRow {
  AgingKind kind = AgingKind::C1;
  double s = 0.0;
  double rho = 0.0;
  double eps = 0.0;
  std::uint64_t env_index = 0;
  std::uint64_t env_seed = 0;
  double estimate = 0.0;
  std::uint64_t n_traj = 0;
  std::uint64_t excluded = 0;
};

struct AgingConfig {
  EnvConfig env;  // env_seed is replaced by derive(master_seed, i)
  std::uint64_t master_seed = 0;
  std::uint64_t n_env = 200;
  std::uint64_t n_traj = 50;
  std::vector<double> rhos{1.0};
  std::vector<double> eps;  // radii of C^eps in units of a_s^(1/2)
  // C2 ball radius; negative means (theta_s log theta_s)^(1/2).
  double c2_radius = -1.0;
  std::uint64_t max_jumps = 1'000'000'000;
  unsigned workers = 1;
  ScaleOptions scale_options{};

  void validate() const {
    env.validate();
    if (env.d < 2 || env.d > 4) throw ValidationError("aging: d must be 2, 3 or 4");
    if (n_env == 0 || n_traj == 0) throw ValidationError("aging: n_env and n_traj must be positive");
    if (rhos.empty()) throw ValidationError("aging: rho grid is empty");
    for (double r : rhos)
      if (!(r > 0.0)) throw ValidationError("aging: rho must be positive");
    for (double e : eps)
      if (!(e > 0.0)) throw ValidationError("aging: eps must be positive");
    if (max_jumps == 0) throw ValidationError("aging: max_jumps must be positive");
  }
};

struct AgingResult {
  std::vector<AgingPoint> points;
  std::vector<EnvAgingRow> per_env;
  std::uint64_t excluded = 0;
  std::uint64_t total_jumps = 0;
};

// Events of one trajectory for each window end s(1+rho_j).
struct WindowOutcome {
  bool same = false;       // X(s) = X(s(1+rho))
  double max_dist = 0.0;   // max_{v in (s, s(1+rho))} |X(v) - X(s)|
};

struct TrajectoryOutcome {
  bool excluded = false;
  std::uint64_t jumps = 0;
  std::vector<WindowOutcome> windows;
};

// Streams the VSRW and its clock. Each sojourn at x occupies the physical
// interval [P0, P0 + h tau(x)); X is evaluated exactly at s and at the window
// ends, and the in-window maximal displacement is taken over every sojourn
// meeting (s, s(1+rho)).
template <class Env>
TrajectoryOutcome age_trajectory(const Env& env, double s, const std::vector<double>& rhos,
                                 std::uint64_t seed, std::uint64_t max_jumps) {
  using Site = typename Env::site_type;
  TrajectoryOutcome out;
  out.windows.resize(rhos.size());
  std::vector<double> ends;
  for (double r : rhos) ends.push_back(s * (1.0 + r));
  const double last = *std::max_element(ends.begin(), ends.end());
  std::vector<bool> closed(rhos.size(), false);

  Walker<Env> w(env, ChainKind::ContinuousVsrw, Site{}, seed);
  double p0 = 0.0;
  bool have_xs = false;
  Site xs{};
  for (;;) {
    const auto so = w.advance();
    const double p1 = p0 + so.local_time * env.tau(so.site);
    if (!have_xs && p1 > s) {
      have_xs = true;
      xs = so.site;
    }
    if (have_xs) {
      const double dist = Env::distance(so.site, xs);
      for (std::size_t j = 0; j < ends.size(); ++j) {
        if (closed[j] || !(p0 < ends[j])) continue;
        auto& o = out.windows[j];
        o.max_dist = std::max(o.max_dist, dist);
        if (ends[j] < p1) {
          o.same = so.site == xs;
          closed[j] = true;
        }
      }
    }
    if (p1 > last) break;
    if (++out.jumps >= max_jumps) {
      out.excluded = true;
      break;
    }
    p0 = p1;
  }
  return out;
}

namespace detail {

struct EnvTally {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t included = 0;
  std::uint64_t excluded = 0;
  std::uint64_t jumps = 0;
  // Per rho: counts of C1, C2, C3, then one count per eps.
  std::vector<std::vector<std::uint64_t>> hits;
};

inline AgingPoint summarize(AgingKind kind, double s, double rho, double eps, double alpha,
                            const std::vector<double>& env_means, std::uint64_t n_env,
                            std::uint64_t n_traj, std::uint64_t excluded) {
  RunningStats rs;
  for (double m : env_means) rs.add(m);
  AgingPoint p;
  p.kind = kind;
  p.s = s;
  p.rho = rho;
  p.eps = eps;
  p.estimate = rs.mean();
  p.env_sd = rs.count > 1 ? rs.stddev() : 0.0;
  p.std_error = rs.count > 1 ? rs.std_error() : 0.0;
  p.n_env = n_env;
  p.n_traj_per_env = n_traj;
  p.arcsine_target = arcsine_target(alpha, rho);
  p.excluded = excluded;
  return p;
}

}  // namespace detail

// Runs the environment x trajectory grid with environments built by
// make_env(env_seed). Environment i uses env_seed = derive(master_seed, i) and
// trajectory j inside it uses derive(env_seed, j).
template <class Env, class MakeEnv>
AgingResult run_aging(const AgingConfig& cfg, double s, MakeEnv&& make_env) {
  cfg.validate();
  if (!(s >= 3.0)) throw ValidationError("aging: s must be >= 3");
  const ScaleSet scales =
      ScaleSet::batm(std::floor(s), cfg.env.d, cfg.env.alpha, cfg.scale_options);
  const double r2 = cfg.c2_radius >= 0.0 ? cfg.c2_radius : scales.ball_radius();
  std::vector<double> eps_radius;
  for (double e : cfg.eps) eps_radius.push_back(e * std::sqrt(scales.a_n));
  const std::size_t n_counts = 3 + cfg.eps.size();

  using Tallies = std::vector<detail::EnvTally>;
  auto tallies = deterministic_reduce(
      cfg.n_env, cfg.workers, Tallies{},
      [&](Tallies& acc, std::size_t i) {
        detail::EnvTally t;
        t.index = i;
        t.seed = derive(cfg.master_seed, i);
        t.hits.assign(cfg.rhos.size(), std::vector<std::uint64_t>(n_counts, 0));
        const Env env = make_env(t.seed);
        for (std::uint64_t j = 0; j < cfg.n_traj; ++j) {
          const auto o = age_trajectory(env, s, cfg.rhos, derive(t.seed, j), cfg.max_jumps);
          t.jumps += o.jumps;
          if (o.excluded) {
            ++t.excluded;
            continue;
          }
          ++t.included;
          for (std::size_t r = 0; r < cfg.rhos.size(); ++r) {
            const auto& w = o.windows[r];
            const bool c1 = w.same, c2 = w.max_dist <= r2;
            auto& h = t.hits[r];
            h[0] += c1;
            h[1] += c2;
            h[2] += c1 && c2;
            for (std::size_t e = 0; e < eps_radius.size(); ++e) h[3 + e] += w.max_dist <= eps_radius[e];
          }
        }
        acc.push_back(std::move(t));
      },
      [](Tallies& a, const Tallies& b) { a.insert(a.end(), b.begin(), b.end()); }, 1);

  AgingResult res;
  for (const auto& t : tallies) {
    res.excluded += t.excluded;
    res.total_jumps += t.jumps;
  }
  for (std::size_t r = 0; r < cfg.rhos.size(); ++r) {
    for (std::size_t c = 0; c < n_counts; ++c) {
      const AgingKind kind = c == 0   ? AgingKind::C1
                             : c == 1 ? AgingKind::C2
                             : c == 2 ? AgingKind::C3
                                      : AgingKind::Ceps_batm;
      const double eps = c >= 3 ? cfg.eps[c - 3] : 0.0;
      std::vector<double> means;
      for (const auto& t : tallies) {
        EnvAgingRow row{kind, s, cfg.rhos[r], eps, t.index, t.seed, 0.0, t.included, t.excluded};
        if (t.included > 0) {
          row.estimate = static_cast<double>(t.hits[r][c]) / static_cast<double>(t.included);
          means.push_back(row.estimate);
        }
        res.per_env.push_back(row);
      }
      res.points.push_back(detail::summarize(kind, s, cfg.rhos[r], eps, cfg.env.alpha, means,
                                             cfg.n_env, cfg.n_traj, res.excluded));
    }
  }
  return res;
}

// BATM aging on Z^d with i.i.d. Pareto traps.
inline AgingResult run_batm_aging(const AgingConfig& cfg, double s) {
  auto lattice = [&](auto dim) {
    constexpr int D = decltype(dim)::value;
    return run_aging<LatticeEnv<D>>(cfg, s, [&](std::uint64_t seed) {
      EnvConfig e = cfg.env;
      e.env_seed = seed;
      return LatticeEnv<D>(e);
    });
  };
  cfg.validate();
  switch (cfg.env.d) {
    case 2: return lattice(std::integral_constant<int, 2>{});
    case 3: return lattice(std::integral_constant<int, 3>{});
    default: return lattice(std::integral_constant<int, 4>{});
  }
}

inline const AgingPoint& find_point(const AgingResult& r, AgingKind kind, double rho,
                                    double eps = 0.0) {
  for (const auto& p : r.points)
    if (p.kind == kind && p.rho == rho && p.eps == eps) return p;
  throw ContractViolation("find_point: no such aging point");
}

// Single-quantity entry points over the same engine.
inline AgingPoint estimate_C1(AgingConfig cfg, double s, double rho) {
  cfg.rhos = {rho};
  cfg.eps.clear();
  return find_point(run_batm_aging(cfg, s), AgingKind::C1, rho);
}

inline AgingPoint estimate_C2(AgingConfig cfg, double s, double rho) {
  cfg.rhos = {rho};
  cfg.eps.clear();
  return find_point(run_batm_aging(cfg, s), AgingKind::C2, rho);
}

inline AgingPoint estimate_C3(AgingConfig cfg, double s, double rho) {
  cfg.rhos = {rho};
  cfg.eps.clear();
  return find_point(run_batm_aging(cfg, s), AgingKind::C3, rho);
}

inline AgingPoint estimate_Ceps_batm(AgingConfig cfg, double s, double rho, double eps) {
  cfg.rhos = {rho};
  cfg.eps = {eps};
  return find_point(run_batm_aging(cfg, s), AgingKind::Ceps_batm, rho, eps);
}

struct FkAgingConfig {
  double alpha = 0.5;
  int d = 2;
  std::uint64_t n_samples = 10000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  int min_level = 4;
  int max_level = 14;
  SubordinatorOptions subordinator{};

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("fk aging: alpha must lie in (0,1)");
    if (d < 1) throw ValidationError("fk aging: d must be >= 1");
    if (n_samples == 0) throw ValidationError("fk aging: n_samples must be positive");
    if (min_level < 1 || max_level < min_level || max_level > 24) {
      throw ValidationError("fk aging: need 1 <= min_level <= max_level <= 24");
    }
  }
};

namespace detail {

// Dyadic refinement level at which sup |W| over [0,1] first exceeds each
// threshold, for a d-dimensional Brownian motion built by midpoint bridges.
// Returns max_level + 1 where the threshold is never exceeded.
inline std::vector<int> exceedance_levels(int d, const std::vector<double>& thresholds,
                                          int max_level, std::uint64_t seed) {
  constexpr double kSafe = 9.0;  // P(sup_{[0,1]} |W| > 9) is below 1e-17 for d <= 4
  std::vector<int> level(thresholds.size(), max_level + 1);
  if (std::all_of(thresholds.begin(), thresholds.end(), [](double t) { return t >= kSafe; })) {
    return level;
  }
  CounterRng g(seed, Substream::kAux);
  const auto D = static_cast<std::size_t>(d);
  std::vector<double> pts(2 * D, 0.0);  // W(0), W(1)
  for (std::size_t c = 0; c < D; ++c) pts[D + c] = standard_normal(g);
  double max_sq = 0.0;
  auto note = [&](int lvl) {
    const double m = std::sqrt(max_sq);
    bool open = false;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      if (level[k] > max_level && m > thresholds[k]) level[k] = lvl;
      open |= level[k] > max_level && thresholds[k] < kSafe;
    }
    return open;
  };
  auto norm_sq = [&](const double* p) {
    double r = 0.0;
    for (std::size_t c = 0; c < D; ++c) r += p[c] * p[c];
    return r;
  };
  max_sq = norm_sq(&pts[D]);
  if (!note(0)) return level;
  double h = 1.0;
  for (int lvl = 1; lvl <= max_level; ++lvl) {
    const std::size_t n_old = pts.size() / D;
    std::vector<double> next((2 * n_old - 1) * D);
    const double sd = std::sqrt(h / 4.0);
    for (std::size_t i = 0; i + 1 < n_old; ++i) {
      for (std::size_t c = 0; c < D; ++c) {
        next[2 * i * D + c] = pts[i * D + c];
        next[(2 * i + 1) * D + c] =
            0.5 * (pts[i * D + c] + pts[(i + 1) * D + c]) + sd * standard_normal(g);
      }
      max_sq = std::max(max_sq, norm_sq(&next[(2 * i + 1) * D]));
    }
    for (std::size_t c = 0; c < D; ++c) next[2 * (n_old - 1) * D + c] = pts[(n_old - 1) * D + c];
    pts.swap(next);
    h /= 2.0;
    if (!note(lvl)) break;
  }
  return level;
}

}  // namespace detail

// C^eps(1, rho) for Z = B_d(V^<-): P(max_{v in (1,1+rho)} |Z(v) - Z(1)| <= eps).
// V^<- maps [1, 1+rho] onto [V^<-(1), V^<-(1+rho)], so the maximum equals the
// Brownian range over a span Delta, scaled to sup_{[0,1]} |W| <= eps/sqrt(Delta).
// The supremum is approximated on dyadic grids; the level is doubled until the
// estimate moves by less than half its standard error.
inline std::vector<AgingPoint> estimate_Ceps_fk(const FkAgingConfig& cfg, double rho,
                                                const std::vector<double>& eps) {
  cfg.validate();
  if (!(rho > 0.0)) throw ValidationError("fk aging: rho must be positive");
  for (double e : eps)
    if (!(e > 0.0)) throw ValidationError("fk aging: eps must be positive");
  using Levels = std::vector<std::vector<int>>;
  Levels levels(cfg.n_samples);
  deterministic_reduce(
      cfg.n_samples, cfg.workers, 0,
      [&](int&, std::size_t i) {
        const auto seed = derive(cfg.seed, i);
        SubordinatorStream st(cfg.alpha, cfg.subordinator, seed);
        const std::vector<double> grid{1.0, 1.0 + rho};
        const auto inv = inverse_subordinator(st, grid);
        const double delta = inv[1] - inv[0];
        if (delta <= 0.0) {
          levels[i].assign(eps.size(), cfg.max_level + 1);
          return;
        }
        std::vector<double> th;
        for (double e : eps) th.push_back(e / std::sqrt(delta));
        levels[i] = detail::exceedance_levels(cfg.d, th, cfg.max_level, derive(seed, 1));
      },
      [](int&, const int&) {});

  std::vector<AgingPoint> out;
  const double n = static_cast<double>(cfg.n_samples);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    auto est = [&](int lvl) {
      std::uint64_t c = 0;
      for (const auto& l : levels) c += l[k] > lvl;
      return static_cast<double>(c) / n;
    };
    int chosen = cfg.max_level;
    std::uint64_t flagged = 0;
    bool stable = false;
    for (int lvl = cfg.min_level + 1; lvl <= cfg.max_level; ++lvl) {
      const double a = est(lvl - 1), b = est(lvl);
      if (std::abs(a - b) < binomial_se(b, n) / 2.0) {
        chosen = lvl;
        stable = true;
        break;
      }
    }
    if (!stable) {
      for (const auto& l : levels) flagged += l[k] == cfg.max_level;
    }
    AgingPoint p;
    p.kind = AgingKind::Ceps_fk;
    p.s = 1.0;
    p.rho = rho;
    p.eps = eps[k];
    p.estimate = est(chosen);
    p.std_error = binomial_se(p.estimate, n);
    p.n_env = 1;
    p.n_traj_per_env = cfg.n_samples;
    p.arcsine_target = arcsine_target(cfg.alpha, rho);
    p.excluded = flagged;
    out.push_back(p);
  }
  return out;
}

}  // namespace trapclock
