#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "trapclock/chains.hpp"
#include "trapclock/clock.hpp"
#include "trapclock/env.hpp"
#include "trapclock/errors.hpp"
#include "trapclock/parallel.hpp"
#include "trapclock/rng.hpp"
#include "trapclock/stats.hpp"

namespace trapclock {

enum class EstimateName {
  Q_u,
  Pi_t,
  Nu_t,
  Sigma_t,
  M_eps,
  A0_tail,
  A1_return_sum,
  HeatKernel,
  Range,
  ExitTime,
};

constexpr std::string_view to_string(EstimateName n) {
  switch (n) {
    case EstimateName::Q_u: return "Q_u";
    case EstimateName::Pi_t: return "Pi_t";
    case EstimateName::Nu_t: return "Nu_t";
    case EstimateName::Sigma_t: return "Sigma_t";
    case EstimateName::M_eps: return "M_eps";
    case EstimateName::A0_tail: return "A0_tail";
    case EstimateName::A1_return_sum: return "A1_return_sum";
    case EstimateName::HeatKernel: return "HeatKernel";
    case EstimateName::Range: return "Range";
    case EstimateName::ExitTime: return "ExitTime";
  }
  return "?";
}

// Quenched: one environment for every sample. Annealed: sample i runs in its
// own environment.
enum class EnvMode { Quenched, Annealed };

constexpr std::string_view to_string(EnvMode m) {
  return m == EnvMode::Quenched ? "quenched" : "annealed";
}

struct EstimatorOptions {
  ChainKind kind = ChainKind::ContinuousVsrw;
  EnvMode mode = EnvMode::Quenched;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ConditionEstimate {
  EstimateName name = EstimateName::Q_u;
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  double n = 0.0;
  double t = 0.0;
  double u = 0.0;
  double eps = 0.0;
};

namespace detail {

constexpr std::uint64_t kEnvTag = 0x656e76ULL << 40;
constexpr std::uint64_t kMainTag = 0x6d61696eULL << 32;

inline std::uint64_t sample_seed(const EstimatorOptions& opt, std::size_t i) {
  return derive(opt.seed, i);
}

inline std::uint64_t fresh_seed(std::uint64_t sample, std::int64_t k, int copy) {
  return derive(sample, 2 * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(copy));
}

template <class Env>
Env environment_for(const Env& env, EnvMode mode, std::uint64_t sample) {
  if constexpr (requires { env.config(); }) {
    if (mode == EnvMode::Annealed) {
      EnvConfig cfg = env.config();
      cfg.env_seed = derive(sample, kEnvTag);
      return Env(cfg);
    }
  }
  return env;
}

template <class Site>
bool in_box(const Site& x, double r) {
  if constexpr (std::is_integral_v<Site>) {
    return true;
  } else {
    for (auto c : x)
      if (std::abs(static_cast<double>(c)) > r) return false;
    return true;
  }
}

inline void require_samples(std::uint64_t n_traj) {
  require(n_traj > 0, "estimator: n_traj must be positive");
}

inline std::int64_t blocks_or_throw(const ScaleSet& scales, double t) {
  require(t > 0.0, "estimator: t must be positive");
  const auto k = scales.k_n(t);
  if (k < 2) {
    throw DegenerateScale("k_n(t) = " + std::to_string(k) + " < 2: no blocks to average");
  }
  return k;
}

struct Moments {
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sumsq += o.sumsq;
  }
  // Mean and standard error over n samples, zeros included implicitly.
  std::pair<double, double> mean_se(std::uint64_t n) const {
    const double m = sum / static_cast<double>(n);
    if (n < 2) return {m, 0.0};
    const double var = std::max(0.0, (sumsq - static_cast<double>(n) * m * m) / (n - 1.0));
    return {m, std::sqrt(var / static_cast<double>(n))};
  }
};

}  // namespace detail

// Streams the raw clock of one chain and stops at prescribed internal times.
// Continuous: S(T) = int_0^T tau(J(s)) ds. Discrete: S(T) = sum_{i <= floor T}
// e_i / lambda(J(i)); the i = 0 term is Z_0 and is reported separately.
template <class Env>
class BlockWalker {
 public:
  using site_type = typename Env::site_type;

  BlockWalker(const Env& env, ChainKind kind, const site_type& start, std::uint64_t seed)
      : env_(&env), kind_(kind), walker_(env, kind, start, seed), site_(start) {
    if (kind_ == ChainKind::DiscreteJ) {
      const auto s = walker_.advance();
      z0_ = s.local_time / total_rate(env, s.site);
    } else {
      load_sojourn();
    }
  }

  double z0() const noexcept { return z0_; }
  const site_type& site() const noexcept { return site_; }
  double position() const noexcept { return pos_; }
  std::uint64_t jumps() const noexcept { return jumps_; }

  // Clock increment S(end) - S(position) and move to internal time `end`.
  double advance_to(double end) {
    require(end >= pos_, "BlockWalker: internal time must not decrease");
    double acc = 0.0;
    if (kind_ == ChainKind::ContinuousVsrw) {
      while (sojourn_end_ <= end) {
        acc += (sojourn_end_ - std::max(pos_, sojourn_start_)) * tau_;
        pos_ = sojourn_end_;
        load_sojourn();
        ++jumps_;
      }
      acc += (end - std::max(pos_, sojourn_start_)) * tau_;
    } else {
      const auto target = static_cast<std::int64_t>(std::floor(end));
      while (step_ < target) {
        const auto s = walker_.advance();
        acc += s.local_time / total_rate(*env_, s.site);
        site_ = s.site;
        ++step_;
        ++jumps_;
      }
    }
    pos_ = end;
    return acc;
  }

 private:
  void load_sojourn() {
    const auto s = walker_.advance();
    site_ = s.site;
    tau_ = env_->tau(s.site);
    sojourn_start_ = sojourn_end_;
    sojourn_end_ = sojourn_start_ + s.local_time;
  }

  const Env* env_;
  ChainKind kind_;
  Walker<Env> walker_;
  site_type site_;
  double z0_ = 0.0;
  double pos_ = 0.0;
  double tau_ = 0.0;
  double sojourn_start_ = 0.0;
  double sojourn_end_ = 0.0;
  std::int64_t step_ = 0;
  std::uint64_t jumps_ = 0;
};

// Z_{n,1} of a fresh chain started at x.
template <class Env>
double first_block(const Env& env, ChainKind kind, const typename Env::site_type& x,
                   const ScaleSet& scales, std::uint64_t seed) {
  BlockWalker<Env> w(env, kind, x, seed);
  return w.advance_to(scales.theta_n) / scales.c_n;
}

// Q_n^u(x) = P_x(Z_{n,1} > u).
template <class Env>
ConditionEstimate estimate_Q_u(const Env& env, const ScaleSet& scales,
                               const typename Env::site_type& x, double u, std::uint64_t n_traj,
                               const EstimatorOptions& opt = {}) {
  detail::require_samples(n_traj);
  require(u >= 0.0, "estimate_Q_u: u must be nonnegative");
  const auto hits = deterministic_reduce(
      n_traj, opt.workers, std::uint64_t{0},
      [&](std::uint64_t& acc, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        acc += first_block(e, opt.kind, x, scales, seed) > u;
      },
      [](std::uint64_t& a, const std::uint64_t& b) { a += b; });
  const double p = static_cast<double>(hits) / static_cast<double>(n_traj);
  return {EstimateName::Q_u, p, binomial_se(p, static_cast<double>(n_traj)), n_traj, scales.n,
          scales.theta_n / scales.a_n, u, 0.0};
}

// P_mu(Z_{n,1} + Z_{n,0} > u) for mu = delta_start.
template <class Env>
ConditionEstimate estimate_A0_tail(const Env& env, const ScaleSet& scales,
                                   const typename Env::site_type& start, double u,
                                   std::uint64_t n_traj, const EstimatorOptions& opt = {}) {
  detail::require_samples(n_traj);
  const auto hits = deterministic_reduce(
      n_traj, opt.workers, std::uint64_t{0},
      [&](std::uint64_t& acc, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        BlockWalker<Env> w(e, opt.kind, start, seed);
        const double z1 = w.advance_to(scales.theta_n) / scales.c_n;
        acc += z1 + w.z0() / scales.c_n > u;
      },
      [](std::uint64_t& a, const std::uint64_t& b) { a += b; });
  const double p = static_cast<double>(hits) / static_cast<double>(n_traj);
  return {EstimateName::A0_tail, p, binomial_se(p, static_cast<double>(n_traj)), n_traj, scales.n,
          0.0, u, 0.0};
}

template <class Site>
struct PiEstimate {
  std::int64_t k_n = 0;
  double box_radius = 0.0;
  std::uint64_t n_samples = 0;
  std::map<Site, std::pair<double, double>> sites;  // value, SE
  double remainder = 0.0;
  double remainder_se = 0.0;
};

// Grids of nu, sigma and m estimates from one set of trajectories.
struct ConditionSweep {
  std::vector<ConditionEstimate> nu;
  std::vector<ConditionEstimate> sigma;
  std::vector<ConditionEstimate> m;
};

namespace detail {

template <class Site>
struct SweepAcc {
  std::vector<Moments> nu, sigma, m;
  std::map<Site, Moments> pi;
  Moments remainder;

  void merge(const SweepAcc& o) {
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i].merge(o.nu[i]);
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i].merge(o.sigma[i]);
    for (std::size_t i = 0; i < m.size(); ++i) m[i].merge(o.m[i]);
    for (const auto& [x, mo] : o.pi) pi[x].merge(mo);
    remainder.merge(o.remainder);
  }
};

struct SweepRequest {
  std::vector<double> u_grid;
  std::vector<double> eps_grid;
  bool want_sigma = false;
  bool want_pi = false;
  double box_radius = 0.0;
};

// Per sample: a main chain from `start` visits J(k theta_n), k = 1..k_n(t)-1,
// and from each visited site two independent fresh chains give Z^1 and Z^2.
// Then sum_k 1{Z^1 > u} is unbiased for nu_n^t(u, inf), sum_k 1{Z^1 > u}
// 1{Z^2 > u} for sigma_n^t and sum_k Z^1 1{Z^1 <= eps} for m_n^t(eps).
template <class Env>
SweepAcc<typename Env::site_type> sweep(const Env& env, const ScaleSet& scales,
                                        const typename Env::site_type& start, double t,
                                        const SweepRequest& req, std::uint64_t n_traj,
                                        const EstimatorOptions& opt) {
  using Site = typename Env::site_type;
  require_samples(n_traj);
  const std::int64_t kn = blocks_or_throw(scales, t);
  for (double u : req.u_grid) require(u >= 0.0, "estimator: u must be nonnegative");
  for (double e : req.eps_grid) require(e >= 0.0, "estimator: eps must be nonnegative");
  SweepAcc<Site> init;
  init.nu.resize(req.u_grid.size());
  init.sigma.resize(req.want_sigma ? req.u_grid.size() : 0);
  init.m.resize(req.eps_grid.size());
  const bool need_z = !req.u_grid.empty() || !req.eps_grid.empty();
  const double inv_kn = 1.0 / static_cast<double>(kn);

  return deterministic_reduce(
      n_traj, opt.workers, init,
      [&](SweepAcc<Site>& acc, std::size_t i) {
        const auto seed = sample_seed(opt, i);
        const Env e = environment_for(env, opt.mode, seed);
        BlockWalker<Env> main(e, opt.kind, start, derive(seed, kMainTag));
        std::vector<double> nu(req.u_grid.size(), 0.0), sg(init.sigma.size(), 0.0),
            m(req.eps_grid.size(), 0.0);
        std::map<Site, double> visits;
        double outside = 0.0;
        for (std::int64_t k = 1; k < kn; ++k) {
          main.advance_to(scales.theta_n * static_cast<double>(k));
          const Site y = main.site();
          if (req.want_pi) {
            if (in_box(y, req.box_radius))
              visits[y] += inv_kn;
            else
              outside += inv_kn;
          }
          if (!need_z) continue;
          const double z1 = first_block(e, opt.kind, y, scales, fresh_seed(seed, k, 0));
          const double z2 = req.want_sigma ? first_block(e, opt.kind, y, scales, fresh_seed(seed, k, 1))
                                           : 0.0;
          for (std::size_t j = 0; j < req.u_grid.size(); ++j) {
            const bool a = z1 > req.u_grid[j];
            nu[j] += a;
            if (req.want_sigma) sg[j] += a && z2 > req.u_grid[j];
          }
          for (std::size_t j = 0; j < req.eps_grid.size(); ++j)
            if (z1 <= req.eps_grid[j]) m[j] += z1;
        }
        for (std::size_t j = 0; j < nu.size(); ++j) acc.nu[j].add(nu[j]);
        for (std::size_t j = 0; j < sg.size(); ++j) acc.sigma[j].add(sg[j]);
        for (std::size_t j = 0; j < m.size(); ++j) acc.m[j].add(m[j]);
        for (const auto& [x, v] : visits) acc.pi[x].add(v);
        acc.remainder.add(outside);
      },
      [](SweepAcc<Site>& a, const SweepAcc<Site>& b) { a.merge(b); });
}

}  // namespace detail

template <class Env>
ConditionSweep estimate_conditions(const Env& env, const ScaleSet& scales,
                                   const typename Env::site_type& start, double t,
                                   const std::vector<double>& u_grid,
                                   const std::vector<double>& eps_grid, std::uint64_t n_traj,
                                   const EstimatorOptions& opt = {}) {
  detail::SweepRequest req;
  req.u_grid = u_grid;
  req.eps_grid = eps_grid;
  req.want_sigma = true;
  const auto acc = detail::sweep(env, scales, start, t, req, n_traj, opt);
  ConditionSweep out;
  for (std::size_t j = 0; j < u_grid.size(); ++j) {
    const auto [v, se] = acc.nu[j].mean_se(n_traj);
    out.nu.push_back({EstimateName::Nu_t, v, se, n_traj, scales.n, t, u_grid[j], 0.0});
    const auto [sv, sse] = acc.sigma[j].mean_se(n_traj);
    out.sigma.push_back({EstimateName::Sigma_t, sv, sse, n_traj, scales.n, t, u_grid[j], 0.0});
  }
  for (std::size_t j = 0; j < eps_grid.size(); ++j) {
    const auto [v, se] = acc.m[j].mean_se(n_traj);
    out.m.push_back({EstimateName::M_eps, v, se, n_traj, scales.n, t, 0.0, eps_grid[j]});
  }
  return out;
}

template <class Env>
ConditionEstimate estimate_nu_t(const Env& env, const ScaleSet& scales, double t, double u,
                                std::uint64_t n_traj, const EstimatorOptions& opt = {},
                                const typename Env::site_type& start = {}) {
  require(u > 0.0, "estimate_nu_t: u must be positive");
  return estimate_conditions(env, scales, start, t, {u}, {}, n_traj, opt).nu.front();
}

template <class Env>
ConditionEstimate estimate_sigma_t(const Env& env, const ScaleSet& scales, double t, double u,
                                   std::uint64_t n_traj, const EstimatorOptions& opt = {},
                                   const typename Env::site_type& start = {}) {
  require(u > 0.0, "estimate_sigma_t: u must be positive");
  return estimate_conditions(env, scales, start, t, {u}, {}, n_traj, opt).sigma.front();
}

// eps = +infinity gives k_n(t) E Z_{n,1} without truncation.
template <class Env>
ConditionEstimate estimate_m_eps(const Env& env, const ScaleSet& scales, double t, double eps,
                                 std::uint64_t n_traj, const EstimatorOptions& opt = {},
                                 const typename Env::site_type& start = {}) {
  return estimate_conditions(env, scales, start, t, {}, {eps}, n_traj, opt).m.front();
}

// pi_n^t restricted to the sup-norm box of the given radius (default d_n(t)).
// Per trajectory the reported masses sum to (k_n(t) - 1) / k_n(t).
template <class Env>
PiEstimate<typename Env::site_type> estimate_pi_t(const Env& env, const ScaleSet& scales, double t,
                                                  std::uint64_t n_traj,
                                                  const EstimatorOptions& opt = {},
                                                  double box_radius = -1.0,
                                                  const typename Env::site_type& start = {}) {
  detail::SweepRequest req;
  req.want_pi = true;
  req.box_radius = box_radius >= 0.0 ? box_radius : scales.d_n(t);
  const auto acc = detail::sweep(env, scales, start, t, req, n_traj, opt);
  PiEstimate<typename Env::site_type> out;
  out.k_n = scales.k_n(t);
  out.box_radius = req.box_radius;
  out.n_samples = n_traj;
  for (const auto& [x, mo] : acc.pi) out.sites[x] = mo.mean_se(n_traj);
  std::tie(out.remainder, out.remainder_se) = acc.remainder.mean_se(n_traj);
  return out;
}

// Partial sums sum_{k' <= k} P_x(J(k' theta_n) = x), k = 1..k_n(t)-1.
struct ReturnSumProfile {
  std::vector<double> partial;
  std::vector<double> partial_se;
  ConditionEstimate final;
};

template <class Env>
ReturnSumProfile return_sum(const Env& env, const ScaleSet& scales,
                            const typename Env::site_type& x, double t, std::uint64_t n_traj,
                            const EstimatorOptions& opt = {}) {
  detail::require_samples(n_traj);
  const std::int64_t kn = detail::blocks_or_throw(scales, t);
  const auto len = static_cast<std::size_t>(kn - 1);
  const auto acc = deterministic_reduce(
      n_traj, opt.workers, std::vector<detail::Moments>(len),
      [&](std::vector<detail::Moments>& a, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        BlockWalker<Env> w(e, opt.kind, x, seed);
        double s = 0.0;
        for (std::int64_t k = 1; k < kn; ++k) {
          w.advance_to(scales.theta_n * static_cast<double>(k));
          s += w.site() == x;
          a[static_cast<std::size_t>(k - 1)].add(s);
        }
      },
      [](std::vector<detail::Moments>& a, const std::vector<detail::Moments>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i].merge(b[i]);
      });
  ReturnSumProfile out;
  for (const auto& mo : acc) {
    const auto [v, se] = mo.mean_se(n_traj);
    out.partial.push_back(v);
    out.partial_se.push_back(se);
  }
  out.final = {EstimateName::A1_return_sum, out.partial.back(), out.partial_se.back(), n_traj,
               scales.n, t, 0.0, 0.0};
  return out;
}

// q_t(x, y) = P_x(J(t) = y); the VSRW is symmetric, so the counting measure is
// reversible and no normalization is needed.
template <class Env>
ConditionEstimate heat_kernel_mc(const Env& env, const typename Env::site_type& x,
                                 const typename Env::site_type& y, double t, std::uint64_t n_traj,
                                 const EstimatorOptions& opt = {}) {
  detail::require_samples(n_traj);
  require(t >= 0.0, "heat_kernel_mc: t must be nonnegative");
  const auto hits = deterministic_reduce(
      n_traj, opt.workers, std::uint64_t{0},
      [&](std::uint64_t& acc, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        BlockWalker<Env> w(e, opt.kind, x, seed);
        w.advance_to(t);
        acc += w.site() == y;
      },
      [](std::uint64_t& a, const std::uint64_t& b) { a += b; });
  const double p = static_cast<double>(hits) / static_cast<double>(n_traj);
  return {EstimateName::HeatKernel, p, binomial_se(p, static_cast<double>(n_traj)), n_traj, 0.0, t,
          0.0, 0.0};
}

struct RangeEstimate {
  ConditionEstimate mean;
  double second_moment = 0.0;
  double second_moment_se = 0.0;
};

// R_m = number of distinct sites among J(0), ..., J(m) (m jumps).
template <class Env>
RangeEstimate range_stat(const Env& env, std::int64_t m, std::uint64_t n_traj,
                         const EstimatorOptions& opt = {},
                         const typename Env::site_type& start = {}) {
  detail::require_samples(n_traj);
  require(m >= 0, "range_stat: m must be nonnegative");
  using Site = typename Env::site_type;
  struct Acc {
    detail::Moments r, r2;
  };
  const auto acc = deterministic_reduce(
      n_traj, opt.workers, Acc{},
      [&](Acc& a, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        Walker<Env> w(e, ChainKind::DiscreteJ, start, seed);
        std::unordered_set<Site, typename Env::site_hash> seen;
        seen.insert(start);
        for (std::int64_t k = 0; k < m; ++k) seen.insert(w.advance().next);
        const double r = static_cast<double>(seen.size());
        a.r.add(r);
        a.r2.add(r * r);
      },
      [](Acc& a, const Acc& b) {
        a.r.merge(b.r);
        a.r2.merge(b.r2);
      });
  RangeEstimate out;
  const auto [v, se] = acc.r.mean_se(n_traj);
  out.mean = {EstimateName::Range, v, se, n_traj, 0.0, static_cast<double>(m), 0.0, 0.0};
  std::tie(out.second_moment, out.second_moment_se) = acc.r2.mean_se(n_traj);
  return out;
}

// P_x(eta(B_r(x)) <= m): the chain leaves the closed Euclidean ball of radius r
// around x by internal time m.
template <class Env>
ConditionEstimate exit_time_cdf(const Env& env, double r, double m, std::uint64_t n_traj,
                                const EstimatorOptions& opt = {},
                                const typename Env::site_type& x = {}) {
  detail::require_samples(n_traj);
  require(r >= 0.0 && m >= 0.0, "exit_time_cdf: r and m must be nonnegative");
  const auto hits = deterministic_reduce(
      n_traj, opt.workers, std::uint64_t{0},
      [&](std::uint64_t& acc, std::size_t i) {
        const auto seed = detail::sample_seed(opt, i);
        const Env e = detail::environment_for(env, opt.mode, seed);
        Walker<Env> w(e, opt.kind, x, seed);
        double t = 0.0;
        for (;;) {
          const auto s = w.advance();
          t += opt.kind == ChainKind::ContinuousVsrw ? s.local_time : 1.0;
          if (t > m) break;
          if (Env::distance(s.next, x) > r) {
            ++acc;
            break;
          }
        }
      },
      [](std::uint64_t& a, const std::uint64_t& b) { a += b; });
  const double p = static_cast<double>(hits) / static_cast<double>(n_traj);
  return {EstimateName::ExitTime, p, binomial_se(p, static_cast<double>(n_traj)), n_traj, 0.0, m,
          r, 0.0};
}

template <int D>
struct TrapSetSample {
  std::vector<Site<D>> sites;
  double eps_n = 0.0;
  double box_radius = 0.0;
};

// Exhaustive scan of the sup-norm box for T_n = {gamma_n(x) > eps_n,
// max_{y~x} tau(y) <= eps_n^(-2/alpha)}, gamma_n(x) = tau(x)/c_n.
template <int D>
TrapSetSample<D> trap_set(const LatticeEnv<D>& env, const ScaleSet& scales, std::int64_t radius) {
  require(radius >= 1, "trap_set: box radius must be >= 1");
  TrapSetSample<D> out;
  out.eps_n = scales.eps_n;
  out.box_radius = static_cast<double>(radius);
  Site<D> x;
  x.fill(-radius);
  for (;;) {
    if (in_trap_set(env, scales, x)) out.sites.push_back(x);
    int i = 0;
    while (i < D && x[i] == radius) x[i++] = -radius;
    if (i == D) break;
    ++x[i];
  }
  return out;
}

}  // namespace trapclock
