#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trapclock/errors.hpp"
#include "trapclock/rng.hpp"

namespace trapclock {

// Parameters of the i.i.d. Pareto trap field on Z^d.
//
// P(tau > u) = (u / c_bar)^(-alpha) for u > c_bar and 1 otherwise; the jump
// rates of the trap dynamics interpolate through theta between pure
// holding-time traps (theta = 0) and conductance-like rates (theta = 1).
struct EnvConfig {
  int d = 2;
  double alpha = 0.5;
  double theta = 0.0;
  double c_bar = 1.0;
  std::uint64_t env_seed = 0;

  void validate() const {
    if (d < 1) throw ValidationError("env.d must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("env.alpha must lie in (0,1)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("env.theta must lie in [0,1]");
    if (!(c_bar > 0.0) || !std::isfinite(c_bar)) throw ValidationError("env.c_bar must be > 0");
  }
};

template <int D>
using Site = std::array<std::int64_t, D>;

template <int D>
struct SiteHash {
  std::size_t operator()(const Site<D>& x) const noexcept {
    std::uint64_t h = 0x51ed270b27a1f5c3ULL;
    for (auto c : x) h = mix64(h ^ (static_cast<std::uint64_t>(c) + kGoldenGamma));
    return static_cast<std::size_t>(h);
  }
};

template <int D>
constexpr Site<D> origin() {
  Site<D> o{};
  return o;
}

// Environment hash. h_0 = mix64(env_seed ^ K0); for coordinate i (0-based)
// h_{i+1} = mix64(h_i ^ (uint64(x_i) + (i + 1) * gamma)), gamma the golden
// ratio increment. The uniform is the top 53 bits of h_d placed in the open
// interval (0,1).
inline std::uint64_t site_hash(std::uint64_t env_seed, std::span<const std::int64_t> coords) {
  std::uint64_t h = mix64(env_seed ^ 0xd1b54a32d192ed03ULL);
  std::uint64_t i = 0;
  for (auto c : coords) {
    ++i;
    h = mix64(h ^ (static_cast<std::uint64_t>(c) + i * kGoldenGamma));
  }
  return h;
}

// Pareto(alpha, c_bar) by inversion of the uniform.
inline double tau_from_uniform(double u, double alpha, double c_bar) {
  return c_bar * std::pow(u, -1.0 / alpha);
}

// tau(x) for a runtime-dimension site.
inline double tau_at(const EnvConfig& cfg, std::span<const std::int64_t> x) {
  require(static_cast<int>(x.size()) == cfg.d,
          "tau_at: site has dimension " + std::to_string(x.size()) + ", environment has " +
              std::to_string(cfg.d));
  return tau_from_uniform(to_open_unit(site_hash(cfg.env_seed, x)), cfg.alpha, cfg.c_bar);
}

// Lazily evaluated trap field on Z^D. Holds no per-site storage; every query
// recomputes tau from the hash so the lattice needs no truncation.
template <int D>
class LatticeEnv {
 public:
  using site_type = Site<D>;
  using site_hash = SiteHash<D>;
  static constexpr int kDim = D;
  static constexpr int kDegree = 2 * D;

  explicit LatticeEnv(const EnvConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    require(cfg_.d == D, "LatticeEnv<" + std::to_string(D) + ">: config has d = " +
                             std::to_string(cfg_.d));
  }

  const EnvConfig& config() const noexcept { return cfg_; }
  double theta() const noexcept { return cfg_.theta; }
  double alpha() const noexcept { return cfg_.alpha; }

  double uniform_at(const site_type& x) const {
    return to_open_unit(trapclock::site_hash(cfg_.env_seed, std::span<const std::int64_t>(x)));
  }

  double tau(const site_type& x) const {
    return tau_from_uniform(uniform_at(x), cfg_.alpha, cfg_.c_bar);
  }

  // Order: -e_0, +e_0, -e_1, +e_1, ...
  std::array<site_type, kDegree> neighbors(const site_type& x) const {
    std::array<site_type, kDegree> out;
    for (int i = 0; i < D; ++i) {
      out[2 * i] = x;
      out[2 * i][i] -= 1;
      out[2 * i + 1] = x;
      out[2 * i + 1][i] += 1;
    }
    return out;
  }

  static bool adjacent(const site_type& x, const site_type& y) {
    std::int64_t l1 = 0;
    for (int i = 0; i < D; ++i) l1 += std::abs(x[i] - y[i]);
    return l1 == 1;
  }

  // Lexicographic order used to canonicalize symmetric rate evaluation.
  static bool precedes(const site_type& x, const site_type& y) { return x < y; }

  static double distance(const site_type& x, const site_type& y) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
      const double dx = static_cast<double>(x[i] - y[i]);
      s += dx * dx;
    }
    return std::sqrt(s);
  }

 private:
  EnvConfig cfg_;
};

// Finite loop-free graph with explicit trap depths; used for toy chains whose
// laws can be computed exactly by matrix powers.
class GraphEnv {
 public:
  using site_type = std::size_t;
  using site_hash = std::hash<std::size_t>;

  GraphEnv(std::vector<double> tau, std::vector<std::vector<std::size_t>> adjacency, double theta)
      : tau_(std::move(tau)), adj_(std::move(adjacency)), theta_(theta) {
    require(!tau_.empty() && tau_.size() == adj_.size(), "GraphEnv: tau/adjacency size mismatch");
    require(theta_ >= 0.0 && theta_ <= 1.0, "GraphEnv: theta must lie in [0,1]");
    for (std::size_t x = 0; x < adj_.size(); ++x) {
      require(tau_[x] > 0.0, "GraphEnv: tau must be positive");
      require(!adj_[x].empty(), "GraphEnv: isolated vertex");
      for (auto y : adj_[x]) {
        require(y < adj_.size() && y != x, "GraphEnv: bad edge");
        require(std::find(adj_[y].begin(), adj_[y].end(), x) != adj_[y].end(),
                "GraphEnv: adjacency must be symmetric");
      }
    }
  }

  // Cycle 0-1-...-(n-1)-0. For n = 2 this is a single edge.
  static GraphEnv cycle(std::vector<double> tau, double theta) {
    const std::size_t n = tau.size();
    require(n >= 2, "GraphEnv::cycle needs at least two vertices");
    std::vector<std::vector<std::size_t>> adj(n);
    if (n == 2) {
      adj[0] = {1};
      adj[1] = {0};
    } else {
      for (std::size_t x = 0; x < n; ++x) adj[x] = {(x + n - 1) % n, (x + 1) % n};
    }
    return GraphEnv(std::move(tau), std::move(adj), theta);
  }

  std::size_t size() const noexcept { return tau_.size(); }
  double theta() const noexcept { return theta_; }
  double tau(site_type x) const { return tau_.at(x); }
  std::span<const std::size_t> neighbors(site_type x) const { return adj_.at(x); }

  bool adjacent(site_type x, site_type y) const {
    const auto& a = adj_.at(x);
    return std::find(a.begin(), a.end(), y) != a.end();
  }
  static bool precedes(site_type x, site_type y) { return x < y; }

 private:
  std::vector<double> tau_;
  std::vector<std::vector<std::size_t>> adj_;
  double theta_;
};

// lambda(x,y) = tau(x)^(theta-1) tau(y)^theta for x ~ y.
template <class Env>
double edge_rate(const Env& env, const typename Env::site_type& x,
                 const typename Env::site_type& y) {
  require(env.adjacent(x, y), "edge_rate: sites are not nearest neighbors");
  const double th = env.theta();
  return std::pow(env.tau(x), th - 1.0) * std::pow(env.tau(y), th);
}

// VSRW rate (tau(x) tau(y))^theta, evaluated in canonical order so the result
// is bitwise symmetric.
template <class Env>
double vsrw_rate(const Env& env, const typename Env::site_type& x,
                 const typename Env::site_type& y) {
  require(env.adjacent(x, y), "vsrw_rate: sites are not nearest neighbors");
  const double th = env.theta();
  if (th == 0.0) return 1.0;
  const auto& lo = Env::precedes(y, x) ? y : x;
  const auto& hi = Env::precedes(y, x) ? x : y;
  return std::pow(env.tau(lo), th) * std::pow(env.tau(hi), th);
}

// Total jump rate of the trap dynamics at x: lambda(x) = sum_y lambda(x,y).
template <class Env>
double total_rate(const Env& env, const typename Env::site_type& x) {
  double s = 0.0;
  for (const auto& y : env.neighbors(x)) s += edge_rate(env, x, y);
  return s;
}

// Total VSRW holding rate: sum_y (tau(x) tau(y))^theta.
template <class Env>
double total_vsrw_rate(const Env& env, const typename Env::site_type& x) {
  double s = 0.0;
  for (const auto& y : env.neighbors(x)) s += vsrw_rate(env, x, y);
  return s;
}

}  // namespace trapclock
