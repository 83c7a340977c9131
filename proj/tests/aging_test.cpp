#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "trapclock/aging.hpp"

using namespace trapclock;

namespace {

AgingConfig small_config() {
  AgingConfig c;
  c.env.d = 2;
  c.env.alpha = 0.5;
  c.env.theta = 0.0;
  c.master_seed = 11;
  c.n_env = 20;
  c.n_traj = 10;
  c.rhos = {0.5, 1.0, 3.0};
  return c;
}

// One very deep trap at the origin.
class FrozenEnv : public LatticeEnv<2> {
 public:
  using LatticeEnv<2>::LatticeEnv;
  double tau(const site_type& x) const {
    return x == site_type{} ? 1e12 : LatticeEnv<2>::tau(x);
  }
};

// Walks the same trajectory seeds as run_aging and reports whether the
// sojourn containing s also contains s(1+rho).
double no_jump_fraction(const AgingConfig& cfg, double s, double rho) {
  double sum = 0.0;
  for (std::uint64_t i = 0; i < cfg.n_env; ++i) {
    EnvConfig e = cfg.env;
    e.env_seed = derive(cfg.master_seed, i);
    const LatticeEnv<2> env(e);
    std::uint64_t hits = 0;
    for (std::uint64_t j = 0; j < cfg.n_traj; ++j) {
      Walker<LatticeEnv<2>> w(env, ChainKind::ContinuousVsrw, {}, derive(e.env_seed, j));
      double p0 = 0.0;
      for (;;) {
        const auto so = w.advance();
        const double p1 = p0 + so.local_time * env.tau(so.site);
        if (p1 > s) {
          hits += p1 > s * (1.0 + rho);
          break;
        }
        p0 = p1;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(cfg.n_traj);
  }
  return sum / static_cast<double>(cfg.n_env);
}

}  // namespace

TEST(Aging, TinyRhoGivesOne) {
  auto c = small_config();
  c.rhos = {1e-9};
  const auto r = run_batm_aging(c, 1000.0);
  EXPECT_GT(find_point(r, AgingKind::C1, 1e-9).estimate, 0.99);
  EXPECT_GT(find_point(r, AgingKind::C3, 1e-9).estimate, 0.99);
}

TEST(Aging, FrozenTrapHoldsTheWalker) {
  auto c = small_config();
  c.rhos = {1.0};
  const auto r = run_aging<FrozenEnv>(c, 1e4, [&](std::uint64_t seed) {
    EnvConfig e = c.env;
    e.env_seed = seed;
    return FrozenEnv(e);
  });
  const auto& p = find_point(r, AgingKind::C1, 1.0);
  EXPECT_GT(p.estimate, 0.99);
  EXPECT_EQ(find_point(r, AgingKind::C2, 1.0).estimate, 1.0);
}

TEST(Aging, InfiniteRadius) {
  auto c = small_config();
  c.c2_radius = std::numeric_limits<double>::infinity();
  c.eps = {std::numeric_limits<double>::infinity()};
  const auto r = run_batm_aging(c, 1000.0);
  for (double rho : c.rhos) {
    EXPECT_EQ(find_point(r, AgingKind::C2, rho).estimate, 1.0);
    EXPECT_EQ(find_point(r, AgingKind::C3, rho).estimate, find_point(r, AgingKind::C1, rho).estimate);
    EXPECT_EQ(find_point(r, AgingKind::Ceps_batm, rho, c.eps[0]).estimate, 1.0);
  }
}

TEST(Aging, ZeroRadiusIsNoJumpProbability) {
  auto c = small_config();
  c.c2_radius = 0.0;
  const auto r = run_batm_aging(c, 1000.0);
  for (double rho : c.rhos) {
    EXPECT_NEAR(find_point(r, AgingKind::C2, rho).estimate, no_jump_fraction(c, 1000.0, rho), 1e-12);
  }
}

TEST(Aging, C3BelowC1AndC2) {
  auto c = small_config();
  c.eps = {0.05};
  for (double s : {1e3, 1e4}) {
    const auto r = run_batm_aging(c, s);
    for (double rho : c.rhos) {
      const double c1 = find_point(r, AgingKind::C1, rho).estimate;
      const double c2 = find_point(r, AgingKind::C2, rho).estimate;
      const double c3 = find_point(r, AgingKind::C3, rho).estimate;
      EXPECT_LE(c3, std::min(c1, c2));
    }
    for (const auto& p : r.points) {
      EXPECT_GE(p.estimate, 0.0);
      EXPECT_LE(p.estimate, 1.0);
      EXPECT_NEAR(p.arcsine_target, arcsine_cdf(0.5, 1.0 / (1.0 + p.rho)), 1e-12);
    }
    // Per-environment rows obey the same pathwise ordering.
    const std::size_t n = c.n_env;
    for (std::size_t k = 0; k + 2 * n < r.per_env.size(); k += (3 + c.eps.size()) * n) {
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LE(r.per_env[k + 2 * n + i].estimate, r.per_env[k + i].estimate);
        EXPECT_LE(r.per_env[k + 2 * n + i].estimate, r.per_env[k + n + i].estimate);
      }
    }
  }
}

TEST(Aging, WorkerCountDoesNotMatter) {
  auto c = small_config();
  c.eps = {0.1};
  c.workers = 1;
  const auto a = run_batm_aging(c, 5000.0);
  c.workers = 4;
  const auto b = run_batm_aging(c, 5000.0);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].estimate, b.points[i].estimate);
    EXPECT_EQ(a.points[i].std_error, b.points[i].std_error);
  }
  EXPECT_EQ(a.total_jumps, b.total_jumps);
}

TEST(Aging, JumpCapExcludesTrajectories) {
  auto c = small_config();
  c.max_jumps = 3;
  const auto r = run_batm_aging(c, 1e4);
  EXPECT_GT(r.excluded, 0u);
  EXPECT_EQ(find_point(r, AgingKind::C1, 1.0).excluded, r.excluded);
  std::uint64_t seen = 0;
  for (const auto& row : r.per_env)
    if (row.kind == AgingKind::C1 && row.rho == 1.0) seen += row.excluded;
  EXPECT_EQ(seen, r.excluded);
}

TEST(Aging, ValidationRejectsBadInput) {
  auto c = small_config();
  c.rhos = {0.0};
  EXPECT_THROW(run_batm_aging(c, 1000.0), ValidationError);
  c = small_config();
  c.env.d = 1;
  EXPECT_THROW(run_batm_aging(c, 1000.0), ValidationError);
  c = small_config();
  EXPECT_THROW(run_batm_aging(c, 1.0), ValidationError);
}

TEST(Aging, SmokeBand) {
  auto c = small_config();
  const auto r = run_batm_aging(c, 1e4);
  EXPECT_NEAR(find_point(r, AgingKind::C1, 1.0).estimate, 0.5, 0.2);
  EXPECT_EQ(r.excluded, 0u);
}

TEST(AgingFk, EpsStabilityAndArcsine) {
  FkAgingConfig f;
  f.alpha = 0.5;
  f.d = 2;
  f.n_samples = 10000;
  f.seed = 5;
  const auto v = estimate_Ceps_fk(f, 1.0, {0.05, 0.02});
  ASSERT_EQ(v.size(), 2u);
  const double se = std::hypot(v[0].std_error, v[1].std_error);
  EXPECT_LE(std::abs(v[0].estimate - v[1].estimate), 3.0 * se);
  for (const auto& p : v) {
    EXPECT_NEAR(p.estimate, 0.5, 0.05);
    EXPECT_EQ(p.kind, AgingKind::Ceps_fk);
  }
}

TEST(AgingFk, DimensionFree) {
  FkAgingConfig f;
  f.alpha = 0.5;
  f.n_samples = 10000;
  f.d = 2;
  f.seed = 6;
  const auto a = estimate_Ceps_fk(f, 1.0, {0.05});
  f.d = 3;
  f.seed = 7;
  const auto b = estimate_Ceps_fk(f, 1.0, {0.05});
  EXPECT_LE(std::abs(a[0].estimate - b[0].estimate), 3.0 * std::hypot(a[0].std_error, b[0].std_error));
}

TEST(AgingFk, InfiniteEpsIsOne) {
  FkAgingConfig f;
  f.n_samples = 500;
  const auto v = estimate_Ceps_fk(f, 1.0, {std::numeric_limits<double>::infinity()});
  EXPECT_EQ(v[0].estimate, 1.0);
}

TEST(AgingFk, WorkerCountDoesNotMatter) {
  FkAgingConfig f;
  f.n_samples = 2000;
  f.workers = 1;
  const auto a = estimate_Ceps_fk(f, 3.0, {0.1});
  f.workers = 3;
  const auto b = estimate_Ceps_fk(f, 3.0, {0.1});
  EXPECT_EQ(a[0].estimate, b[0].estimate);
}
