#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "trapclock/clock.hpp"
#include "trapclock/stats.hpp"

using namespace trapclock;

namespace {

EnvConfig make_cfg(int d, double alpha, double theta, std::uint64_t seed) {
  EnvConfig c;
  c.d = d;
  c.alpha = alpha;
  c.theta = theta;
  c.env_seed = seed;
  return c;
}

template <class Env>
Trajectory<Env> vsrw(const Env& env, std::uint64_t seed, double horizon) {
  TrajectoryConfig<typename Env::site_type> tc;
  tc.traj_seed = seed;
  tc.horizon = horizon;
  return run_vsrw(env, tc);
}

ClockPath random_path(std::mt19937_64& g, ClockKind kind) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution flat(0.3);
  std::vector<double> bp{0.0}, val{flat(g) ? 0.0 : e(g)};
  for (int i = 0; i < 50; ++i) {
    bp.push_back(bp.back() + e(g));
    val.push_back(val.back() + (flat(g) ? 0.0 : e(g)));
  }
  return ClockPath(bp, val, kind);
}

}  // namespace

TEST(ScaleSet, TrapModelFormulas) {
  const auto s2 = ScaleSet::batm(1e4, 2, 0.5);
  EXPECT_DOUBLE_EQ(s2.c_n, 1e4);
  EXPECT_NEAR(s2.a_n, 100.0 * std::sqrt(std::log(1e4)), 1e-9);
  EXPECT_DOUBLE_EQ(s2.theta_n, 2.0);  // 10^0.3 < 2, floored
  EXPECT_NEAR(s2.eps_n, std::pow(std::log(2.0), -12.0), 1e-9);

  const auto big = ScaleSet::batm(1e12, 2, 0.5);
  EXPECT_NEAR(big.theta_n, std::pow(1e12, 0.075), 1e-9);

  const auto s3 = ScaleSet::batm(1e6, 3, 0.5);
  EXPECT_NEAR(s3.a_n, 1000.0, 1e-9);
  EXPECT_DOUBLE_EQ(s3.theta_n, 2.0);  // floor(1000^0.1) = 1
  EXPECT_NEAR(s3.eps_n, std::pow(2.0, -1.0 / 3.0), 1e-12);

  ScaleOptions theorem;
  theorem.policy = ThetaPolicy::Theorem;
  EXPECT_THROW(ScaleSet::batm(1e6, 3, 0.5, theorem), ValidationError);
  ScaleOptions bad_gamma;
  bad_gamma.gamma2 = 0.2;
  EXPECT_THROW(ScaleSet::batm(1e6, 2, 0.5, bad_gamma), ValidationError);
  EXPECT_THROW(ScaleSet::batm(2.0, 2, 0.5), ValidationError);
}

TEST(ScaleSet, BlockCountFloorArithmetic) {
  const auto s = ScaleSet::custom(100.0, 1000.0, 10.0, 0.5);
  EXPECT_EQ(s.k_n(2.0), 200);
  EXPECT_EQ(s.k_n(0.009), 0);
}

TEST(BuildClock, ContinuousSingleHolding) {
  const auto g = GraphEnv::cycle({7.0, 1.0}, 0.0);
  Trajectory<GraphEnv> tr;
  tr.start = 0;
  tr.horizon = 3.0;
  tr.final_holding = 3.0;
  const auto clock = build_clock(g, tr);
  EXPECT_DOUBLE_EQ(clock.value_at(3.0), 21.0);
  EXPECT_DOUBLE_EQ(clock.value_at(1.5), 10.5);
}

TEST(BuildClock, DiscreteIncrementIsMarkOverRate) {
  // One neighbor, theta = 0: lambda(x) = 1 / tau(x) = 0.5.
  const auto g = GraphEnv::cycle({2.0, 1.0}, 0.0);
  Trajectory<GraphEnv> tr;
  tr.kind = ChainKind::DiscreteJ;
  tr.start = 0;
  tr.horizon = 1.0;
  tr.jumps.push_back({1.0, 0, 1, 2.0});
  tr.final_holding = 1.0;
  const auto clock = build_clock(g, tr);
  EXPECT_DOUBLE_EQ(clock.values().front(), 4.0);
  EXPECT_DOUBLE_EQ(clock.value_at(1.0), 5.0);
  EXPECT_DOUBLE_EQ(clock.value_at(0.5), 4.0);
}

TEST(BuildClock, EventStreamEqualsLedgerSum) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.4, 41));
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto tr = vsrw(env, s, 150.0);
    const auto clock = build_clock(env, tr);
    const double ledger = ledger_clock(env, tr.ledger);
    EXPECT_NEAR(clock.final_value(), ledger, 1e-10 * ledger);
  }
}

TEST(Rescale, ZeroTimeAndDivision) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.0, 41));
  const auto s = ScaleSet::custom(100.0, 10.0, 2.0, 0.5);
  TrajectoryConfig<Site<2>> tc;
  tc.chain_kind = ChainKind::DiscreteJ;
  tc.horizon = 20;
  const auto dtr = run_discrete(env, tc);
  const auto dclock = build_clock(env, dtr);
  EXPECT_DOUBLE_EQ(rescale(dclock, s, 0.0), dclock.values().front() / 100.0);
  EXPECT_GT(rescale(dclock, s, 0.0), 0.0);
  const auto cclock = build_clock(env, vsrw(env, 1, 20.0));
  EXPECT_DOUBLE_EQ(rescale(cclock, s, 0.0), 0.0);

  const ClockPath step({0.0, 5.0, 10.0}, {0.0, 250.0, 250.0}, ClockKind::Discrete);
  EXPECT_DOUBLE_EQ(rescale(step, ScaleSet::custom(100.0, 5.5, 1.0, 0.5), 1.0), 2.5);
  EXPECT_THROW(rescale(step, ScaleSet::custom(100.0, 11.0, 1.0, 0.5), 1.0), RangeExhausted);
}

TEST(Rescale, Monotone) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.0, 2));
  const auto clock = build_clock(env, vsrw(env, 3, 1000.0));
  const auto s = ScaleSet::custom(50.0, 500.0, 2.0, 0.5);
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(g), b = u(g);
    if (a > b) std::swap(a, b);
    EXPECT_LE(rescale(clock, s, a), rescale(clock, s, b));
  }
}

TEST(Blocks, TelescopingAndAlignment) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.3, 5));
  const auto s = ScaleSet::custom(1000.0, 100.0, 3.0, 0.5);
  for (auto kind : {ChainKind::ContinuousVsrw, ChainKind::DiscreteJ}) {
    TrajectoryConfig<Site<2>> tc;
    tc.traj_seed = 9;
    tc.chain_kind = kind;
    tc.horizon = 250.0;
    const auto tr = run_chain(env, tc);
    const auto clock = build_clock(env, tr);
    const auto series = block_series(clock, s, 2.0);
    ASSERT_EQ(series.z.size(), std::size_t(s.k_n(2.0)));
    double sum = series.z0;
    for (double z : series.z) {
      EXPECT_GE(z, 0.0);
      sum += z;
    }
    EXPECT_EQ(blocked_clock(series, 2.0), sum);
    if (kind == ChainKind::ContinuousVsrw) EXPECT_EQ(series.z0, 0.0);
    double prev = -1.0;
    for (double t = 0.0; t <= 2.0; t += 0.01) {
      const double b = blocked_clock(series, t);
      const double aligned = clock.value_at(s.theta_n * double(s.k_n(t))) / s.c_n;
      EXPECT_NEAR(b, aligned, 1e-12 * std::max(1.0, aligned));
      EXPECT_GE(b, prev);
      prev = b;
    }
    EXPECT_EQ(blocked_clock(series, 0.01), series.z0);  // k_n = 0
    EXPECT_THROW(block_series(clock, s, 3.0), RangeExhausted);
    EXPECT_THROW(blocked_clock(series, 2.5), RangeExhausted);
  }
}

TEST(TruncatedClock, EmptyTrapSetGivesZero) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.0, 5));
  auto s = ScaleSet::custom(1.0, 100.0, 2.0, 0.5);
  s.eps_n = 1e300;
  const auto tr = vsrw(env, 1, 300.0);
  EXPECT_EQ(truncated_blocked_clock(env, tr, s, 2.0), 0.0);
}

TEST(TruncatedClock, DominatedByBlockedClock) {
  const LatticeEnv<3> env(make_cfg(3, 0.5, 0.0, 5));
  const auto s = ScaleSet::batm(1e4, 3, 0.5);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto tr = vsrw(env, k, s.a_n + 1.0);
    const auto series = block_series(build_clock(env, tr), s, 1.0);
    const double full = blocked_clock(series, 1.0);
    const double trunc = truncated_blocked_clock(env, tr, s, 1.0);
    EXPECT_LE(trunc, full * (1 + 1e-12));
    EXPECT_GE(trunc, 0.0);
  }
}

TEST(TruncatedClock, LargeTrapApproximationImprovesAsEpsShrinks) {
  // P(sup_t |S^b - S-bar^b| <= delta_n), annealed over environments. Both clocks
  // are nondecreasing, so the sup is attained at t = 1.
  const auto base = ScaleSet::batm(1e4, 3, 0.5);
  const int runs = 300;
  std::vector<Trajectory<LatticeEnv<3>>> trs;
  std::vector<LatticeEnv<3>> envs;
  for (int r = 0; r < runs; ++r) {
    envs.emplace_back(make_cfg(3, 0.5, 0.0, 1000 + r));
    trs.push_back(vsrw(envs.back(), r, base.a_n + 1.0));
  }
  std::vector<double> prob;
  for (double eps : {0.5, 0.05, 1e-3, 1e-5}) {
    auto s = base;
    s.eps_n = eps;
    int good = 0;
    for (int r = 0; r < runs; ++r) {
      const double full = blocked_clock(block_series(build_clock(envs[r], trs[r]), s, 1.0), 1.0);
      const double trunc = truncated_blocked_clock(envs[r], trs[r], s, 1.0);
      if (full - trunc <= s.delta_n()) ++good;
    }
    prob.push_back(double(good) / runs);
  }
  for (std::size_t i = 1; i < prob.size(); ++i) {
    EXPECT_GE(prob[i], prob[i - 1] - 3 * binomial_se(prob[i - 1], runs));
  }
  EXPECT_GE(prob.back(), 0.99);
}

TEST(TrapSetMembership, BothInequalities) {
  const LatticeEnv<2> env(make_cfg(2, 0.5, 0.0, 8));
  auto s = ScaleSet::custom(10.0, 100.0, 2.0, 0.5);
  s.eps_n = 0.5;
  int members = 0;
  for (int i = -60; i <= 60; ++i)
    for (int j = -60; j <= 60; ++j) {
      const Site<2> x{i, j};
      const bool in = in_trap_set(env, s, x);
      bool expect = env.tau(x) / 10.0 > s.eps_n;
      for (const auto& y : env.neighbors(x)) expect = expect && env.tau(y) <= std::pow(s.eps_n, -4.0);
      EXPECT_EQ(in, expect);
      members += in;
    }
  EXPECT_GT(members, 0);
}

TEST(InverseClock, Examples) {
  const ClockPath jump0({0.0, 1.0}, {3.0, 4.0}, ClockKind::Continuous);
  EXPECT_EQ(inverse_clock(jump0, 0.0), 0.0);
  const ClockPath step({0.0, 1.0, 2.0}, {0.0, 10.0, 10.0}, ClockKind::Discrete);
  EXPECT_EQ(inverse_clock(step, 5.0), 1.0);
  EXPECT_EQ(inverse_clock(step, 0.0), 1.0);
  EXPECT_THROW(inverse_clock(step, 10.0), RangeExhausted);
}

TEST(InverseClock, GeneralizedInverseProperty) {
  std::mt19937_64 g(77);
  for (auto kind : {ClockKind::Discrete, ClockKind::Continuous}) {
    for (int p = 0; p < 200; ++p) {
      const auto path = random_path(g, kind);
      std::uniform_real_distribution<double> level(0.0, path.final_value());
      for (int q = 0; q < 20; ++q) {
        const double s = level(g);
        if (s >= path.final_value()) continue;
        const double v = inverse_clock(path, s);
        if (kind == ClockKind::Discrete) {
          EXPECT_GT(path.value_at(v), s);
        } else {
          EXPECT_GE(path.value_at(v), s * (1 - 1e-12) - 1e-12);
        }
        // Every earlier time is at or below the level.
        for (double w : {0.0, 0.25 * v, 0.5 * v, 0.999 * v}) {
          if (w < v) EXPECT_LE(path.value_at(w), s * (1 + 1e-12) + 1e-12);
        }
      }
    }
  }
}

TEST(ClockPath, RejectsNonMonotoneInput) {
  EXPECT_THROW(ClockPath({0.0, 1.0}, {2.0, 1.0}, ClockKind::Discrete), ContractViolation);
  EXPECT_THROW(ClockPath({0.0, 0.0}, {1.0, 1.0}, ClockKind::Discrete), ContractViolation);
}
