#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "trapclock/errors.hpp"
#include "trapclock/special.hpp"

using namespace trapclock;

TEST(Arcsine, HalfClosedForm) {
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double u = i / 1000.0;
    const double exact = 2.0 / M_PI * std::asin(std::sqrt(u));
    worst = std::max(worst, std::abs(arcsine_cdf(0.5, u) - exact));
  }
  EXPECT_LE(worst, 1e-10);
  EXPECT_EQ(arcsine_cdf(0.5, 0.0), 0.0);
  EXPECT_EQ(arcsine_cdf(0.5, 1.0), 1.0);
  EXPECT_NEAR(arcsine_cdf(0.5, 0.5), 0.5, 1e-12);
  EXPECT_NEAR(arcsine_target(0.5, 3.0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(arcsine_target(0.5, 1.0), 0.5, 1e-12);
}

TEST(Arcsine, MatchesBoostIbeta) {
  for (double a : {0.05, 0.3, 0.5, 0.8, 0.95}) {
    for (int i = 1; i < 200; ++i) {
      const double u = i / 200.0;
      EXPECT_NEAR(arcsine_cdf(a, u), boost::math::ibeta(a, 1.0 - a, u), 1e-12) << a << " " << u;
    }
  }
  for (double a : {0.7, 2.0, 5.5})
    for (double b : {0.4, 1.0, 3.0})
      for (double x : {0.01, 0.3, 0.77, 0.999})
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12);
}

TEST(Arcsine, MonotoneInUAndRho) {
  for (double a : {0.3, 0.5, 0.8}) {
    double prev = -1.0;
    for (int i = 0; i <= 500; ++i) {
      const double v = arcsine_cdf(a, i / 500.0);
      EXPECT_GE(v, prev);
      prev = v;
    }
    EXPECT_GT(arcsine_target(a, 0.5), arcsine_target(a, 1.0));
    EXPECT_GT(arcsine_target(a, 1.0), arcsine_target(a, 3.0));
  }
}

TEST(Arcsine, DomainErrors) {
  EXPECT_THROW(arcsine_cdf(0.0, 0.5), DomainError);
  EXPECT_THROW(arcsine_cdf(1.0, 0.5), DomainError);
  EXPECT_THROW(arcsine_cdf(0.5, -0.1), DomainError);
  EXPECT_THROW(arcsine_cdf(0.5, 1.1), DomainError);
  EXPECT_THROW(arcsine_target(0.5, 0.0), DomainError);
  EXPECT_THROW(regularized_incomplete_beta(-1.0, 1.0, 0.5), DomainError);
}
