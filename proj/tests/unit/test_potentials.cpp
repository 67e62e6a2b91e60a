#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "thermo/maps.hpp"
#include "thermo/potentials.hpp"

using namespace thermo;

TEST(Potentials, BranchConstantBreakpointConvention) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  EXPECT_EQ(phi(0.25), 0.0);
  EXPECT_EQ(phi(0.75), -1.0);
  EXPECT_EQ(phi(0.5), 0.0);                     // left branch wins
  EXPECT_EQ(phi.on_branch(0.5, 0.5, 1.0), -1.0);  // one-sided from the right
  EXPECT_EQ(eval_on_branch(phi, 0.5, 0.0, 0.5), 0.0);
  EXPECT_THROW(Potential::branch_constant(f, {1.0}), DomainError);
}

TEST(Potentials, OutsideDomainThrows) {
  const auto phi = Potential::piecewise_linear({0.0, 1.0}, {0.0, 1.0});
  EXPECT_THROW(phi(1.5), DomainError);
  EXPECT_THROW(phi(-0.1), DomainError);
}

TEST(Potentials, Ranges) {
  const auto tent = IntervalMap::tent();
  const auto r = potential_range(Potential::branch_constant(tent, {0.0, -1.0}), tent, 64);
  EXPECT_EQ(r.sup, 0.0);
  EXPECT_EQ(r.inf, -1.0);
  // cos(2 pi x) / 10 has its extrema at 0 and 1/2 exactly.
  const auto c = potential_range(Potential::cosine_series({0.0, 0.1}), IntervalMap::logistic4(), 101);
  EXPECT_NEAR(c.sup, 0.1, 1e-15);
  EXPECT_NEAR(c.inf, -0.1, 1e-15);
  // Off-grid interior minimum found by refinement.
  const auto c3 = potential_range(Potential::cosine_series({0.0, 0.0, 0.0, 1.0}), tent, 10);
  EXPECT_NEAR(c3.inf, -1.0, 1e-10);
}

TEST(Potentials, LogDerivative) {
  const auto f = IntervalMap::full_linear(4);
  const auto phi = Potential::log_derivative(f, 1.0);
  for (double x : {0.1, 0.3, 0.6, 0.9}) EXPECT_NEAR(phi(x), -std::log(4.0), 1e-15);
  EXPECT_THROW(Potential::log_derivative(IntervalMap::logistic4(), 1.0), DomainError);
}

TEST(Potentials, AverageTransformSpotValues) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const auto avg = average_transform(phi, f, 2);
  EXPECT_EQ(avg.bound(), 1.0);
  // 0.25 -> 0.5; phi(0.5) uses the left-branch value 0.
  EXPECT_EQ(avg(0.25), 0.0);
  // 0.6 -> 0.8: (-1 + -1) / 2.
  EXPECT_EQ(avg(0.6), -1.0);
  EXPECT_THROW(average_transform(phi, f, 0), DomainError);
}

TEST(Potentials, AverageTransformBound) {
  const auto f = IntervalMap::logistic4();
  const auto phi = Potential::cosine_series({0.0, 0.3, -0.2}, 0.0, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int N : {2, 3, 5}) {
    const auto avg = average_transform(phi, f, N);
    for (int k = 0; k < 30; ++k) {
      const double x = u(rng);
      for (int n = 1; n <= 30; ++n)
        EXPECT_LE(std::abs(birkhoff_sum(f, avg, x, n) - birkhoff_sum(f, phi, x, n)), avg.bound() + 1e-9);
    }
  }
}

TEST(Potentials, HolderAudit) {
  const auto f = IntervalMap::tent();
  EXPECT_TRUE(holder_audit(Potential::cosine_series({0.0, 0.5, 0.25}), f, 2000, 1).passed);
  EXPECT_TRUE(holder_audit(Potential::piecewise_linear({0.0, 0.3, 1.0}, {0.0, 3.0, -1.0}), f, 2000, 2).passed);
  EXPECT_TRUE(holder_audit(Potential::branch_constant(f, {0.0, -1.0}), f, 2000, 3).passed);
  // Declaring alpha = 1/2 on [0,1] keeps the Lipschitz constant as the bound.
  const auto half = Potential::cosine_series({0.0, 0.5}).with_holder_exponent(0.5);
  EXPECT_DOUBLE_EQ(half.holder_exponent(), 0.5);
  EXPECT_TRUE(holder_audit(half, f, 2000, 4).passed);
}
