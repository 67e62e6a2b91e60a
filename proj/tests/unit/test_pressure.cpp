#include <gtest/gtest.h>

#include <cmath>

#include "thermo/pressure.hpp"

using namespace thermo;

namespace {
const double kBernoulliP = std::log(1.0 + std::exp(-1.0));
}

TEST(Pressure, FactorizationAtDepthThree) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const auto a = tree_log_sums(f, phi, 0.3, 3);
  EXPECT_NEAR(std::exp(a[2]), std::pow(1.0 + std::exp(-1.0), 3), 1e-12);
}

TEST(Pressure, BernoulliEveryDepth) {
  const auto f = IntervalMap::tent();
  const auto r = tree_pressure(f, Potential::branch_constant(f, {0.0, -1.0}), 0.3, 1, 12);
  for (double p : r.p) EXPECT_NEAR(p, kBernoulliP, 1e-12);
  EXPECT_NEAR(r.estimate, kBernoulliP, 1e-12);
  EXPECT_LT(r.delta, 1e-12);
}

TEST(Pressure, Entropies) {
  EXPECT_NEAR(topological_entropy(IntervalMap::tent(), 0.3, 12).estimate, std::log(2.0), 1e-12);
  EXPECT_NEAR(topological_entropy(IntervalMap::full_linear(4), 0.3, 7).estimate, std::log(4.0), 1e-12);
  EXPECT_NEAR(topological_entropy(IntervalMap::golden_tent(), 0.3, 18).estimate, std::log(std::numbers::phi),
              1e-3);
  EXPECT_NEAR(topological_entropy(IntervalMap::logistic4(), 0.3, 12).estimate, std::log(2.0), 1e-12);
}

TEST(Pressure, ConstantShift) {
  const auto f = IntervalMap::full_linear(3);
  EXPECT_NEAR(tree_pressure(f, Potential::constant(0.7), 0.4, 1, 6).estimate, std::log(3.0) + 0.7, 1e-12);
}

TEST(Pressure, RejectsBreakpointBase) {
  const auto f = IntervalMap::tent();
  EXPECT_THROW(tree_pressure(f, ZeroPotential{}, 0.5, 1, 4), DomainError);
  EXPECT_THROW(tree_pressure(f, ZeroPotential{}, 0.0, 1, 4), DomainError);
}

TEST(Pressure, BowenDistance) {
  const auto f = IntervalMap::tent();
  EXPECT_NEAR(bowen_distance(f, 0.1, 0.11, 1), 0.01, 1e-15);
  // 0.1, 0.11 -> 0.2, 0.22 -> 0.4, 0.44
  EXPECT_NEAR(bowen_distance(f, 0.1, 0.11, 3), 0.04, 1e-15);
}

TEST(Pressure, SeparatedSetIsSeparated) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const auto est = separated_pressure(f, phi, 4, 0.05, 400);
  ASSERT_FALSE(est.points.empty());
  for (std::size_t i = 0; i < est.points.size(); ++i)
    for (std::size_t j = i + 1; j < est.points.size(); ++j)
      EXPECT_GE(bowen_distance(f, est.points[i], est.points[j], 4), 0.05);
  // Maximality on the grid: every grid point is eps-close to an admitted one.
  for (int g = 0; g < 400; ++g) {
    const double x = g / 399.0;
    double d = 1e9;
    for (double y : est.points) d = std::min(d, bowen_distance(f, x, y, 4));
    EXPECT_LT(d, 0.05 + 1e-12);
  }
  Exec four{4};
  const auto again = separated_pressure(f, phi, 4, 0.05, 400, four);
  EXPECT_EQ(again.points, est.points);
  EXPECT_THROW(separated_pressure(f, phi, 4, 0.0, 400), DomainError);
}

TEST(Pressure, Hyperbolicity) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const auto h = hyperbolicity_check(f, phi, kBernoulliP, 10, 1024);
  EXPECT_EQ(h.verdict, HyperbolicVerdict::hyperbolic);
  EXPECT_EQ(h.witness_n, 1);
  EXPECT_NEAR(h.margin, kBernoulliP, 1e-12);
  // A claimed pressure below every orbit average proves nothing.
  const auto no = hyperbolicity_check(f, phi, -0.5, 5, 64);
  EXPECT_EQ(no.verdict, HyperbolicVerdict::unknown);
  EXPECT_EQ(no.witness_n, 0);
}

TEST(Pressure, BoundedRange) {
  EXPECT_FALSE(bounded_range_check({0.0, -1.0}, std::log(2.0)));
  EXPECT_TRUE(bounded_range_check({0.0, -0.5}, std::log(2.0)));
  EXPECT_THROW(bounded_range_check({0.0, -0.5}, -1.0), DomainError);
}

TEST(Pressure, CurveClosedForm) {
  const auto f = IntervalMap::tent();
  const double c1 = 0.0, c2 = -1.0;
  const auto chi = Potential::branch_constant(f, {c1, c2});
  std::vector<double> ts;
  for (int i = 0; i <= 20; ++i) ts.push_back(-1.0 + 0.1 * i);
  const auto curve = pressure_curve(f, ZeroPotential{}, chi, ts, 0.3, 10);
  for (std::size_t i = 0; i < ts.size(); ++i)
    EXPECT_NEAR(curve.pressure[i], std::log(std::exp(ts[i] * c1) + std::exp(ts[i] * c2)), 1e-12);
  EXPECT_NEAR(curve.first_diff[10], (c1 + c2) / 2, 1e-5);
  // Closed-form second derivative at 0 is 1/4 for a unit gap.
  EXPECT_NEAR(curve.second_diff[10], 0.25, 1e-3);
  std::vector<double> bad{0.0, 0.1, 0.3, 0.4, 0.5};
  EXPECT_THROW(pressure_curve(f, ZeroPotential{}, chi, bad, 0.3, 5), DomainError);
}

TEST(Pressure, AppendixConstruction) {
  const auto c = appendix_construct(std::log(4.0));
  const auto a = appendix_audit(c);
  EXPECT_EQ(a.sup_phi, 0.0);
  EXPECT_NEAR(a.inf_phi, -(std::log(4.0) + 0.5), 1e-15);
  EXPECT_TRUE(a.hypotheses_hold);
  EXPECT_TRUE(a.hyperbolic);
  EXPECT_FALSE(a.bounded_range);
  EXPECT_GE(a.pressure, std::log(2.0) - 0.01);
  EXPECT_NEAR(a.h_top, std::log(4.0), 1e-12);
  EXPECT_THROW(appendix_construct(0.0), DomainError);
}
