#include <gtest/gtest.h>

#include <cmath>

#include "thermo/conformal.hpp"
#include "thermo/transfer.hpp"

using namespace thermo;

TEST(Transfer, GridFunctionInterpolatesLinear) {
  const auto g = GridFunction::sample([](double x) { return 3 * x - 1; }, 17, 0.0, 2.0);
  for (double x : {0.0, 0.33, 1.0, 1.999, 2.0}) EXPECT_NEAR(g(x), 3 * x - 1, 1e-14);
  EXPECT_EQ(g.node(16), 2.0);
  EXPECT_THROW(g(2.5), DomainError);
  EXPECT_THROW(GridFunction::constant(1.0, 8), DomainError);
}

TEST(Transfer, ConstantImageForBranchConstantPotential) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.2, -0.7});
  const auto one = GridFunction::constant(1.0, 257);
  const auto Lone = apply_transfer(f, phi, one);
  for (double v : Lone.values()) EXPECT_NEAR(v, std::exp(0.2) + std::exp(-0.7), 1e-14);
  const auto norm = apply_transfer(f, phi, one, true, std::log(std::exp(0.2) + std::exp(-0.7)));
  for (double v : norm.values()) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Transfer, PointwiseDefinition) {
  // L psi(x) = sum over preimages y of exp(phi(y)) psi(y); psi linear so the grid is exact.
  const auto f = IntervalMap::full_linear(3);
  const auto phi = Potential::branch_constant(f, {0.0, -0.5, 0.25});
  const auto psi = GridFunction::sample([](double x) { return 1.0 + x; }, 1025);
  const auto Lpsi = apply_transfer(f, phi, psi);
  for (int i = 0; i < 1025; i += 64) {
    const double x = Lpsi.node(i);
    double want = 0.0;
    for (std::size_t b = 0; b < 3; ++b) {
      const Branch& br = f.branch(b);
      const double y = br.inverse(x);
      want += std::exp(eval_on_branch(phi, y, br.lo(), br.hi())) * (1.0 + y);
    }
    EXPECT_NEAR(Lpsi.values()[i], want, 1e-12);
  }
}

TEST(Transfer, TentEigenpair) {
  const auto f = IntervalMap::tent();
  const auto mu = AtomicMeasure::uniform(4096);
  const auto eig = power_iteration(f, ZeroPotential{}, mu);
  EXPECT_TRUE(eig.converged);
  EXPECT_NEAR(eig.lambda, 2.0, 1e-10);
  for (double v : eig.h.values()) EXPECT_NEAR(v, 1.0, 1e-8);
  EXPECT_LT(eig.residual, 1e-10);
}

TEST(Transfer, BernoulliEquilibrium) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const double c = std::log(1.0 + std::exp(-1.0));
  const auto wl = weak_limit(f, phi, 0.3, c, 14);
  ASSERT_TRUE(wl.converged);
  PowerOptions po;
  po.grid = 1024;
  const auto eig = power_iteration(f, phi, wl.measure, po);
  EXPECT_NEAR(eig.log_lambda, c, 1e-10);
  const auto eq = equilibrium_state(phi, wl.measure, eig, true);
  const double p = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(eq.entropy, -p * std::log(p) - (1 - p) * std::log(1 - p), 5e-3);
  EXPECT_NEAR(eq.nu.total_mass(), 1.0, 1e-12);
  const auto suite = adjoint_test_suite(0.0, 1.0, 1024);
  EXPECT_EQ(suite.size(), 10u);
  EXPECT_LT(adjoint_invariance_audit(f, phi, eig.log_lambda, wl.measure, suite), 1e-2);
}

TEST(Transfer, NonpositiveEntropyIsAnAuditFailure) {
  const auto f = IntervalMap::tent();
  const auto mu = AtomicMeasure::uniform(512);
  PowerOptions po;
  po.grid = 256;
  auto eig = power_iteration(f, ZeroPotential{}, mu, po);
  eig.log_lambda = 0.0;  // forged: entropy becomes 0
  EXPECT_THROW(equilibrium_state(ZeroPotential{}, mu, eig, true), AuditError);
  EXPECT_NO_THROW(equilibrium_state(ZeroPotential{}, mu, eig, false));
}

TEST(Transfer, CosineCorrelationVanishesOnTent) {
  const auto f = IntervalMap::tent();
  const auto mu = AtomicMeasure::uniform(4096);
  PowerOptions po;
  po.grid = 4097;
  const auto eig = power_iteration(f, ZeroPotential{}, mu, po);
  const auto eq = equilibrium_state(ZeroPotential{}, mu, eig);
  const auto cosine = GridFunction::sample([](double x) { return std::cos(M_PI * x); }, 4097);
  const auto r = correlation(f, ZeroPotential{}, cosine, cosine, eq, 10);
  for (double cn : r.c) EXPECT_LT(cn, 1e-10);
  EXPECT_FALSE(r.resolved);
}

TEST(Transfer, IndicatorCorrelationRateOnTent) {
  const auto f = IntervalMap::tent();
  const auto mu = AtomicMeasure::uniform(1 << 14);
  PowerOptions po;
  po.grid = 1025;
  const auto eig = power_iteration(f, ZeroPotential{}, mu, po);
  const auto eq = equilibrium_state(ZeroPotential{}, mu, eig);
  const auto obs = default_observable(0.0, 1.0, (1 << 16) + 1);
  const auto r = correlation(f, ZeroPotential{}, obs, obs, eq, 12);
  ASSERT_TRUE(r.resolved);
  EXPECT_NEAR(r.rho, 0.5, 0.05);
}

TEST(Transfer, ContractionWitness) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::branch_constant(f, {0.0, -1.0});
  const auto a = gn_contraction_audit(f, phi, std::log(1.0 + std::exp(-1.0)), 5, 256);
  EXPECT_EQ(a.witness_n, 1);
  EXPECT_NEAR(a.sup_value, 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}
