#include <gtest/gtest.h>

#include <cmath>

#include "thermo/conformal.hpp"

using namespace thermo;

namespace {

const double kP = 1.0 / (1.0 + std::exp(-1.0));  // Bernoulli weight of the left branch
const double kC = std::log(1.0 + std::exp(-1.0));

struct Bernoulli {
  IntervalMap f = IntervalMap::tent();
  Potential phi = Potential::branch_constant(f, {0.0, -1.0});
};

}  // namespace

TEST(Conformal, TransitionParameter) {
  Bernoulli b;
  const auto t = transition_parameter(b.f, b.phi, 0.3, 12);
  EXPECT_NEAR(t.c, kC, 1e-12);
  EXPECT_NEAR(t.limsup, kC, 1e-12);
  EXPECT_LT(t.residual, 1e-11);
  EXPECT_THROW(transition_from_log_sums({0.5}), DomainError);
}

TEST(Conformal, GeometricTail) {
  const double log_r = std::log(0.3);
  EXPECT_NEAR(std::exp(detail::log_geometric_tail({}, 10, log_r)), 0.3 / 0.7, 1e-14);
  // theta = 1: sum_{k>=1} (N + k) r^k, closed form N r/(1-r) + r/(1-r)^2.
  const int N = 7;
  const double r = 0.3;
  EXPECT_NEAR(std::exp(detail::log_geometric_tail({1.0}, N, log_r)), N * r / (1 - r) + r / ((1 - r) * (1 - r)),
              1e-12);
  EXPECT_TRUE(std::isinf(detail::log_geometric_tail({}, N, 0.0)));
}

TEST(Conformal, EverySliceGivesCylinderWeights) {
  Bernoulli b;
  const auto sl = collect_slices(b.f, b.phi, 0.3, 10);
  for (double s : {kC + 0.5, kC + 0.01}) {
    MsOptions opt;
    opt.mode = TailMode::geometric_closure;
    const auto ms = build_ms(sl, kC, s, 0.0, 1.0, opt);
    EXPECT_NEAR(ms.measure.total_mass(), 1.0, 1e-14);
    EXPECT_NEAR(ms.measure.mass_in(0.0, 0.5), kP, 1e-12);
  }
}

TEST(Conformal, TruncateNeedsSmallTail) {
  Bernoulli b;
  const auto sl = collect_slices(b.f, b.phi, 0.3, 10);
  EXPECT_THROW(build_ms(sl, kC, kC + 0.01, 0.0, 1.0), ConvergenceError);
  const auto ok = build_ms(sl, kC, kC + 2.0, 0.0, 1.0);
  EXPECT_LT(ok.tail_fraction, kTailTol);
  EXPECT_THROW(build_ms(sl, kC, kC, 0.0, 1.0), DomainError);
}

TEST(Conformal, ClosureRejectsSlowDecay) {
  // s below the last increment: the closed-form tail diverges.
  const auto f = IntervalMap::golden_tent();
  const auto sl = collect_slices(f, ZeroPotential{}, 0.3, 8);
  const double inc = sl.log_sums[7] - sl.log_sums[6];
  MsOptions opt;
  opt.mode = TailMode::geometric_closure;
  opt.tail_tol = 1.0;
  EXPECT_THROW(build_ms(sl, inc - 0.1, inc - 0.01, 0.0, 1.0, opt), ConvergenceError);
}

TEST(Conformal, WeakLimitBernoulli) {
  Bernoulli b;
  const auto wl = weak_limit(b.f, b.phi, 0.3, kC, 14);
  EXPECT_TRUE(wl.converged) << wl.status;
  EXPECT_NEAR(wl.measure.mass_in(0.0, 0.5), kP, 5e-3);
  EXPECT_NEAR(wl.measure.total_mass(), 1.0, 1e-12);
  EXPECT_EQ(wl.schedule.size(), static_cast<std::size_t>(kDefaultScheduleLength));

  const auto tests = single_branch_intervals(b.f, 20, 5);
  const auto rep = conformality_audit(wl.measure, b.f, b.phi, kC, tests);
  EXPECT_LT(rep.max_delta, 1e-2);
  const std::vector<Interval> half{{0.0, 0.5}};
  EXPECT_LT(conformality_audit(wl.measure, b.f, b.phi, kC, half).max_delta, 1e-2);

  const std::vector<int> levels{8, 64};
  const auto atoms = atom_audit(wl.measure, levels, 0.0, 1.0);
  EXPECT_LE(atoms.max_mass[1], std::pow(kP, 6) + 5e-3);
  EXPECT_LT(atoms.max_mass[1], atoms.max_mass[0]);
}

TEST(Conformal, AuditInputs) {
  Bernoulli b;
  const AtomicMeasure mu = AtomicMeasure::uniform(100);
  const std::vector<Interval> empty{{0.3, 0.2}};
  EXPECT_EQ(conformality_audit(mu, b.f, b.phi, kC, empty).deltas[0], 0.0);
  const std::vector<Interval> straddle{{0.4, 0.6}};
  EXPECT_THROW(conformality_audit(mu, b.f, b.phi, kC, straddle), DomainError);
  for (const auto& A : single_branch_intervals(IntervalMap::full_linear(4), 40, 9)) {
    EXPECT_LE(A.a, A.b);
    EXPECT_EQ(std::floor(A.a * 4), std::floor(std::min(A.b * 4, 3.999)));
  }
  const std::vector<int> bad{64, 8};
  EXPECT_THROW(atom_audit(mu, bad, 0.0, 1.0), DomainError);
}

TEST(Conformal, LebesgueIsConformalForTent) {
  // phi = 0, c = log 2: Lebesgue measure; uniform atoms approximate it.
  const auto f = IntervalMap::tent();
  const auto mu = AtomicMeasure::uniform(1 << 14);
  const std::vector<Interval> tests{{0.1, 0.2}, {0.6, 0.95}, {0.0, 0.5}};
  EXPECT_LT(conformality_audit(mu, f, ZeroPotential{}, std::log(2.0), tests).max_delta, 1e-3);
}
