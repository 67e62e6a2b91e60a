#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "thermo/maps.hpp"
#include "thermo/potentials.hpp"

using namespace thermo;

TEST(Maps, TentValues) {
  const auto f = IntervalMap::tent();
  EXPECT_DOUBLE_EQ(f(0.25), 0.5);
  EXPECT_DOUBLE_EQ(f(0.75), 0.5);
  EXPECT_DOUBLE_EQ(f(0.5), 1.0);
  EXPECT_DOUBLE_EQ(f(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f(1.0), 0.0);
}

TEST(Maps, FourBranchAlternates) {
  const auto f = IntervalMap::full_linear(4);
  EXPECT_EQ(f.branch_count(), 4u);
  EXPECT_DOUBLE_EQ(f(0.25), 1.0);
  EXPECT_DOUBLE_EQ(f(0.5), 0.0);
  EXPECT_DOUBLE_EQ(f(0.75), 1.0);
  EXPECT_NEAR(f(0.8), 0.8, 1e-15);  // fixed point of the last branch
}

TEST(Maps, TentPreimages) {
  const auto p = preimages(IntervalMap::tent(), 0.3);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 0.15);
  EXPECT_DOUBLE_EQ(p[1], 0.85);
}

TEST(Maps, CriticalValueHasOnePreimage) {
  EXPECT_EQ(preimages(IntervalMap::tent(), 1.0).size(), 1u);
  EXPECT_EQ(preimages(IntervalMap::logistic4(), 1.0).size(), 1u);
}

TEST(Maps, LogisticPreimagesMapBack) {
  const auto f = IntervalMap::logistic4();
  for (double x : {0.01, 0.3, 0.5, 0.77, 0.99})
    for (double y : preimages(f, x)) EXPECT_NEAR(4 * y * (1 - y), x, 1e-13);
}

TEST(Maps, GoldenTentIsMarkov) {
  const auto f = IntervalMap::golden_tent();
  const auto m = detail::markov_matrix(f);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(m[1], (std::vector<int>{1, 1}));
  EXPECT_TRUE(detail::primitive(m));
  EXPECT_TRUE(f.topologically_exact());
  EXPECT_NEAR(f(2.0 - std::numbers::phi), 1.0, 1e-15);
}

TEST(Maps, Validation) {
  EXPECT_NO_THROW(require_valid(IntervalMap::tent()));
  EXPECT_NO_THROW(require_valid(IntervalMap::logistic4()));
  // Jump at 0.5.
  const auto broken = IntervalMap::pw_linear({0.0, 0.5, 1.0}, {2.0, -2.0}, {0.0, 1.8});
  const auto d = validate(broken);
  EXPECT_FALSE(d.passed);
  EXPECT_NEAR(d.continuity_residuals.at(0), 0.2, 1e-12);
  EXPECT_THROW(require_valid(broken), DomainError);
  // Monotone increasing, no turning point.
  const auto mono = IntervalMap::pw_linear({0.0, 0.5, 1.0}, {1.0, 1.0}, {0.0, 0.0});
  EXPECT_THROW(require_valid(mono), DomainError);
}

TEST(Maps, BirkhoffSum) {
  const auto f = IntervalMap::tent();
  const auto phi = Potential::piecewise_linear({0.0, 1.0}, {0.0, 1.0});  // phi(x) = x
  // 0.2 -> 0.4 -> 0.8 -> 0.4
  EXPECT_NEAR(birkhoff_sum(f, phi, 0.2, 4), 0.2 + 0.4 + 0.8 + 0.4, 1e-14);
  EXPECT_EQ(birkhoff_sum(f, phi, 0.2, 0), 0.0);
  EXPECT_THROW(birkhoff_sum(f, phi, 0.2, -1), DomainError);
}

TEST(Maps, TreeLayersMapBackWithWords) {
  const auto f = IntervalMap::full_linear(3);
  const auto phi = Potential::branch_constant(f, {0.1, -0.2, 0.3});
  const auto layer = preimage_tree(f, phi, 0.37, 6);
  ASSERT_EQ(layer.entries.size(), 729u);
  for (std::size_t i = 0; i < layer.entries.size(); ++i) {
    const auto& e = layer.entries[i];
    EXPECT_NEAR(iterate(f, e.point, 6), 0.37, 1e-9);
    const auto w = layer.word(i);
    double x = e.point, s = 0.0;
    for (int j = 0; j < 6; ++j) {
      EXPECT_EQ(static_cast<std::size_t>(w[j]), f.branch_index(x));
      s += phi(x);
      x = f(x);
    }
    EXPECT_NEAR(e.birkhoff, s, 1e-12);
  }
}

TEST(Maps, TreeSizeFollowsMarkovCount) {
  // Golden tent from a point in [turn, 1]: layer sizes are Fibonacci.
  const auto f = IntervalMap::golden_tent();
  std::vector<std::size_t> sizes;
  walk_preimage_tree(f, ZeroPotential{}, 0.7, 10,
                     [&](int, std::span<const PreimageEntry> e) { sizes.push_back(e.size()); });
  for (std::size_t i = 2; i < sizes.size(); ++i) EXPECT_EQ(sizes[i], sizes[i - 1] + sizes[i - 2]);
}

TEST(Maps, WalkIndependentOfThreads) {
  const auto f = IntervalMap::logistic4();
  WalkOptions one, four;
  four.exec.threads = 4;
  const auto a = preimage_tree(f, ZeroPotential{}, 0.3, 13, one);
  const auto b = preimage_tree(f, ZeroPotential{}, 0.3, 13, four);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].point, b.entries[i].point);
    EXPECT_EQ(a.entries[i].word, b.entries[i].word);
  }
}

TEST(Maps, BudgetReportsFeasibleDepth) {
  WalkOptions opt;
  opt.budget = 100;
  try {
    preimage_tree(IntervalMap::tent(), ZeroPotential{}, 0.3, 10, opt);
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.feasible_depth(), 5);  // 1 + 2 + ... + 32 = 63, next layer 64
  }
}

TEST(Maps, WalkRejectsBoundaryBase) {
  EXPECT_THROW(preimage_tree(IntervalMap::tent(), ZeroPotential{}, 0.0, 3), DomainError);
  EXPECT_THROW(preimage_tree(IntervalMap::tent(), ZeroPotential{}, 1.0, 3), DomainError);
}

TEST(Maps, DepthForLeaves) {
  EXPECT_EQ(depth_for_leaves(IntervalMap::tent(), 0.3, 16, 30), 4);
  EXPECT_EQ(depth_for_leaves(IntervalMap::full_linear(4), 0.3, 16, 30), 2);
  EXPECT_EQ(depth_for_leaves(IntervalMap::tent(), 0.3, 1 << 20, 8), 8);
}
