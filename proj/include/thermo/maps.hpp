#pragma once

// Piecewise-monotone continuous interval maps with exact branch inverses,
// preimage trees and Birkhoff sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "potential_concept.hpp"

namespace thermo {

enum class MapKind { full_linear, pw_linear, logistic4 };
enum class Orientation { increasing, decreasing };

inline const char* to_string(MapKind k) {
  switch (k) {
    case MapKind::full_linear: return "full_linear";
    case MapKind::pw_linear: return "pw_linear";
    case MapKind::logistic4: return "logistic4";
  }
  return "?";
}

/// Tolerance under which two preimages are the same point.
inline constexpr double kPreimageMergeTol = 1e-12;

/// One monotone piece of an interval map.
class Branch {
 public:
  /// f(x) = slope * x + intercept on [lo, hi].
  static Branch linear(double lo, double hi, double slope, double intercept) {
    if (!(hi > lo)) throw DomainError("branch interval must have positive length");
    if (slope == 0.0) throw DomainError("linear branch must have nonzero slope");
    Branch b;
    b.rule_ = Rule::linear;
    b.lo_ = lo;
    b.hi_ = hi;
    b.slope_ = slope;
    b.intercept_ = intercept;
    return b;
  }

  /// Left (increasing) half of x -> 4x(1-x).
  static Branch logistic_left() {
    Branch b;
    b.rule_ = Rule::logistic_left;
    b.lo_ = 0.0;
    b.hi_ = 0.5;
    return b;
  }

  /// Right (decreasing) half of x -> 4x(1-x).
  static Branch logistic_right() {
    Branch b;
    b.rule_ = Rule::logistic_right;
    b.lo_ = 0.5;
    b.hi_ = 1.0;
    return b;
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool is_linear() const noexcept { return rule_ == Rule::linear; }
  double slope() const noexcept { return slope_; }
  double intercept() const noexcept { return intercept_; }

  Orientation orientation() const noexcept {
    switch (rule_) {
      case Rule::linear: return slope_ > 0.0 ? Orientation::increasing : Orientation::decreasing;
      case Rule::logistic_left: return Orientation::increasing;
      case Rule::logistic_right: return Orientation::decreasing;
    }
    return Orientation::increasing;
  }

  double forward(double x) const noexcept {
    switch (rule_) {
      case Rule::linear: return slope_ * x + intercept_;
      case Rule::logistic_left:
      case Rule::logistic_right: return 4.0 * x * (1.0 - x);
    }
    return x;
  }

  double derivative(double x) const noexcept {
    return rule_ == Rule::linear ? slope_ : 4.0 - 8.0 * x;
  }

  // The logistic roots use 1 - sqrt(1-y) = y / (1 + sqrt(1-y)), which has no
  // cancellation for small y.
  double inverse(double y) const noexcept {
    double x = 0.0;
    switch (rule_) {
      case Rule::linear: x = (y - intercept_) / slope_; break;
      case Rule::logistic_left: {
        const double r = std::sqrt(std::max(0.0, 1.0 - y));
        x = y / (2.0 * (1.0 + r));
        break;
      }
      case Rule::logistic_right: {
        const double r = std::sqrt(std::max(0.0, 1.0 - y));
        x = 0.5 * (1.0 + r);
        break;
      }
    }
    return std::clamp(x, lo_, hi_);
  }

  double image_lo() const noexcept { return std::min(forward(lo_), forward(hi_)); }
  double image_hi() const noexcept { return std::max(forward(lo_), forward(hi_)); }

  bool covers(double y, double tol = kPreimageMergeTol) const noexcept {
    return y >= image_lo() - tol && y <= image_hi() + tol;
  }

 private:
  enum class Rule { linear, logistic_left, logistic_right };
  Rule rule_ = Rule::linear;
  double lo_ = 0.0, hi_ = 1.0;
  double slope_ = 1.0, intercept_ = 0.0;
};

/// Continuous piecewise-monotone self-map of [lo, hi].
class IntervalMap {
 public:
  /// k equal-width full branches of alternating orientation on [lo, hi];
  /// k = 2 is the tent map.
  static IntervalMap full_linear(int branches, double lo = 0.0, double hi = 1.0) {
    if (branches < 2) throw DomainError("full_linear needs at least 2 branches");
    std::vector<Branch> bs;
    const double len = hi - lo;
    const double w = len / branches;
    for (int i = 0; i < branches; ++i) {
      const double a = lo + i * w;
      const double b = i + 1 == branches ? hi : lo + (i + 1) * w;
      const double s = static_cast<double>(branches);
      // Even branches rise from lo to hi, odd ones fall from hi to lo.
      if (i % 2 == 0)
        bs.push_back(Branch::linear(a, b, s, lo - s * a));
      else
        bs.push_back(Branch::linear(a, b, -s, hi + s * a));
    }
    IntervalMap m(MapKind::full_linear, lo, hi, std::move(bs));
    return m;
  }

  static IntervalMap tent() { return full_linear(2); }

  /// Branch i is f(x) = slopes[i] * x + intercepts[i] on
  /// [breakpoints[i], breakpoints[i+1]]. Continuity is not enforced here;
  /// `validate` reports it.
  static IntervalMap pw_linear(std::vector<double> breakpoints, std::vector<double> slopes,
                               std::vector<double> intercepts) {
    if (breakpoints.size() < 3)
      throw DomainError("pw_linear needs at least two branches (three breakpoints)");
    if (slopes.size() + 1 != breakpoints.size() || intercepts.size() != slopes.size())
      throw DomainError("pw_linear: need one slope and intercept per branch");
    std::vector<Branch> bs;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
      bs.push_back(Branch::linear(breakpoints[i], breakpoints[i + 1], slopes[i], intercepts[i]));
    return IntervalMap(MapKind::pw_linear, breakpoints.front(), breakpoints.back(), std::move(bs));
  }

  /// Continuous pw-linear map through the nodes (xs[i], ys[i]).
  static IntervalMap from_nodes(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("from_nodes: size mismatch");
    std::vector<double> slopes, intercepts;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
      slopes.push_back(s);
      intercepts.push_back(ys[i] - s * xs[i]);
    }
    return pw_linear({xs.begin(), xs.end()}, std::move(slopes), std::move(intercepts));
  }

  /// Slopes +-beta, beta the golden mean, on [0, 1] with turning point
  /// 2 - beta. Markov on {[0, 2-beta], [2-beta, 1]} with transition matrix
  /// [[0,1],[1,1]], so its entropy is log(beta).
  static IntervalMap golden_tent() {
    const double beta = std::numbers::phi;
    const double turn = 2.0 - beta;
    return pw_linear({0.0, turn, 1.0}, {beta, -beta}, {turn, beta});
  }

  static IntervalMap logistic4() {
    return IntervalMap(MapKind::logistic4, 0.0, 1.0,
                       {Branch::logistic_left(), Branch::logistic_right()});
  }

  MapKind kind() const noexcept { return kind_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::span<const Branch> branches() const noexcept { return branches_; }
  std::size_t branch_count() const noexcept { return branches_.size(); }
  const Branch& branch(std::size_t i) const { return branches_.at(i); }

  bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }

  /// Interior breakpoints (shared branch endpoints).
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < branches_.size(); ++i) out.push_back(branches_[i].hi());
    return out;
  }

  /// Index of the branch containing x; shared endpoints go to the left branch.
  std::size_t branch_index(double x) const {
    if (!contains(x)) throw DomainError("point " + std::to_string(x) + " outside map domain");
    for (std::size_t i = 0; i < branches_.size(); ++i)
      if (x <= branches_[i].hi()) return i;
    return branches_.size() - 1;
  }

  double operator()(double x) const { return branches_[branch_index(x)].forward(x); }

  /// True when every branch is onto [lo, hi] or a Markov exactness witness
  /// was found (see markov_exactness_witness).
  bool topologically_exact() const noexcept { return exact_; }
  const std::string& exactness_witness() const noexcept { return witness_; }

 private:
  IntervalMap(MapKind kind, double lo, double hi, std::vector<Branch> branches)
      : kind_(kind), lo_(lo), hi_(hi), branches_(std::move(branches)) {
    if (!(hi_ > lo_)) throw DomainError("map domain must have positive length");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      const bool first_ok = i == 0 ? branches_[i].lo() == lo_
                                   : branches_[i].lo() == branches_[i - 1].hi();
      if (!first_ok) throw DomainError("branch domains must partition the map domain");
    }
    if (branches_.back().hi() != hi_) throw DomainError("branch domains must end at hi");
    classify_exactness();
  }

  void classify_exactness();

  MapKind kind_;
  double lo_, hi_;
  std::vector<Branch> branches_;
  bool exact_ = false;
  std::string witness_;
};

namespace detail {

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

// Transition matrix of the branch partition, or empty if some branch image
// endpoint is not a partition point.
inline std::vector<std::vector<int>> markov_matrix(const IntervalMap& map) {
  std::vector<double> pts{map.lo()};
  for (double b : map.breakpoints()) pts.push_back(b);
  pts.push_back(map.hi());
  auto on_partition = [&](double y) {
    return std::any_of(pts.begin(), pts.end(), [&](double p) { return near(p, y); });
  };
  const std::size_t k = map.branch_count();
  std::vector<std::vector<int>> m(k, std::vector<int>(k, 0));
  for (std::size_t i = 0; i < k; ++i) {
    const Branch& b = map.branch(i);
    if (!on_partition(b.image_lo()) || !on_partition(b.image_hi())) return {};
    for (std::size_t j = 0; j < k; ++j) {
      const Branch& c = map.branch(j);
      m[i][j] = (b.image_lo() <= c.lo() + 1e-12 && b.image_hi() >= c.hi() - 1e-12) ? 1 : 0;
    }
  }
  return m;
}

inline bool primitive(const std::vector<std::vector<int>>& m) {
  const std::size_t k = m.size();
  if (k == 0) return false;
  std::vector<std::vector<int>> p = m;
  const std::size_t wielandt = (k - 1) * (k - 1) + 1;
  for (std::size_t step = 1; step <= wielandt; ++step) {
    bool all = true;
    for (const auto& row : p)
      for (int v : row) all = all && v > 0;
    if (all) return true;
    std::vector<std::vector<int>> q(k, std::vector<int>(k, 0));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t l = 0; l < k; ++l)
        if (p[i][l])
          for (std::size_t j = 0; j < k; ++j) q[i][j] = q[i][j] || m[l][j];
    p = std::move(q);
  }
  return false;
}

}  // namespace detail

inline void IntervalMap::classify_exactness() {
  const bool all_full = std::all_of(branches_.begin(), branches_.end(), [&](const Branch& b) {
    return detail::near(b.image_lo(), lo_) && detail::near(b.image_hi(), hi_);
  });
  if (all_full) {
    exact_ = true;
    witness_ = "every branch is onto the domain";
    return;
  }
  // A primitive Markov partition by uniformly expanding linear branches makes
  // every subinterval eventually cover the whole domain.
  const bool expanding = std::all_of(branches_.begin(), branches_.end(), [](const Branch& b) {
    return b.is_linear() && std::abs(b.slope()) > 1.0;
  });
  if (expanding) {
    const auto m = detail::markov_matrix(*this);
    if (detail::primitive(m)) {
      exact_ = true;
      witness_ = "expanding primitive Markov partition";
    }
  }
}

/// f^{-1}(x): one point per branch whose image covers x, ascending, with
/// coincident points (shared endpoints) attributed once.
inline std::vector<double> preimages(const IntervalMap& map, double x) {
  if (!map.contains(x)) throw DomainError("preimages: point outside map domain");
  std::vector<double> out;
  for (const Branch& b : map.branches()) {
    if (!b.covers(x)) continue;
    const double y = b.inverse(x);
    if (std::abs(b.forward(y) - x) > 1e-9) continue;
    out.push_back(y);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= kPreimageMergeTol; }),
            out.end());
  return out;
}

/// S_n(phi)(x) = sum_{j<n} phi(f^j(x)).
template <PotentialLike P>
double birkhoff_sum(const IntervalMap& map, const P& phi, double x, int n) {
  if (n < 0) throw DomainError("birkhoff_sum: n must be nonnegative");
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    if (!map.contains(x)) throw std::logic_error("orbit left the map domain");
    s += phi(x);
    x = map(x);
  }
  return s;
}

inline double iterate(const IntervalMap& map, double x, int n) {
  for (int j = 0; j < n; ++j) x = map(x);
  return x;
}

struct PreimageEntry {
  double point = 0.0;
  double birkhoff = 0.0;
  std::uint64_t word = 0;  // symbol j (branch of f^j(y)) in bits [j*b, (j+1)*b)
};

/// f^{-n}(x0) with Birkhoff sums; entries are in walk order, which is fixed
/// by the branch words and independent of the worker count.
struct PreimageLayer {
  int depth = 0;
  double base = 0.0;
  int symbol_bits = 1;
  std::vector<PreimageEntry> entries;

  std::vector<int> word(std::size_t i) const {
    std::vector<int> w(static_cast<std::size_t>(depth));
    const std::uint64_t mask = (std::uint64_t{1} << symbol_bits) - 1;
    for (int j = 0; j < depth; ++j)
      w[static_cast<std::size_t>(j)] = static_cast<int>((entries[i].word >> (j * symbol_bits)) & mask);
    return w;
  }
};

inline constexpr std::size_t kDefaultNodeBudget = 20'000'000;

struct WalkOptions {
  std::size_t budget = kDefaultNodeBudget;
  Exec exec{};
};

inline int symbol_bits_for(std::size_t branches) {
  int bits = 1;
  while ((std::size_t{1} << bits) < branches) ++bits;
  return bits;
}

/// Backward walk from x0 to depth n. `visit(depth, span<const PreimageEntry>)`
/// is called for every depth 1..n in order. Birkhoff sums are accumulated as
/// S_d(y) = phi(y) + S_{d-1}(f(y)), with phi evaluated on the branch used.
template <PotentialLike P, class Visitor>
void walk_preimage_tree(const IntervalMap& map, const P& phi, double x0, int n,
                        Visitor&& visit, const WalkOptions& opt = {}) {
  if (n < 0) throw DomainError("preimage walk: depth must be nonnegative");
  if (!(x0 > map.lo() && x0 < map.hi()))
    throw DomainError("preimage walk: base point must be interior to the domain");
  const int bits = symbol_bits_for(map.branch_count());
  if (n * bits > 64)
    throw BudgetError("preimage walk: branch words longer than 64 bits", 64 / bits);
  std::vector<PreimageEntry> layer{{x0, 0.0, 0}};
  std::size_t total = 1;
  const auto branches = map.branches();

  for (int depth = 1; depth <= n; ++depth) {
    // Exact size of the next layer, so the budget check precedes allocation.
    std::vector<std::uint32_t> counts(layer.size());
    parallel_chunks(layer.size(), opt.exec, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        double prev = -1e300;
        std::uint32_t c = 0;
        for (const Branch& br : branches) {
          if (!br.covers(layer[i].point)) continue;
          const double y = br.inverse(layer[i].point);
          if (std::abs(y - prev) <= kPreimageMergeTol) continue;
          prev = y;
          ++c;
        }
        counts[i] = c;
      }
    });
    std::vector<std::size_t> offsets(layer.size() + 1, 0);
    for (std::size_t i = 0; i < layer.size(); ++i) offsets[i + 1] = offsets[i] + counts[i];
    const std::size_t next_size = offsets.back();
    if (total + next_size > opt.budget)
      throw BudgetError("preimage walk: node budget " + std::to_string(opt.budget) +
                            " exceeded at depth " + std::to_string(depth) +
                            "; feasible max depth is " + std::to_string(depth - 1),
                        depth - 1);
    total += next_size;

    std::vector<PreimageEntry> next(next_size);
    parallel_chunks(layer.size(), opt.exec, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        std::size_t out = offsets[i];
        double prev = -1e300;
        for (std::size_t k = 0; k < branches.size(); ++k) {
          const Branch& br = branches[k];
          if (!br.covers(layer[i].point)) continue;
          const double y = br.inverse(layer[i].point);
          if (std::abs(y - prev) <= kPreimageMergeTol) continue;
          prev = y;
          next[out++] = {y, eval_on_branch(phi, y, br.lo(), br.hi()) + layer[i].birkhoff,
                         (layer[i].word << bits) | static_cast<std::uint64_t>(k)};
        }
      }
    });
    layer = std::move(next);
    visit(depth, std::span<const PreimageEntry>(layer));
  }
}

/// Exact enumeration of f^{-n}(x0) with Birkhoff sums.
template <PotentialLike P>
PreimageLayer preimage_tree(const IntervalMap& map, const P& phi, double x0, int n,
                            const WalkOptions& opt = {}) {
  if (n < 1) throw DomainError("preimage_tree: depth must be at least 1");
  PreimageLayer out;
  out.depth = n;
  out.base = x0;
  out.symbol_bits = symbol_bits_for(map.branch_count());
  walk_preimage_tree(
      map, phi, x0, n,
      [&](int depth, std::span<const PreimageEntry> entries) {
        if (depth == n) out.entries.assign(entries.begin(), entries.end());
      },
      opt);
  return out;
}

/// Smallest depth whose layer f^{-n}(x0) has at least `leaves` points,
/// capped at `cap` (and at the 64-bit word limit).
inline int depth_for_leaves(const IntervalMap& map, double x0, std::size_t leaves, int cap) {
  cap = std::min(cap, 64 / symbol_bits_for(map.branch_count()));
  std::vector<double> layer{x0};
  for (int depth = 1; depth <= cap; ++depth) {
    std::vector<double> next;
    for (double y : layer)
      for (double z : preimages(map, y)) next.push_back(z);
    if (next.size() >= leaves || next.empty()) return depth;
    layer = std::move(next);
  }
  return cap;
}

struct MapDiagnostics {
  bool passed = true;
  std::vector<double> continuity_residuals;  // one per interior breakpoint
  std::vector<bool> surjective;              // per branch
  bool monotone = true;
  bool image_in_domain = true;
  bool has_turning_point = false;
  std::vector<double> turning_points;
  std::vector<double> critical_points;
  bool topologically_exact = false;
  std::vector<std::string> failures;
};

inline constexpr double kContinuityTol = 1e-9;

/// Structural checks; `passed` is false on any continuity residual above
/// 1e-9, non-monotone branch, image leaving the domain, or injective map.
inline MapDiagnostics validate(const IntervalMap& map, int samples_per_branch = 256) {
  MapDiagnostics d;
  const auto bs = map.branches();
  for (std::size_t i = 0; i + 1 < bs.size(); ++i) {
    const double x = bs[i].hi();
    const double r = std::abs(bs[i].forward(x) - bs[i + 1].forward(x));
    d.continuity_residuals.push_back(r);
    if (r > kContinuityTol) {
      d.passed = false;
      d.failures.push_back("continuity violated at breakpoint " + std::to_string(x) +
                           " (residual " + std::to_string(r) + ")");
    }
    if (bs[i].orientation() != bs[i + 1].orientation()) {
      d.turning_points.push_back(x);
      d.has_turning_point = true;
    }
  }
  for (const Branch& b : bs) {
    d.surjective.push_back(detail::near(b.image_lo(), map.lo(), 1e-12) &&
                           detail::near(b.image_hi(), map.hi(), 1e-12));
    if (b.image_lo() < map.lo() - 1e-12 || b.image_hi() > map.hi() + 1e-12) {
      d.image_in_domain = false;
      d.passed = false;
      d.failures.push_back("branch image leaves the domain");
    }
    const double sign = b.orientation() == Orientation::increasing ? 1.0 : -1.0;
    double prev = b.forward(b.lo());
    for (int s = 1; s <= samples_per_branch; ++s) {
      const double x = b.lo() + (b.hi() - b.lo()) * s / samples_per_branch;
      const double v = b.forward(x);
      if (sign * (v - prev) <= 0.0) d.monotone = false;
      prev = v;
    }
    if (!b.is_linear()) {
      const double c = 0.5;  // logistic critical point
      if (c >= b.lo() && c <= b.hi() &&
          std::find(d.critical_points.begin(), d.critical_points.end(), c) == d.critical_points.end())
        d.critical_points.push_back(c);
    }
  }
  if (!d.monotone) {
    d.passed = false;
    d.failures.push_back("a branch is not strictly monotone");
  }
  if (!d.has_turning_point) {
    d.passed = false;
    d.failures.push_back("map has no turning point (injective)");
  }
  d.topologically_exact = map.topologically_exact();
  return d;
}

inline void require_valid(const IntervalMap& map) {
  const auto d = validate(map);
  if (!d.passed) throw DomainError("invalid interval map: " + d.failures.front());
}

}  // namespace thermo
