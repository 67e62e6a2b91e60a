#pragma once

// Hoelder potentials on the map domain and the Birkhoff-averaging transform
// phi~ = (1/N) S_N(phi), which is cohomologous to phi.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "potential_concept.hpp"

namespace thermo {

enum class PotentialKind { constant, branch_pw_constant, cosine_series, pw_linear };

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::constant: return "constant";
    case PotentialKind::branch_pw_constant: return "branch_pw_constant";
    case PotentialKind::cosine_series: return "cosine_series";
    case PotentialKind::pw_linear: return "pw_linear";
  }
  return "?";
}

class Potential {
 public:
  static Potential constant(double c) {
    Potential p(PotentialKind::constant);
    p.values_ = {c};
    p.holder_constant_ = 0.0;
    return p;
  }

  /// Constant values[i] on branch i of `map`. At a shared breakpoint the left
  /// branch's value is used; `on_branch` gives the one-sided value instead.
  /// The Hoelder bound holds within each branch (it is 0 there).
  static Potential branch_constant(const IntervalMap& map, std::vector<double> values) {
    if (values.size() != map.branch_count())
      throw DomainError("branch_pw_constant needs one value per branch");
    Potential p(PotentialKind::branch_pw_constant);
    p.lo_ = map.lo();
    p.hi_ = map.hi();
    p.knots_ = {map.lo()};
    for (double b : map.breakpoints()) p.knots_.push_back(b);
    p.knots_.push_back(map.hi());
    p.values_ = std::move(values);
    p.holder_constant_ = 0.0;
    p.piecewise_ = true;
    return p;
  }

  /// sum_k a_k cos(2 pi k u), u = (x - lo) / (hi - lo).
  static Potential cosine_series(std::vector<double> coefficients, double lo = 0.0,
                                 double hi = 1.0) {
    if (coefficients.empty()) throw DomainError("cosine_series needs coefficients");
    Potential p(PotentialKind::cosine_series);
    p.lo_ = lo;
    p.hi_ = hi;
    p.values_ = std::move(coefficients);
    double lip = 0.0;
    for (std::size_t k = 1; k < p.values_.size(); ++k)
      lip += 2.0 * std::numbers::pi * static_cast<double>(k) * std::abs(p.values_[k]);
    p.holder_constant_ = lip / (hi - lo);
    return p;
  }

  /// Continuous interpolant of (xs[i], vs[i]); xs strictly increasing.
  static Potential piecewise_linear(std::vector<double> xs, std::vector<double> vs) {
    if (xs.size() < 2 || xs.size() != vs.size())
      throw DomainError("pw_linear potential needs >= 2 matching nodes");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw DomainError("pw_linear nodes must increase");
    Potential p(PotentialKind::pw_linear);
    p.lo_ = xs.front();
    p.hi_ = xs.back();
    double lip = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      lip = std::max(lip, std::abs((vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1])));
    p.knots_ = std::move(xs);
    p.values_ = std::move(vs);
    p.holder_constant_ = lip;
    return p;
  }

  /// -t log|Df| on a piecewise-linear map (branch-constant there).
  static Potential log_derivative(const IntervalMap& map, double t) {
    std::vector<double> v;
    for (const Branch& b : map.branches()) {
      if (!b.is_linear()) throw DomainError("log_derivative needs a piecewise-linear map");
      v.push_back(-t * std::log(std::abs(b.slope())));
    }
    return branch_constant(map, std::move(v));
  }

  /// Re-declares the Hoelder exponent; the constant is rescaled from the
  /// Lipschitz bound via |x-y| <= L  =>  |x-y| <= L^{1-a} |x-y|^a.
  Potential with_holder_exponent(double alpha) const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Hoelder exponent must be in (0,1]");
    Potential p = *this;
    const double len = std::isfinite(hi_ - lo_) ? hi_ - lo_ : 1.0;
    p.holder_constant_ = holder_constant_ * std::pow(len, 1.0 - alpha) /
                         std::pow(len, 1.0 - holder_exponent_);
    p.holder_exponent_ = alpha;
    return p;
  }

  PotentialKind kind() const noexcept { return kind_; }
  double holder_exponent() const noexcept { return holder_exponent_; }
  double holder_constant() const noexcept { return holder_constant_; }
  /// True if the Hoelder bound is only claimed within each piece.
  bool piecewise() const noexcept { return piecewise_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  double operator()(double x) const {
    check_domain(x);
    switch (kind_) {
      case PotentialKind::constant: return values_[0];
      case PotentialKind::branch_pw_constant: return values_[piece_left(x)];
      case PotentialKind::cosine_series: {
        const double u = (x - lo_) / (hi_ - lo_);
        double s = values_[0];
        for (std::size_t k = 1; k < values_.size(); ++k)
          s += values_[k] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * u);
        return s;
      }
      case PotentialKind::pw_linear: {
        const std::size_t i = piece_left(x);
        const double t = (x - knots_[i]) / (knots_[i + 1] - knots_[i]);
        return values_[i] + t * (values_[i + 1] - values_[i]);
      }
    }
    return 0.0;
  }

  /// Value at x as a limit from inside [lo, hi]; differs from operator() only
  /// for branch_pw_constant at a breakpoint.
  double on_branch(double x, double lo, double hi) const {
    if (kind_ != PotentialKind::branch_pw_constant) return (*this)(x);
    check_domain(x);
    const bool at_end = x == lo || x == hi;
    return values_[piece_left(at_end ? 0.5 * (lo + hi) : x)];
  }

 private:
  explicit Potential(PotentialKind k) : kind_(k) {}

  void check_domain(double x) const {
    if (x < lo_ || x > hi_)
      throw DomainError("potential evaluated outside its domain at " + std::to_string(x));
  }

  // Piece index with shared knots attributed to the left piece.
  std::size_t piece_left(double x) const {
    const auto it = std::lower_bound(knots_.begin() + 1, knots_.end() - 1, x);
    return static_cast<std::size_t>(it - (knots_.begin() + 1));
  }

  PotentialKind kind_;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
  std::vector<double> knots_;
  std::vector<double> values_;
  double holder_exponent_ = 1.0;
  double holder_constant_ = 0.0;
  bool piecewise_ = false;
};

struct Range {
  double sup = 0.0;
  double inf = 0.0;
  double oscillation() const noexcept { return sup - inf; }
};

namespace detail {

// Golden-section refinement of a local extremum of fn on [a, b].
template <class Fn>
double refine_extremum(Fn&& fn, double a, double b, bool maximize) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  auto better = [&](double u, double v) { return maximize ? fn(u) > fn(v) : fn(u) < fn(v); };
  for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
    if (better(c, d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return fn(0.5 * (a + b));
}

}  // namespace detail

/// Grid extrema of a generic potential over the map domain.
template <PotentialLike P>
Range potential_range(const P& phi, const IntervalMap& map, int grid_size) {
  if (grid_size < 2) throw DomainError("potential_range: grid_size must be >= 2");
  Range r{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  auto take = [&](double v) {
    r.sup = std::max(r.sup, v);
    r.inf = std::min(r.inf, v);
  };
  for (int i = 0; i < grid_size; ++i)
    take(phi(map.lo() + (map.hi() - map.lo()) * i / (grid_size - 1)));
  for (const Branch& b : map.branches()) {
    take(eval_on_branch(phi, b.lo(), b.lo(), b.hi()));
    take(eval_on_branch(phi, b.hi(), b.lo(), b.hi()));
  }
  return r;
}

/// Grid extrema plus exact candidates: piece values and knots for the
/// piecewise kinds, refined interior extrema for cosine series.
inline Range potential_range(const Potential& phi, const IntervalMap& map, int grid_size) {
  if (grid_size < 2) throw DomainError("potential_range: grid_size must be >= 2");
  switch (phi.kind()) {
    case PotentialKind::constant: return {phi.values()[0], phi.values()[0]};
    case PotentialKind::branch_pw_constant: {
      const auto& v = phi.values();
      return {*std::max_element(v.begin(), v.end()), *std::min_element(v.begin(), v.end())};
    }
    case PotentialKind::pw_linear: {
      Range r = potential_range<Potential>(phi, map, grid_size);
      for (double x : phi.knots()) {
        if (!map.contains(x)) continue;
        r.sup = std::max(r.sup, phi(x));
        r.inf = std::min(r.inf, phi(x));
      }
      return r;
    }
    case PotentialKind::cosine_series: {
      Range r = potential_range<Potential>(phi, map, grid_size);
      const double h = (map.hi() - map.lo()) / (grid_size - 1);
      auto f = [&](double x) { return phi(std::clamp(x, map.lo(), map.hi())); };
      for (int i = 1; i + 1 < grid_size; ++i) {
        const double x = map.lo() + h * i;
        const double l = f(x - h), c = f(x), rr = f(x + h);
        if (c >= l && c >= rr) r.sup = std::max(r.sup, detail::refine_extremum(f, x - h, x + h, true));
        if (c <= l && c <= rr) r.inf = std::min(r.inf, detail::refine_extremum(f, x - h, x + h, false));
      }
      return r;
    }
  }
  return {};
}

/// phi~ = (1/N) S_N(phi). `bound` is C = (N-1)(sup phi - inf phi), which
/// bounds |S_n(phi~) - S_n(phi)| for every n.
class AveragedPotential {
 public:
  AveragedPotential(Potential base, IntervalMap map, int order, double bound)
      : base_(std::move(base)), map_(std::move(map)), order_(order), bound_(bound) {}

  double operator()(double x) const { return birkhoff_sum(map_, base_, x, order_) / order_; }

  double on_branch(double x, double lo, double hi) const {
    const double first = eval_on_branch(base_, x, lo, hi);
    if (order_ == 1) return first;
    return (first + birkhoff_sum(map_, base_, map_(x), order_ - 1)) / order_;
  }

  const Potential& base() const noexcept { return base_; }
  int order() const noexcept { return order_; }
  double bound() const noexcept { return bound_; }

 private:
  Potential base_;
  IntervalMap map_;
  int order_;
  double bound_;
};

inline constexpr int kDefaultRangeGrid = 4096;

inline AveragedPotential average_transform(const Potential& phi, const IntervalMap& map, int order) {
  if (order < 1) throw DomainError("average_transform: N must be >= 1");
  const Range r = potential_range(phi, map, kDefaultRangeGrid);
  return AveragedPotential(phi, map, order, (order - 1) * r.oscillation());
}

struct HolderAudit {
  bool passed = true;
  double worst_ratio = 0.0;  // max |phi(x)-phi(y)| / |x-y|^alpha over sampled pairs
  int pairs = 0;
};

/// Samples random pairs and checks the declared Hoelder bound. For
/// piecewise potentials, only pairs inside one piece are tested.
inline HolderAudit holder_audit(const Potential& phi, const IntervalMap& map, int pairs,
                                std::uint64_t seed) {
  HolderAudit a;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(map.lo(), map.hi());
  const double alpha = phi.holder_exponent();
  for (int i = 0; i < pairs; ++i) {
    double x = u(rng), y = u(rng);
    if (x == y) continue;
    if (phi.piecewise()) {
      // Move y into x's piece.
      const auto& k = phi.knots();
      const auto it = std::lower_bound(k.begin() + 1, k.end() - 1, x);
      const std::size_t piece = static_cast<std::size_t>(it - (k.begin() + 1));
      const double a0 = k[piece], b0 = k[piece + 1];
      y = a0 + (b0 - a0) * (y - map.lo()) / (map.hi() - map.lo());
      if (x == y) continue;
    }
    const double ratio = std::abs(phi(x) - phi(y)) / std::pow(std::abs(x - y), alpha);
    a.worst_ratio = std::max(a.worst_ratio, ratio);
    ++a.pairs;
  }
  a.passed = a.worst_ratio <= phi.holder_constant() * (1.0 + 1e-9) + 1e-12;
  return a;
}

}  // namespace thermo
