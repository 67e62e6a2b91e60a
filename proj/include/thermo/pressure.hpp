#pragma once

// Topological pressure estimators: iterated-preimage (tree) sums and greedy
// (n, eps)-separated sets, plus hyperbolicity / bounded-range classification,
// the pressure-curve smoothness probe and the bounded-range counterexample.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "numeric.hpp"
#include "potentials.hpp"

namespace thermo {

struct PressureReport {
  double base = 0.0;
  int n_min = 1;
  int n_max = 1;
  std::vector<int> depths;         // n_min..n_max
  std::vector<double> log_sums;    // a_n = log sum_{y in f^-n(x0)} exp(S_n phi(y))
  std::vector<double> p;           // p_n = a_n / n
  double estimate = 0.0;           // P^
  double delta = 0.0;              // max_{last 5 depths} |p_n - P^|
};

namespace detail {

inline void reject_breakpoint(const IntervalMap& map, double x0) {
  if (!(x0 > map.lo() && x0 < map.hi()))
    throw DomainError("base point must be interior to the domain");
  for (double b : map.breakpoints())
    if (std::abs(b - x0) <= 1e-12)
      throw DomainError("base point lies on a breakpoint (ambiguous branch word)");
}

inline double layer_log_sum(std::span<const PreimageEntry> entries) {
  std::vector<double> s(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) s[i] = entries[i].birkhoff;
  return numeric::log_sum_exp(s);
}

}  // namespace detail

/// a_1..a_n for the preimage tree of x0.
template <PotentialLike P>
std::vector<double> tree_log_sums(const IntervalMap& map, const P& phi, double x0, int n,
                                  const WalkOptions& opt = {}) {
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(n));
  walk_preimage_tree(
      map, phi, x0, n,
      [&](int, std::span<const PreimageEntry> e) { a.push_back(detail::layer_log_sum(e)); }, opt);
  return a;
}

/// p_n = (1/n) log sum_{y in f^-n(x0)} exp(S_n phi(y)) for n in [n_min, n_max].
/// P^ is the mean of the last three increments a_n - a_{n-1} (a_0 = 0), which
/// removes the O(1/n) offset carried by p_n itself.
template <PotentialLike P>
PressureReport tree_pressure(const IntervalMap& map, const P& phi, double x0, int n_min,
                             int n_max, const WalkOptions& opt = {}) {
  if (n_min < 1 || n_max < n_min) throw DomainError("tree_pressure: need 1 <= n_min <= n_max");
  detail::reject_breakpoint(map, x0);
  const std::vector<double> a = tree_log_sums(map, phi, x0, n_max, opt);

  PressureReport r;
  r.base = x0;
  r.n_min = n_min;
  r.n_max = n_max;
  for (int n = n_min; n <= n_max; ++n) {
    r.depths.push_back(n);
    r.log_sums.push_back(a[static_cast<std::size_t>(n - 1)]);
    r.p.push_back(a[static_cast<std::size_t>(n - 1)] / n);
  }
  const int k = std::min(3, n_max);
  const double a_top = a[static_cast<std::size_t>(n_max - 1)];
  const double a_low = n_max - k >= 1 ? a[static_cast<std::size_t>(n_max - k - 1)] : 0.0;
  r.estimate = (a_top - a_low) / k;
  r.delta = 0.0;
  const std::size_t last = r.p.size();
  for (std::size_t i = last - std::min<std::size_t>(5, last); i < last; ++i)
    r.delta = std::max(r.delta, std::abs(r.p[i] - r.estimate));
  return r;
}

/// Pressure of the zero potential.
inline PressureReport topological_entropy(const IntervalMap& map, double x0, int n_max,
                                          const WalkOptions& opt = {}) {
  return tree_pressure(map, ZeroPotential{}, x0, 1, n_max, opt);
}

struct SeparatedSetEstimate {
  int n = 1;
  double eps = 0.0;
  int grid_size = 0;
  std::vector<double> points;  // the selected set F, in admission order
  double value = 0.0;          // (1/n) log sum_{y in F} exp(S_n phi(y))
};

/// dist_n(x, y) = max_{0 <= j < n} |f^j x - f^j y|.
inline double bowen_distance(const IntervalMap& map, double x, double y, int n) {
  double d = 0.0;
  for (int j = 0; j < n; ++j) {
    d = std::max(d, std::abs(x - y));
    if (j + 1 < n) {
      x = map(x);
      y = map(y);
    }
  }
  return d;
}

/// Greedy lower bound for the supremum over (n, eps)-separated subsets of a
/// uniform grid: candidates in descending exp(S_n phi) order, each admitted
/// iff dist_n >= eps from every admitted point.
template <PotentialLike P>
SeparatedSetEstimate separated_pressure(const IntervalMap& map, const P& phi, int n, double eps,
                                        int grid_size, const Exec& exec = {}) {
  if (!(eps > 0.0)) throw DomainError("separated_pressure: eps must be positive");
  if (grid_size < 10) throw DomainError("separated_pressure: grid_size must be >= 10");
  if (n < 1) throw DomainError("separated_pressure: n must be >= 1");
  const std::size_t g = static_cast<std::size_t>(grid_size);
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> orbit(g * nn);
  std::vector<double> weight(g);
  parallel_chunks(g, exec, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double x = map.lo() + (map.hi() - map.lo()) * static_cast<double>(i) / (grid_size - 1);
      double s = 0.0;
      for (std::size_t j = 0; j < nn; ++j) {
        orbit[i * nn + j] = x;
        s += phi(x);
        if (j + 1 < nn) x = map(x);
      }
      weight[i] = s;
    }
  });
  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });

  // Admitted points keyed by their first coordinate: (n, eps)-closeness needs
  // |x - y| < eps at j = 0, so only that window has to be scanned.
  std::multimap<double, std::size_t> admitted;
  SeparatedSetEstimate est;
  est.n = n;
  est.eps = eps;
  est.grid_size = grid_size;
  std::vector<double> sums;
  for (std::size_t i : order) {
    const double x = orbit[i * nn];
    bool separated = true;
    for (auto it = admitted.lower_bound(x - eps); it != admitted.end() && it->first < x + eps; ++it) {
      double d = 0.0;
      for (std::size_t j = 0; j < nn && d < eps; ++j)
        d = std::max(d, std::abs(orbit[i * nn + j] - orbit[it->second * nn + j]));
      if (d < eps) {
        separated = false;
        break;
      }
    }
    if (!separated) continue;
    admitted.emplace(x, i);
    est.points.push_back(x);
    sums.push_back(weight[i]);
  }
  est.value = numeric::log_sum_exp(sums) / n;
  return est;
}

enum class HyperbolicVerdict { hyperbolic, unknown };

struct HyperbolicityReport {
  HyperbolicVerdict verdict = HyperbolicVerdict::unknown;
  int witness_n = 0;       // smallest n with sup (1/n) S_n phi < P^ (0 if none)
  double margin = 0.0;     // P^ - sup (1/n) S_n phi at the witness (or best n)
  double best_sup = 0.0;   // sup (1/n) S_n phi at the reported n
};

inline constexpr double kHyperbolicMarginTol = 1e-9;

/// One-sided check of sup_x (1/n) S_n phi(x) < P^ for n <= n_max, the sup
/// taken over a uniform grid plus branch endpoints. The inequality must hold
/// with margin > 1e-9; `unknown` proves nothing.
template <PotentialLike P>
HyperbolicityReport hyperbolicity_check(const IntervalMap& map, const P& phi, double pressure,
                                        int n_max, int grid_size) {
  if (n_max < 1 || grid_size < 2) throw DomainError("hyperbolicity_check: bad parameters");
  std::vector<double> pts;
  for (int i = 0; i < grid_size; ++i)
    pts.push_back(map.lo() + (map.hi() - map.lo()) * i / (grid_size - 1));
  for (double b : map.breakpoints()) pts.push_back(b);
  std::vector<double> x = pts, s(pts.size(), 0.0);
  HyperbolicityReport rep;
  rep.margin = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] += phi(x[i]);
      x[i] = map(x[i]);
      sup = std::max(sup, s[i] / n);
    }
    // Branch-one-sided values matter for discontinuous potentials.
    if (n == 1)
      for (const Branch& b : map.branches())
        sup = std::max({sup, eval_on_branch(phi, b.lo(), b.lo(), b.hi()),
                        eval_on_branch(phi, b.hi(), b.lo(), b.hi())});
    const double margin = pressure - sup;
    if (margin > rep.margin) {
      rep.margin = margin;
      rep.best_sup = sup;
      rep.witness_n = n;
    }
    if (margin > kHyperbolicMarginTol) {
      rep.verdict = HyperbolicVerdict::hyperbolic;
      rep.witness_n = n;
      rep.margin = margin;
      rep.best_sup = sup;
      return rep;
    }
  }
  rep.witness_n = 0;
  return rep;
}

/// sup phi - inf phi < h_top.
inline bool bounded_range_check(const Range& range, double h_top) {
  if (h_top < 0.0) throw DomainError("bounded_range_check: h_top must be >= 0");
  return range.oscillation() < h_top;
}

struct CurveReport {
  std::vector<double> t;
  std::vector<double> pressure;      // P^(t)
  std::vector<double> delta;         // per-t convergence diagnostic
  std::vector<double> first_diff;    // dP/dt, central (one-sided second order at the ends)
  std::vector<double> second_diff;   // d2P/dt2, same stencils
  std::vector<double> cubic;         // least-squares cubic coefficients about t = 0
  std::vector<double> fit_residual;  // P^(t) - cubic(t)
  double fit_rms = 0.0;              // root-mean-square of fit_residual
  double max_second_diff = 0.0;      // max |second_diff|
};

/// t -> P^(phi + t chi) on a uniform t-grid with finite-difference and
/// cubic-fit smoothness diagnostics.
template <PotentialLike P, PotentialLike Q>
CurveReport pressure_curve(const IntervalMap& map, const P& phi, const Q& chi,
                           std::span<const double> t_grid, double x0, int n_max,
                           const WalkOptions& opt = {}) {
  const std::size_t m = t_grid.size();
  if (m < 5) throw DomainError("pressure_curve: need at least 5 t values");
  const double dt = (t_grid[m - 1] - t_grid[0]) / static_cast<double>(m - 1);
  for (std::size_t i = 1; i < m; ++i)
    if (std::abs((t_grid[i] - t_grid[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw DomainError("pressure_curve: t grid must be uniform");
  CurveReport c;
  c.t.assign(t_grid.begin(), t_grid.end());
  for (double t : t_grid) {
    const ScaledSum<P, Q> pot{phi, chi, t};
    const PressureReport r = tree_pressure(map, pot, x0, 1, n_max, opt);
    c.pressure.push_back(r.estimate);
    c.delta.push_back(r.delta);
  }
  const auto& y = c.pressure;
  c.first_diff.resize(m);
  c.second_diff.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0) {
      c.first_diff[i] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * dt);
      c.second_diff[i] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / (dt * dt);
    } else if (i + 1 == m) {
      c.first_diff[i] = (3 * y[i] - 4 * y[i - 1] + y[i - 2]) / (2 * dt);
      c.second_diff[i] = (2 * y[i] - 5 * y[i - 1] + 4 * y[i - 2] - y[i - 3]) / (dt * dt);
    } else {
      c.first_diff[i] = (y[i + 1] - y[i - 1]) / (2 * dt);
      c.second_diff[i] = (y[i + 1] - 2 * y[i] + y[i - 1]) / (dt * dt);
    }
    c.max_second_diff = std::max(c.max_second_diff, std::abs(c.second_diff[i]));
  }
  c.cubic = numeric::fit_polynomial(c.t, y, 3);
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - numeric::eval_polynomial(c.cubic, c.t[i]);
    c.fit_residual.push_back(r);
    ss += r * r;
  }
  c.fit_rms = std::sqrt(ss / static_cast<double>(m));
  return c;
}

/// Four full linear branches (slopes +-4) with a potential that is 0 on
/// [0, 1/2], falls linearly on [1/2, 3/4] and equals -(h + 1/2) on [3/4, 1].
/// X' (orbits staying in the first two branches) carries entropy log 2 and
/// phi = 0 there; X'' = {4/5}, the fixed point of branch 4, has phi < -h.
struct AppendixConstruction {
  IntervalMap map = IntervalMap::full_linear(4);
  double gap = 0.0;
  Potential phi = Potential::constant(0.0);
  double fixed_point_x2 = 0.8;
};

struct AppendixAudit {
  double sup_phi = 0.0;
  double inf_phi = 0.0;
  double sup_on_x1 = 0.0;   // sup of phi on [0, 1/2]
  double phi_at_x2 = 0.0;   // phi at the fixed point 4/5
  double pressure = 0.0;
  double pressure_delta = 0.0;
  double h_top = 0.0;
  bool hyperbolic = false;
  bool bounded_range = false;
  bool hypotheses_hold = false;  // phi <= 0, phi = 0 on X', phi < -h on X''
};

inline AppendixConstruction appendix_construct(double h) {
  if (!(h > 0.0)) throw DomainError("appendix_construct: h must be positive");
  AppendixConstruction c;
  c.gap = h;
  const double low = -(h + 0.5);
  c.phi = Potential::piecewise_linear({0.0, 0.5, 0.75, 1.0}, {0.0, 0.0, low, low});
  return c;
}

inline AppendixAudit appendix_audit(const AppendixConstruction& c, double x0 = 0.3,
                                    int n_max = 10, int grid_size = 4096,
                                    const WalkOptions& opt = {}) {
  AppendixAudit a;
  const Range r = potential_range(c.phi, c.map, grid_size);
  a.sup_phi = r.sup;
  a.inf_phi = r.inf;
  Range left{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int i = 0; i < grid_size; ++i) {
    const double v = c.phi(0.5 * i / (grid_size - 1));
    left.sup = std::max(left.sup, v);
    left.inf = std::min(left.inf, v);
  }
  a.sup_on_x1 = left.sup;
  a.phi_at_x2 = c.phi(c.fixed_point_x2);
  const PressureReport p = tree_pressure(c.map, c.phi, x0, 1, n_max, opt);
  a.pressure = p.estimate;
  a.pressure_delta = p.delta;
  a.h_top = topological_entropy(c.map, x0, n_max, opt).estimate;
  a.hyperbolic =
      hyperbolicity_check(c.map, c.phi, a.pressure, 1, grid_size).verdict == HyperbolicVerdict::hyperbolic;
  a.bounded_range = bounded_range_check(r, a.h_top);
  a.hypotheses_hold = r.sup <= 0.0 && left.sup == 0.0 && left.inf == 0.0 && a.phi_at_x2 < -c.gap;
  return a;
}

}  // namespace thermo
