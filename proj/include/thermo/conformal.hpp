#pragma once

// Patterson-Sullivan construction of the conformal measure from weighted
// preimage trees, with conformality and atom audits.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "measure.hpp"
#include "numeric.hpp"
#include "potential_concept.hpp"
#include "pressure.hpp"

namespace thermo {

struct TransitionSequence {
  std::vector<double> a;      // a_n for n = 1..n_max
  double c = 0.0;             // slope of a_n ~ n over the upper half of depths
  double residual = 0.0;      // max |a_n - fit| over the fitted depths
  double limsup = 0.0;        // max a_n / n over the upper half
  int fit_from = 1;           // first fitted depth
};

inline TransitionSequence transition_from_log_sums(std::vector<double> a) {
  const int n_max = static_cast<int>(a.size());
  if (n_max < 2) throw DomainError("transition_parameter: need n_max >= 2");
  TransitionSequence t;
  t.fit_from = n_max / 2 + 1;
  if (n_max - t.fit_from + 1 < 2) t.fit_from = n_max - 1;
  std::vector<double> xs, ys;
  t.limsup = -std::numeric_limits<double>::infinity();
  for (int n = t.fit_from; n <= n_max; ++n) {
    xs.push_back(n);
    ys.push_back(a[static_cast<std::size_t>(n - 1)]);
    t.limsup = std::max(t.limsup, ys.back() / n);
  }
  const auto fit = numeric::fit_line(xs, ys);
  t.c = fit.slope;
  for (std::size_t i = 0; i < xs.size(); ++i)
    t.residual = std::max(t.residual, std::abs(ys[i] - (fit.intercept + fit.slope * xs[i])));
  t.a = std::move(a);
  return t;
}

template <PotentialLike P>
TransitionSequence transition_parameter(const IntervalMap& map, const P& phi, double x0,
                                        int n_max, const WalkOptions& opt = {}) {
  detail::reject_breakpoint(map, x0);
  return transition_from_log_sums(tree_log_sums(map, phi, x0, n_max, opt));
}

/// b_n = n^theta (theta = 0 gives b_n = 1).
struct WeightSchedule {
  double theta = 0.0;

  double log_weight(int n) const { return theta == 0.0 ? 0.0 : theta * std::log(double(n)); }
  double weight(int n) const { return std::exp(log_weight(n)); }
};

/// Every layer f^{-n}(x0), n = 1..N, with its Birkhoff sums; collected once
/// and reweighted for each s.
struct PreimageSlices {
  double base = 0.0;
  std::vector<std::vector<double>> points;  // points[n-1]
  std::vector<std::vector<double>> sums;    // S_n phi at the same points
  std::vector<double> log_sums;             // a_n

  int depth() const noexcept { return static_cast<int>(points.size()); }
};

template <PotentialLike P>
PreimageSlices collect_slices(const IntervalMap& map, const P& phi, double x0, int n_max,
                              const WalkOptions& opt = {}) {
  if (n_max < 1) throw DomainError("collect_slices: n_max must be >= 1");
  detail::reject_breakpoint(map, x0);
  PreimageSlices s;
  s.base = x0;
  walk_preimage_tree(
      map, phi, x0, n_max,
      [&](int, std::span<const PreimageEntry> e) {
        std::vector<double> pts(e.size()), sm(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
          pts[i] = e[i].point;
          sm[i] = e[i].birkhoff;
        }
        s.log_sums.push_back(numeric::log_sum_exp(sm));
        s.points.push_back(std::move(pts));
        s.sums.push_back(std::move(sm));
      },
      opt);
  return s;
}

/// How the series beyond the deepest enumerated layer is handled.
///  truncate: drop it; the last layer must carry < tail_tol of the total.
///  geometric_closure: continue a_n linearly with the last increment and
///    place the tail mass on the deepest layer's normalized distribution.
///    The gate is then the stability of that distribution between the last
///    two layers (binned, max cell difference < tail_tol).
enum class TailMode { truncate, geometric_closure };

inline constexpr double kTailTol = 1e-3;

struct MsOptions {
  TailMode mode = TailMode::truncate;
  WeightSchedule weights{};
  double tail_tol = kTailTol;
  int stability_bins = 64;
};

struct MsResult {
  AtomicMeasure measure;
  double s = 0.0;
  double log_total = 0.0;             // log M_s
  std::vector<double> slice_mass;     // normalized mass of each depth 1..N
  double tail_fraction = 0.0;         // truncate: last layer share; closure: closed-form tail share
  double slice_stability = 0.0;       // binned max |sigma_N - sigma_{N-1}| (closure only)
};

namespace detail {

// log sum_{k>=1} w(N+k) r^k with r = exp(log_r) < 1.
inline double log_geometric_tail(const WeightSchedule& w, int N, double log_r) {
  if (!(log_r < 0.0)) return std::numeric_limits<double>::infinity();
  if (w.theta == 0.0) return log_r - std::log1p(-std::exp(log_r));
  double total = 0.0;
  const double base = w.log_weight(N + 1) + log_r;
  for (long k = 1; k < 200'000'000; ++k) {
    const double term = std::exp(w.log_weight(N + static_cast<int>(k)) + k * log_r - base);
    total += term;
    if (term < 1e-17 * total) break;
  }
  return base + std::log(total);
}

inline std::vector<double> binned_slice(std::span<const double> pts, std::span<const double> sums,
                                        double log_norm, double lo, double hi, int bins) {
  std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
  const double w = (hi - lo) / bins;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int b = std::clamp(static_cast<int>(std::floor((pts[i] - lo) / w)), 0, bins - 1);
    out[static_cast<std::size_t>(b)] += std::exp(sums[i] - log_norm);
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Log-weights of each depth's total contribution b_n exp(a_n - n s), plus the
// closed-form tail (closure mode), as log values.
struct DepthWeights {
  std::vector<double> log_depth;  // per depth 1..N
  double log_tail = -std::numeric_limits<double>::infinity();
  double log_total = 0.0;
};

inline DepthWeights depth_weights(const PreimageSlices& sl, double s, const MsOptions& opt) {
  const int N = sl.depth();
  DepthWeights dw;
  for (int n = 1; n <= N; ++n)
    dw.log_depth.push_back(opt.weights.log_weight(n) + sl.log_sums[static_cast<std::size_t>(n - 1)] - n * s);
  std::vector<double> all = dw.log_depth;
  if (opt.mode == TailMode::geometric_closure) {
    if (N < 2) throw DomainError("geometric closure needs at least two layers");
    const double c_tail = sl.log_sums[N - 1] - sl.log_sums[N - 2];
    const double log_r = c_tail - s;
    if (!(log_r < 0.0))
      throw ConvergenceError("build_ms: s must exceed the last growth increment " +
                             std::to_string(c_tail) + "; increase n_max or s - c");
    dw.log_tail = sl.log_sums[N - 1] - N * s + log_geometric_tail(opt.weights, N, log_r);
    all.push_back(dw.log_tail);
  }
  dw.log_total = numeric::log_sum_exp(all);
  return dw;
}

}  // namespace detail

/// m_s from precollected slices.
inline MsResult build_ms(const PreimageSlices& sl, double c, double s, double lo, double hi,
                         const MsOptions& opt = {}) {
  if (!(s > c)) throw DomainError("build_ms: need s > c");
  const int N = sl.depth();
  const auto dw = detail::depth_weights(sl, s, opt);
  MsResult r;
  r.s = s;
  r.log_total = dw.log_total;
  for (int n = 1; n <= N; ++n) r.slice_mass.push_back(std::exp(dw.log_depth[n - 1] - dw.log_total));

  if (opt.mode == TailMode::truncate) {
    r.tail_fraction = r.slice_mass.back();
    if (!(r.tail_fraction < opt.tail_tol))
      throw ConvergenceError("build_ms: truncated tail carries " + std::to_string(r.tail_fraction) +
                             " of the mass; increase n_max or s - c");
  } else {
    r.tail_fraction = std::exp(dw.log_tail - dw.log_total);
    if (N >= 2) {
      const auto a = detail::binned_slice(sl.points[N - 1], sl.sums[N - 1], sl.log_sums[N - 1], lo,
                                          hi, opt.stability_bins);
      const auto b = detail::binned_slice(sl.points[N - 2], sl.sums[N - 2], sl.log_sums[N - 2], lo,
                                          hi, opt.stability_bins);
      r.slice_stability = detail::max_abs_diff(a, b);
    }
    if (!(r.slice_stability < opt.tail_tol))
      throw ConvergenceError("build_ms: deepest layer distribution not yet stable (" +
                             std::to_string(r.slice_stability) + "); increase n_max");
  }

  std::vector<Atom> atoms;
  for (int n = 1; n <= N; ++n) {
    const auto& pts = sl.points[n - 1];
    const auto& sm = sl.sums[n - 1];
    // Each atom's share: depth share times its share within the layer.
    double share = dw.log_depth[n - 1] - dw.log_total;
    if (n == N && opt.mode == TailMode::geometric_closure)
      share = numeric::log_sum_exp(std::vector<double>{dw.log_depth[n - 1], dw.log_tail}) - dw.log_total;
    const double ln = sl.log_sums[n - 1];
    for (std::size_t i = 0; i < pts.size(); ++i) atoms.push_back({pts[i], std::exp(share + sm[i] - ln)});
  }
  r.measure = AtomicMeasure(std::move(atoms)).normalized();
  return r;
}

template <PotentialLike P>
MsResult build_ms(const IntervalMap& map, const P& phi, double x0, double c, double s, int n_max,
                  const MsOptions& opt = {}, const WalkOptions& walk = {}) {
  if (!(s > c)) throw DomainError("build_ms: need s > c");
  return build_ms(collect_slices(map, phi, x0, n_max, walk), c, s, map.lo(), map.hi(), opt);
}

inline std::vector<double> default_s_schedule(double c, int J) {
  std::vector<double> s;
  for (int j = 1; j <= J; ++j) s.push_back(c + 0.5 * std::ldexp(1.0, -j));
  return s;
}

inline constexpr double kStabilityTol = 1e-3;
inline constexpr int kDefaultScheduleLength = 12;

struct WeakLimitOptions {
  MsOptions ms{TailMode::geometric_closure, {}, kTailTol, 64};
  std::vector<double> schedule;  // empty: default s_j = c + 2^-j / 2, j = 1..J
  int schedule_length = kDefaultScheduleLength;
  int bins = 64;
};

struct WeakLimitResult {
  AtomicMeasure measure;            // m_s at the last accepted s
  AtomicMeasure binned;             // the same, in `bins` equal cells
  std::vector<double> schedule;     // accepted s_j
  double stability = std::numeric_limits<double>::infinity();
  double tail_fraction = 0.0;
  double slice_stability = 0.0;
  bool converged = false;
  std::string status;
};

/// Binned Cauchy criterion along s_j decreasing to c.
inline WeakLimitResult weak_limit(const PreimageSlices& sl, double c, double lo, double hi,
                                  const WeakLimitOptions& opt = {}) {
  if (opt.bins < 1) throw DomainError("weak_limit: bins must be >= 1");
  const std::vector<double> sched =
      opt.schedule.empty() ? default_s_schedule(c, opt.schedule_length) : opt.schedule;
  for (std::size_t j = 1; j < sched.size(); ++j)
    if (!(sched[j] < sched[j - 1])) throw DomainError("weak_limit: schedule must strictly decrease");
  const int N = sl.depth();

  // Per-layer binned distributions, reweighted for every s.
  std::vector<std::vector<double>> layer_bins;
  for (int n = 1; n <= N; ++n)
    layer_bins.push_back(detail::binned_slice(sl.points[n - 1], sl.sums[n - 1], sl.log_sums[n - 1],
                                              lo, hi, opt.bins));

  WeakLimitResult out;
  std::vector<double> prev;
  double accepted_s = 0.0;
  for (double s : sched) {
    if (!(s > c)) break;
    std::vector<double> cur(static_cast<std::size_t>(opt.bins), 0.0);
    try {
      const auto dw = detail::depth_weights(sl, s, opt.ms);
      double tail_share = 0.0, last_share = 0.0;
      for (int n = 1; n <= N; ++n) {
        const double w = std::exp(dw.log_depth[n - 1] - dw.log_total);
        if (n == N) last_share = w;
        for (int b = 0; b < opt.bins; ++b) cur[b] += w * layer_bins[n - 1][b];
      }
      if (opt.ms.mode == TailMode::geometric_closure) {
        tail_share = std::exp(dw.log_tail - dw.log_total);
        for (int b = 0; b < opt.bins; ++b) cur[b] += tail_share * layer_bins[N - 1][b];
      } else if (!(last_share < opt.ms.tail_tol)) {
        out.status = "tail bound broke at s = " + std::to_string(s);
        break;
      }
      out.tail_fraction = opt.ms.mode == TailMode::geometric_closure ? tail_share : last_share;
    } catch (const ConvergenceError& e) {
      out.status = e.what();
      break;
    }
    if (!prev.empty()) out.stability = detail::max_abs_diff(cur, prev);
    prev = std::move(cur);
    out.schedule.push_back(s);
    accepted_s = s;
  }
  if (out.schedule.empty()) throw ConvergenceError("weak_limit: no s in the schedule is admissible");

  if (opt.ms.mode == TailMode::geometric_closure && N >= 2)
    out.slice_stability = detail::max_abs_diff(layer_bins[N - 1], layer_bins[N - 2]);
  if (opt.bins == 1 && out.schedule.size() == 1) out.stability = 0.0;

  MsOptions final_opt = opt.ms;
  final_opt.tail_tol = std::numeric_limits<double>::infinity();  // gates were applied above
  out.measure = build_ms(sl, c, accepted_s, lo, hi, final_opt).measure;
  out.binned = out.measure.binned(lo, hi, opt.bins);
  out.converged = out.stability < kStabilityTol && out.slice_stability < opt.ms.tail_tol;
  if (out.status.empty()) out.status = out.converged ? "converged" : "not converged";
  else out.status = "not converged: " + out.status;
  return out;
}

template <PotentialLike P>
WeakLimitResult weak_limit(const IntervalMap& map, const P& phi, double x0, double c, int n_max,
                           const WeakLimitOptions& opt = {}, const WalkOptions& walk = {}) {
  return weak_limit(collect_slices(map, phi, x0, n_max, walk), c, map.lo(), map.hi(), opt);
}

struct Interval {
  double a = 0.0;
  double b = 0.0;
};

struct ConformalityReport {
  std::vector<double> deltas;  // Delta_A per test interval
  double max_delta = 0.0;
};

/// Delta_A = |mu(f(A)) - int_A exp(c - phi) dmu| for intervals A inside one
/// branch. An interval with b < a is empty and contributes 0.
template <PotentialLike P>
ConformalityReport conformality_audit(const AtomicMeasure& mu, const IntervalMap& map,
                                      const P& phi, double c, std::span<const Interval> tests) {
  ConformalityReport rep;
  const auto bps = map.breakpoints();
  for (const Interval& A : tests) {
    if (A.b < A.a) {
      rep.deltas.push_back(0.0);
      continue;
    }
    if (A.a < map.lo() || A.b > map.hi()) throw DomainError("conformality_audit: interval outside domain");
    for (double bp : bps)
      if (A.a < bp && bp < A.b) throw DomainError("conformality_audit: interval straddles a breakpoint");
    const Branch& br = map.branch(map.branch_index(0.5 * (A.a + A.b)));
    const double fa = br.forward(A.a), fb = br.forward(A.b);
    const double lhs = mu.mass_in(std::min(fa, fb), std::max(fa, fb));
    double rhs = 0.0;
    for (const Atom& at : mu.atoms()) {
      if (at.point < A.a) continue;
      if (at.point > A.b) break;
      rhs += at.mass * std::exp(c - eval_on_branch(phi, at.point, br.lo(), br.hi()));
    }
    rep.deltas.push_back(std::abs(lhs - rhs));
    rep.max_delta = std::max(rep.max_delta, rep.deltas.back());
  }
  return rep;
}

/// `count` random intervals, each inside one branch (drawn branch-uniformly).
inline std::vector<Interval> single_branch_intervals(const IntervalMap& map, int count,
                                                     unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Interval> out;
  for (int i = 0; i < count; ++i) {
    const Branch& br = map.branch(static_cast<std::size_t>(i) % map.branch_count());
    double x = br.lo() + (br.hi() - br.lo()) * u(rng);
    double y = br.lo() + (br.hi() - br.lo()) * u(rng);
    if (x > y) std::swap(x, y);
    out.push_back({x, y});
  }
  return out;
}

struct AtomAudit {
  std::vector<int> levels;
  std::vector<double> max_mass;  // largest single-cell mass per level
};

inline AtomAudit atom_audit(const AtomicMeasure& mu, std::span<const int> levels, double lo,
                            double hi) {
  AtomAudit a;
  int prev = 0;
  for (int bins : levels) {
    if (bins <= prev) throw DomainError("atom_audit: levels must increase");
    prev = bins;
    const auto m = mu.bin_masses(lo, hi, bins);
    a.levels.push_back(bins);
    a.max_mass.push_back(*std::max_element(m.begin(), m.end()));
  }
  return a;
}

}  // namespace thermo
