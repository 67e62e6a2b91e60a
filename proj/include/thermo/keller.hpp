#pragma once

// Oscillation seminorms against an atomic reference measure, p-variation,
// Hoelder norms and the inequality chain relating them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "parallel.hpp"

namespace thermo {

template <class T>
inline constexpr bool is_complex_v = false;
template <class R>
inline constexpr bool is_complex_v<std::complex<R>> = true;

/// Samples h(x_i) at strictly increasing x_i; between samples h takes the
/// value of the nearest sample to the left (the first sample further left).
template <class T = double>
class SampledFunction {
 public:
  SampledFunction(std::vector<double> xs, std::vector<T> vs) : x_(std::move(xs)), v_(std::move(vs)) {
    if (x_.empty() || x_.size() != v_.size())
      throw DomainError("sampled function: need k >= 1 points with one value each");
    for (std::size_t i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1])) throw DomainError("sampled function: points must strictly increase");
  }

  template <class Fn>
  static SampledFunction sample(Fn&& fn, std::span<const double> xs) {
    std::vector<T> v;
    v.reserve(xs.size());
    for (double x : xs) v.push_back(static_cast<T>(fn(x)));
    return SampledFunction(std::vector<double>(xs.begin(), xs.end()), std::move(v));
  }

  std::span<const double> points() const noexcept { return x_; }
  std::span<const T> values() const noexcept { return v_; }
  std::size_t size() const noexcept { return x_.size(); }

  std::size_t index_at(double t) const noexcept {
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  }
  T operator()(double t) const noexcept { return v_[index_at(t)]; }

 private:
  std::vector<double> x_;
  std::vector<T> v_;
};

/// Pointwise product on the union of both sample sets.
template <class T>
SampledFunction<T> product(const SampledFunction<T>& h, const SampledFunction<T>& g) {
  std::vector<double> xs;
  std::merge(h.points().begin(), h.points().end(), g.points().begin(), g.points().end(),
             std::back_inserter(xs));
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<T> vs;
  for (double x : xs) vs.push_back(h(x) * g(x));
  return SampledFunction<T>(std::move(xs), std::move(vs));
}

/// m of the closed interval between x and y.
inline double pseudo_distance(const AtomicMeasure& m, double x, double y) { return m.mass_in(x, y); }

struct OscProfile {
  std::vector<double> osc;  // osc(h, eps, z) at each atom z of m
  int empty_balls = 0;      // atoms whose ball contains no atom (osc set to 0)
};

namespace detail {

// Atom index range [l, r] of the ball {z : d(x, z) < eps} where the closed
// interval [x, x] carries mass m({x}); l > r means empty.
inline std::pair<std::ptrdiff_t, std::ptrdiff_t> ball_range(const AtomicMeasure& m, double x,
                                                            double eps) {
  const auto at = m.atoms();
  const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(at.size());
  // first atom >= x, last atom <= x
  const std::ptrdiff_t ge = std::lower_bound(at.begin(), at.end(), x,
                                             [](const Atom& a, double v) { return a.point < v; }) -
                            at.begin();
  const std::ptrdiff_t le = (std::upper_bound(at.begin(), at.end(), x,
                                              [](double v, const Atom& a) { return v < a.point; }) -
                             at.begin()) - 1;
  std::ptrdiff_t r = ge - 1;
  while (r + 1 < k && m.range_mass(ge, r + 2) < eps) ++r;
  std::ptrdiff_t l = le + 1;
  while (l - 1 >= 0 && m.range_mass(l - 1, le + 1) < eps) --l;
  if (ge == le && !(at[ge].mass < eps)) return {1, 0};  // x itself is a heavy atom
  if (l > le) l = ge;  // nothing on the left side
  if (r < ge) r = le;  // nothing on the right side
  return {l, r};
}

template <class T>
double diameter(std::span<const T> vals) {
  if (vals.empty()) return 0.0;
  if constexpr (is_complex_v<T>) {
    double d = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = i + 1; j < vals.size(); ++j) d = std::max(d, std::abs(vals[i] - vals[j]));
    return d;
  } else {
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    return static_cast<double>(*hi - *lo);
  }
}

}  // namespace detail

/// osc(h, eps, x): ess sup over the ball B_d(x, eps) of |h(y) - h(y')|,
/// the ess sup taken over atoms of m. Returns 0 for an empty ball.
template <class T>
double osc(const SampledFunction<T>& h, const AtomicMeasure& m, double eps, double x,
           bool* empty = nullptr) {
  if (!(eps > 0.0)) throw DomainError("osc: eps must be positive");
  const auto [l, r] = detail::ball_range(m, x, eps);
  if (empty) *empty = l > r;
  if (l > r) return 0.0;
  std::vector<T> vals;
  for (std::ptrdiff_t i = l; i <= r; ++i) vals.push_back(h(m.atoms()[i].point));
  return detail::diameter<T>(vals);
}

/// osc(h, eps, z) at every atom z. The balls are atom windows whose ends
/// move monotonically, so real values use sliding min/max deques.
template <class T>
OscProfile osc_profile(const SampledFunction<T>& h, const AtomicMeasure& m, double eps) {
  if (!(eps > 0.0)) throw DomainError("osc: eps must be positive");
  const auto at = m.atoms();
  const std::size_t k = at.size();
  OscProfile p;
  p.osc.assign(k, 0.0);
  std::vector<T> hv(k);
  for (std::size_t i = 0; i < k; ++i) hv[i] = h(at[i].point);

  // Window of atom i: j in [L, R] with range_mass(min, max+1) < eps.
  std::size_t L = 0, R = 0;  // R is one past the window end
  std::deque<std::size_t> qmax, qmin;
  std::size_t pushed = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(at[i].mass < eps)) {
      p.osc[i] = 0.0;
      ++p.empty_balls;
      continue;
    }
    while (L < i && !(m.range_mass(L, i + 1) < eps)) ++L;
    R = std::max(R, i + 1);
    while (R < k && m.range_mass(i, R + 1) < eps) ++R;
    if constexpr (is_complex_v<T>) {
      p.osc[i] = detail::diameter<T>(std::span<const T>(hv.data() + L, R - L));
    } else {
      while (pushed < R) {
        while (!qmax.empty() && hv[qmax.back()] <= hv[pushed]) qmax.pop_back();
        qmax.push_back(pushed);
        while (!qmin.empty() && hv[qmin.back()] >= hv[pushed]) qmin.pop_back();
        qmin.push_back(pushed);
        ++pushed;
      }
      while (qmax.front() < L) qmax.pop_front();
      while (qmin.front() < L) qmin.pop_front();
      p.osc[i] = static_cast<double>(hv[qmax.front()] - hv[qmin.front()]);
    }
  }
  return p;
}

template <class T>
double osc1(const SampledFunction<T>& h, const AtomicMeasure& m, double eps) {
  const auto p = osc_profile(h, m, eps);
  double s = 0.0;
  for (std::size_t i = 0; i < p.osc.size(); ++i) s += m.atoms()[i].mass * p.osc[i];
  return s;
}

template <class T>
double l1_norm(const SampledFunction<T>& h, const AtomicMeasure& m) {
  return m.integrate([&](double x) { return static_cast<double>(std::abs(h(x))); });
}

template <class T>
double sup_norm(const SampledFunction<T>& h) {
  double s = 0.0;
  for (const T& v : h.values()) s = std::max(s, static_cast<double>(std::abs(v)));
  return s;
}

inline constexpr int kEpsGridSteps = 20;

inline std::vector<double> eps_grid(double A) {
  std::vector<double> g;
  for (int i = 0; i <= kEpsGridSteps; ++i) g.push_back(std::ldexp(A, -i));
  return g;
}

struct KellerSeminorm {
  double seminorm = 0.0;  // sup over the eps grid of osc1 / eps^alpha (a lower bound)
  double norm = 0.0;      // ||h||_1 + seminorm
  double l1 = 0.0;
  double argmax_eps = 0.0;
};

template <class T>
KellerSeminorm keller_seminorm(const SampledFunction<T>& h, const AtomicMeasure& m, double alpha,
                               double A) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("keller_seminorm: alpha must be in (0, 1]");
  if (!(A > 0.0)) throw DomainError("keller_seminorm: A must be positive");
  KellerSeminorm k;
  k.argmax_eps = A;
  for (double e : eps_grid(A)) {
    const double r = osc1(h, m, e) / std::pow(e, alpha);
    if (r > k.seminorm) {
      k.seminorm = r;
      k.argmax_eps = e;
    }
  }
  k.l1 = l1_norm(h, m);
  k.norm = k.l1 + k.seminorm;
  return k;
}

/// Var_p over increasing subsequences of the samples, by the O(k^2)
/// recurrence best[i] = max_{j<i} best[j] + |h(x_i) - h(x_j)|^p.
template <class T>
double p_variation(const SampledFunction<T>& h, double p) {
  if (!(p >= 1.0)) throw DomainError("p_variation: p must be >= 1");
  const auto v = h.values();
  std::vector<double> best(v.size(), 0.0);
  double top = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    double b = 0.0;
    for (std::size_t j = 0; j < i; ++j)
      b = std::max(b, best[j] + std::pow(static_cast<double>(std::abs(v[i] - v[j])), p));
    best[i] = b;
    top = std::max(top, b);
  }
  return std::pow(top, 1.0 / p);
}

struct HolderNorm {
  double sup = 0.0;
  double seminorm = 0.0;
  double norm = 0.0;
};

template <class T>
HolderNorm holder_norm(const SampledFunction<T>& h, double alpha, const Exec& exec = {}) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_norm: alpha must be in (0, 1]");
  const auto x = h.points();
  const auto v = h.values();
  std::vector<double> row(x.size(), 0.0);
  parallel_chunks(x.size(), exec, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j)
        row[i] = std::max(row[i], static_cast<double>(std::abs(v[i] - v[j])) / std::pow(x[j] - x[i], alpha));
  });
  HolderNorm n;
  n.sup = sup_norm(h);
  for (double r : row) n.seminorm = std::max(n.seminorm, r);
  n.norm = n.sup + n.seminorm;
  return n;
}

struct NormReport {
  double l1 = 0.0;
  double linf = 0.0;
  double keller_seminorm = 0.0;
  double keller_norm = 0.0;
  double var_p = 0.0;      // p = 1 / alpha
  double bv_norm = 0.0;    // Var_p + ||h||_inf
  double holder_norm = 0.0;
  double A = 0.0;
  double alpha = 0.0;
  std::string measure;     // e.g. "atomic(64 atoms, mass 1)"
};

template <class T>
NormReport norm_report(const SampledFunction<T>& h, const AtomicMeasure& m, double alpha, double A) {
  NormReport r;
  const auto k = keller_seminorm(h, m, alpha, A);
  r.l1 = k.l1;
  r.linf = sup_norm(h);
  r.keller_seminorm = k.seminorm;
  r.keller_norm = k.norm;
  r.var_p = p_variation(h, 1.0 / alpha);
  r.bv_norm = r.var_p + r.linf;
  r.holder_norm = holder_norm(h, alpha).norm;
  r.A = A;
  r.alpha = alpha;
  r.measure = "atomic(" + std::to_string(m.size()) + " atoms, mass " + std::to_string(m.total_mass()) + ")";
  return r;
}

/// Multiplier in the product bound: max{1, A^alpha / (2 l)} with
/// l = m(X) / (4N), N = ceil(m(X) / (2A)).
inline double product_constant(double mass, double alpha, double A) {
  const double N = std::ceil(mass / (2.0 * A));
  const double ell = mass / (4.0 * N);
  return std::max(1.0, std::pow(A, alpha) / (2.0 * ell));
}

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  std::string detail;  // violating eps or pair, when failing
};

struct ChainAudit {
  std::vector<InequalityCheck> checks;
  bool passed = true;
};

inline constexpr double kAuditRelSlack = 1e-12;

/// (i)   ||h||_BV_{1/alpha} <= max{1, diam^alpha} ||h||_alpha
/// (ii)  ||h||_{alpha,1}   <= 2^alpha ||h||_BV_{1/alpha}
/// (iii) int osc(h, eps, .)^{1/alpha} dm <= 2 eps Var_{1/alpha}(h)^{1/alpha}, every grid eps
/// (iv)  ||h g||_{alpha,1} <= 2 C_* ||h||_{alpha,1} ||g||_{alpha,1} for each partner g
/// m must be a probability measure.
template <class T>
ChainAudit norm_chain_audit(const SampledFunction<T>& h, const AtomicMeasure& m, double alpha,
                            double A, std::span<const SampledFunction<T>> partners = {}) {
  if (std::abs(m.total_mass() - 1.0) > 1e-12)
    throw DomainError("norm_chain_audit: reference measure must have mass 1");
  auto holds = [](double lhs, double rhs) { return lhs <= rhs + kAuditRelSlack * std::abs(rhs) + 1e-300; };
  ChainAudit a;
  const double p = 1.0 / alpha;
  const NormReport r = norm_report(h, m, alpha, A);
  const double diam = h.points().back() - h.points().front();

  InequalityCheck c1{"bv_le_holder", r.bv_norm, std::max(1.0, std::pow(diam, alpha)) * r.holder_norm};
  c1.pass = holds(c1.lhs, c1.rhs);
  InequalityCheck c2{"keller_le_bv", r.keller_norm, std::pow(2.0, alpha) * r.bv_norm};
  c2.pass = holds(c2.lhs, c2.rhs);

  InequalityCheck c3{"osc_p_le_var", 0.0, 0.0};
  double worst = -1e300;
  const double varp = std::pow(r.var_p, p);
  for (double e : eps_grid(A)) {
    const auto prof = osc_profile(h, m, e);
    double lhs = 0.0;
    for (std::size_t i = 0; i < prof.osc.size(); ++i) lhs += m.atoms()[i].mass * std::pow(prof.osc[i], p);
    const double rhs = 2.0 * e * varp;
    if (lhs - rhs > worst) {
      worst = lhs - rhs;
      c3.lhs = lhs;
      c3.rhs = rhs;
    }
    if (!holds(lhs, rhs) && c3.pass) {
      c3.pass = false;
      c3.detail = "eps=" + std::to_string(e);
    }
  }

  InequalityCheck c4{"product_bound", 0.0, 0.0};
  const double cstar = product_constant(m.total_mass(), alpha, A);
  double worst4 = -1e300;
  for (std::size_t j = 0; j < partners.size(); ++j) {
    const double lhs = keller_seminorm(product(h, partners[j]), m, alpha, A).norm;
    const double rhs = 2.0 * cstar * r.keller_norm * keller_seminorm(partners[j], m, alpha, A).norm;
    if (lhs - rhs > worst4) {
      worst4 = lhs - rhs;
      c4.lhs = lhs;
      c4.rhs = rhs;
    }
    if (!holds(lhs, rhs) && c4.pass) {
      c4.pass = false;
      c4.detail = "partner=" + std::to_string(j);
    }
  }

  a.checks = {c1, c2, c3, c4};
  for (const auto& c : a.checks) a.passed = a.passed && c.pass;
  return a;
}

/// Random steps plus Hoelder bumps a |x - c|^alpha cut off at radius r,
/// sampled at k uniform points of [lo, hi].
inline SampledFunction<double> random_piecewise_holder(std::mt19937_64& rng, int k, double alpha,
                                                       double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, 4);
  const int steps = count(rng), bumps = count(rng);
  std::vector<double> jump_at, jump;
  for (int i = 0; i < steps; ++i) {
    jump_at.push_back(lo + (hi - lo) * u(rng));
    jump.push_back(4.0 * u(rng) - 2.0);
  }
  std::vector<double> centre, radius, amp;
  for (int i = 0; i < bumps; ++i) {
    centre.push_back(lo + (hi - lo) * u(rng));
    radius.push_back((hi - lo) * (0.05 + 0.3 * u(rng)));
    amp.push_back(4.0 * u(rng) - 2.0);
  }
  const double base = 2.0 * u(rng) - 1.0;
  std::vector<double> xs(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) xs[i] = lo + (hi - lo) * (i + 0.5) / k;
  return SampledFunction<double>::sample(
      [&](double x) {
        double v = base;
        for (int i = 0; i < steps; ++i)
          if (x >= jump_at[i]) v += jump[i];
        for (int i = 0; i < bumps; ++i) {
          const double d = std::abs(x - centre[i]);
          if (d < radius[i]) v += amp[i] * (std::pow(radius[i], alpha) - std::pow(d, alpha));
        }
        return v;
      },
      xs);
}

}  // namespace thermo
