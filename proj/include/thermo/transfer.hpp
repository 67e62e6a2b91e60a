#pragma once

// Collocation discretization of the transfer operator on a uniform grid:
// leading eigenpair, equilibrium state, adjoint-invariance audit and
// correlation decay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "measure.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "potential_concept.hpp"

namespace thermo {

inline constexpr int kDefaultGrid = 4096;
inline constexpr int kMinGrid = 16;

/// Values at G equally spaced nodes lo = x_0 < ... < x_{G-1} = hi,
/// piecewise-linear in between.
class GridFunction {
 public:
  GridFunction(double lo, double hi, std::vector<double> values)
      : lo_(lo), hi_(hi), v_(std::move(values)) {
    if (v_.size() < static_cast<std::size_t>(kMinGrid))
      throw DomainError("grid function: need at least 16 nodes");
    if (!(hi > lo)) throw DomainError("grid function: empty domain");
    for (double v : v_)
      if (!std::isfinite(v)) throw DomainError("grid function: values must be finite");
    step_ = (hi_ - lo_) / static_cast<double>(v_.size() - 1);
  }

  template <class Fn>
  static GridFunction sample(Fn&& fn, int G, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) v[i] = fn(node(lo, hi, G, i));
    return GridFunction(lo, hi, std::move(v));
  }

  static GridFunction constant(double c, int G, double lo = 0.0, double hi = 1.0) {
    return GridFunction(lo, hi, std::vector<double>(static_cast<std::size_t>(G), c));
  }

  static double node(double lo, double hi, int G, int i) {
    return i == G - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (G - 1);
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  int size() const noexcept { return static_cast<int>(v_.size()); }
  double node(int i) const { return node(lo_, hi_, size(), i); }
  std::span<const double> values() const noexcept { return v_; }
  std::vector<double>& mutable_values() noexcept { return v_; }

  // Cell index and fractional position of x.
  std::pair<std::size_t, double> locate(double x) const {
    if (x < lo_ - 1e-12 || x > hi_ + 1e-12) throw DomainError("grid function: point outside domain");
    double t = (x - lo_) / step_;
    t = std::clamp(t, 0.0, static_cast<double>(v_.size() - 1));
    std::size_t j = std::min(static_cast<std::size_t>(t), v_.size() - 2);
    return {j, t - static_cast<double>(j)};
  }

  double operator()(double x) const {
    const auto [j, f] = locate(x);
    return (1.0 - f) * v_[j] + f * v_[j + 1];
  }

  double sup_norm() const {
    double s = 0.0;
    for (double v : v_) s = std::max(s, std::abs(v));
    return s;
  }

 private:
  double lo_, hi_, step_ = 0.0;
  std::vector<double> v_;
};

inline double integrate(const GridFunction& f, const AtomicMeasure& m) {
  return m.integrate([&](double x) { return f(x); });
}

/// L_phi restricted to one grid, stored as a sparse gather:
/// (L psi)(x_i) = sum over branches b covering x_i of exp(phi(y_b)) psi(y_b),
/// with psi(y_b) interpolated. Every covering branch contributes, so at a
/// node whose preimage is a shared turning point that point counts once per
/// branch (the operator is the continuous extension of its interior values).
class TransferOperator {
 public:
  template <PotentialLike P>
  TransferOperator(const IntervalMap& map, const P& phi, int G, const Exec& exec = {})
      : lo_(map.lo()), hi_(map.hi()), G_(G), exec_(exec) {
    if (G < kMinGrid) throw DomainError("transfer operator: grid must have at least 16 nodes");
    const auto br = map.branches();
    const GridFunction probe = GridFunction::constant(0.0, G, lo_, hi_);
    std::vector<std::vector<Term>> rows(static_cast<std::size_t>(G));
    parallel_chunks(static_cast<std::size_t>(G), exec_, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const double x = GridFunction::node(lo_, hi_, G, static_cast<int>(i));
        for (const Branch& B : br) {
          if (!B.covers(x)) continue;
          const double y = B.inverse(std::clamp(x, B.image_lo(), B.image_hi()));
          const auto [j, f] = probe.locate(y);
          rows[i].push_back({static_cast<std::uint32_t>(j), f,
                             std::exp(eval_on_branch(phi, y, B.lo(), B.hi()))});
        }
      }
    });
    offsets_.assign(static_cast<std::size_t>(G) + 1, 0);
    for (int i = 0; i < G; ++i) offsets_[i + 1] = offsets_[i] + rows[i].size();
    terms_.reserve(offsets_.back());
    for (auto& r : rows) terms_.insert(terms_.end(), r.begin(), r.end());
  }

  int grid() const noexcept { return G_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// scale * L psi.
  GridFunction apply(const GridFunction& psi, double scale = 1.0) const {
    if (psi.size() != G_ || psi.lo() != lo_ || psi.hi() != hi_)
      throw DomainError("transfer operator: grid mismatch");
    const auto v = psi.values();
    std::vector<double> out(static_cast<std::size_t>(G_));
    parallel_chunks(static_cast<std::size_t>(G_), exec_, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        double s = 0.0;
        for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
          const Term& t = terms_[k];
          s += t.w * ((1.0 - t.f) * v[t.j] + t.f * v[t.j + 1]);
        }
        out[i] = scale * s;
      }
    });
    return GridFunction(lo_, hi_, std::move(out));
  }

 private:
  struct Term {
    std::uint32_t j;
    double f;
    double w;
  };
  double lo_, hi_;
  int G_;
  Exec exec_;
  std::vector<std::size_t> offsets_;
  std::vector<Term> terms_;
};

/// L psi, or exp(-P) L psi when `normalized`.
template <PotentialLike P>
GridFunction apply_transfer(const IntervalMap& map, const P& phi, const GridFunction& psi,
                            bool normalized = false, double pressure = 0.0, const Exec& exec = {}) {
  if (psi.lo() != map.lo() || psi.hi() != map.hi())
    throw DomainError("apply_transfer: grid must cover the map domain");
  const TransferOperator L(map, phi, psi.size(), exec);
  return L.apply(psi, normalized ? std::exp(-pressure) : 1.0);
}

struct EigenReport {
  double lambda = 0.0;
  double log_lambda = 0.0;
  GridFunction h = GridFunction::constant(1.0, kMinGrid);
  double residual = 0.0;   // || L^ h - h ||_inf
  int iterations = 0;
  bool converged = false;
  double rho = 0.0;        // deflated decay rate
  double rho_r2 = 0.0;     // fit quality of the deflated decay
};

struct PowerOptions {
  int grid = kDefaultGrid;
  double tol = 1e-12;
  int max_iter = 2000;
  int deflation_steps = 30;
  int deflation_fit = 10;
  unsigned seed = 1;
  Exec exec{};
};

/// Power iteration psi <- L psi / ||L psi||_inf from psi = 1. h is rescaled
/// so that int h dmu = 1. The subdominant rate comes from iterating a seeded
/// random start vector deflated by psi - (int psi dmu) h at every step.
template <PotentialLike P>
EigenReport power_iteration(const IntervalMap& map, const P& phi, const AtomicMeasure& mu,
                            const PowerOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("power_iteration: tol must be positive");
  if (mu.empty()) throw DomainError("power_iteration: reference measure is empty");
  const TransferOperator L(map, phi, opt.grid, opt.exec);
  GridFunction psi = GridFunction::constant(1.0, opt.grid, map.lo(), map.hi());
  EigenReport r;
  double prev = 0.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    GridFunction next = L.apply(psi);
    const double lam = next.sup_norm();
    if (!(lam > 0.0)) throw ConvergenceError("power_iteration: operator annihilated the iterate");
    for (double& v : next.mutable_values()) v /= lam;
    r.iterations = it;
    r.lambda = lam;
    double res = 0.0;
    for (int i = 0; i < opt.grid; ++i) res = std::max(res, std::abs(next.values()[i] - psi.values()[i]));
    psi = std::move(next);
    if (it > 1 && std::abs(lam - prev) < opt.tol && res < 10.0 * opt.tol) {
      r.converged = true;
      break;
    }
    prev = lam;
  }
  r.log_lambda = std::log(r.lambda);
  const double norm = integrate(psi, mu);
  if (!(norm > 0.0)) throw ConvergenceError("power_iteration: eigenfunction has no mass under mu");
  for (double& v : psi.mutable_values()) v /= norm;
  const GridFunction Lh = L.apply(psi, 1.0 / r.lambda);
  r.residual = 0.0;
  for (int i = 0; i < opt.grid; ++i)
    r.residual = std::max(r.residual, std::abs(Lh.values()[i] - psi.values()[i]));
  r.h = psi;

  // Deflated iteration.
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Smooth start with random phases: nodal noise excites grid-periodic modes,
  // and pure cosine modes are annihilated in finitely many steps by the tent.
  double coef[8], phase[8];
  for (int k = 0; k < 8; ++k) {
    coef[k] = u(rng);
    phase[k] = M_PI * u(rng);
  }
  GridFunction w = GridFunction::sample(
      [&](double x) {
        const double t = (x - map.lo()) / (map.hi() - map.lo());
        double v = 0.0;
        for (int k = 0; k < 8; ++k) v += coef[k] * std::cos((k + 1) * M_PI * t + phase[k]) / (k + 1);
        return v;
      },
      opt.grid, map.lo(), map.hi());
  auto deflate = [&](GridFunction& f) {
    const double a = integrate(f, mu);
    auto& vals = f.mutable_values();
    for (int i = 0; i < opt.grid; ++i) vals[i] -= a * r.h.values()[i];
  };
  deflate(w);
  std::vector<double> ns, logs;
  double log_norm = std::log(w.sup_norm());
  for (int k = 1; k <= opt.deflation_steps; ++k) {
    w = L.apply(w, 1.0 / r.lambda);
    deflate(w);
    const double n = w.sup_norm();
    if (!(n > 0.0)) break;
    log_norm += std::log(n);
    ns.push_back(k);
    logs.push_back(log_norm);
    for (double& v : w.mutable_values()) v /= n;
  }
  if (ns.size() >= 2) {
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(opt.deflation_fit), ns.size());
    const auto fit = numeric::fit_line(std::span<const double>(ns).last(m),
                                       std::span<const double>(logs).last(m));
    r.rho = std::exp(fit.slope);
    r.rho_r2 = fit.r_squared;
  }
  return r;
}

struct EquilibriumState {
  GridFunction h = GridFunction::constant(1.0, kMinGrid);
  AtomicMeasure mu;
  AtomicMeasure nu;          // masses proportional to h(point) * mu-mass
  double pressure = 0.0;     // log lambda
  double integral_phi = 0.0; // int phi dnu
  double entropy = 0.0;      // pressure - int phi dnu
};

/// nu = h mu. With `hyperbolic` set, a nonpositive entropy is an audit failure.
template <PotentialLike P>
EquilibriumState equilibrium_state(const P& phi, const AtomicMeasure& mu, const EigenReport& eig,
                                   bool hyperbolic = false) {
  EquilibriumState s;
  s.h = eig.h;
  s.mu = mu;
  std::vector<Atom> atoms;
  atoms.reserve(mu.size());
  for (const Atom& a : mu.atoms()) atoms.push_back({a.point, std::max(0.0, eig.h(a.point)) * a.mass});
  s.nu = AtomicMeasure(std::move(atoms)).normalized();
  s.pressure = eig.log_lambda;
  s.integral_phi = s.nu.integrate([&](double x) { return phi(x); });
  s.entropy = s.pressure - s.integral_phi;
  if (hyperbolic && !(s.entropy > 0.0))
    throw AuditError("equilibrium_state: nonpositive entropy " + std::to_string(s.entropy) +
                     " for a hyperbolic potential");
  return s;
}

/// max over tests of |int L^ psi dmu - int psi dmu|.
template <PotentialLike P>
double adjoint_invariance_audit(const IntervalMap& map, const P& phi, double pressure,
                                const AtomicMeasure& mu, std::span<const GridFunction> tests,
                                const Exec& exec = {}) {
  double worst = 0.0;
  for (const GridFunction& psi : tests) {
    const GridFunction Lpsi = apply_transfer(map, phi, psi, true, pressure, exec);
    worst = std::max(worst, std::abs(integrate(Lpsi, mu) - integrate(psi, mu)));
  }
  return worst;
}

inline constexpr double kCorrelationFloor = 1e-13;

struct CorrelationReport {
  std::vector<double> c;   // C_n, n = 1..n_max
  double rho = std::numeric_limits<double>::quiet_NaN();
  double constant = std::numeric_limits<double>::quiet_NaN();
  double r_squared = 0.0;
  int fitted = 0;          // number of C_n above the floor
  bool resolved = false;   // false: mixing below resolution
};

/// C_n = |int obs o f^n . psi dnu - int obs dnu int psi dnu| with nu = h mu,
/// computed by duality against the conformal measure:
/// int obs o f^n . (psi h) dmu = int obs . L^^n(psi h) dmu.
/// L^ acts on psi's grid; h is interpolated onto it.
template <PotentialLike P>
CorrelationReport correlation(const IntervalMap& map, const P& phi, const GridFunction& obs,
                              const GridFunction& psi, const EquilibriumState& eq, int n_max,
                              const Exec& exec = {}) {
  if (n_max < 5) throw DomainError("correlation: n_max must be >= 5");
  const TransferOperator L(map, phi, psi.size(), exec);
  std::vector<double> v(static_cast<std::size_t>(psi.size()));
  for (int i = 0; i < psi.size(); ++i) v[i] = psi.values()[i] * eq.h(psi.node(i));
  GridFunction w(psi.lo(), psi.hi(), std::move(v));
  if (eq.mu.empty()) throw DomainError("correlation: equilibrium state has no reference measure");
  const double obs_mean = eq.mu.integrate([&](double x) { return obs(x) * eq.h(x); });
  const double scale = std::exp(-eq.pressure);
  CorrelationReport r;
  std::vector<double> xs, ys;
  for (int n = 1; n <= n_max; ++n) {
    w = L.apply(w, scale);
    const double joint = eq.mu.integrate([&](double x) { return obs(x) * w(x); });
    const double mass = integrate(w, eq.mu);
    const double cn = std::abs(joint - obs_mean * mass);
    r.c.push_back(cn);
    if (cn > kCorrelationFloor) {
      xs.push_back(n);
      ys.push_back(std::log(cn));
    }
  }
  r.fitted = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const auto fit = numeric::fit_line(xs, ys);
    r.rho = std::exp(fit.slope);
    r.constant = std::exp(fit.intercept);
    r.r_squared = fit.r_squared;
    r.resolved = true;
  }
  return r;
}

/// Indicator of the lower 30% of the domain on G nodes: a generic observable
/// with a jump away from every turning point and its preimages.
inline GridFunction default_observable(double lo, double hi, int G) {
  const double cut = lo + 0.3 * (hi - lo);
  return GridFunction::sample([&](double x) { return x <= cut ? 1.0 : 0.0; }, G, lo, hi);
}

inline constexpr int kCorrelationGrid = (1 << 20) + 1;

struct GapEstimate {
  double deflated = 0.0;
  double from_correlation = std::numeric_limits<double>::quiet_NaN();
  double rho = 0.0;        // the larger of the two
  double correlation_r2 = 0.0;
  bool flagged = false;    // estimators disagree by more than a factor 2
};

/// Deflated rate from the eigen report, cross-checked against the fitted
/// autocorrelation rate of the default observable.
template <PotentialLike P>
GapEstimate spectral_gap_estimate(const IntervalMap& map, const P& phi, const EigenReport& eig,
                                  const EquilibriumState& eq, int n_max = 20,
                                  int corr_grid = kCorrelationGrid, const Exec& exec = {}) {
  GapEstimate g;
  g.deflated = eig.rho;
  const GridFunction obs = default_observable(map.lo(), map.hi(), corr_grid);
  const auto c = correlation(map, phi, obs, obs, eq, n_max, exec);
  g.rho = g.deflated;
  if (c.resolved) {
    g.from_correlation = c.rho;
    g.correlation_r2 = c.r_squared;
    g.rho = std::max(g.deflated, c.rho);
    const double lo = std::min(g.deflated, c.rho), hi = std::max(g.deflated, c.rho);
    g.flagged = !(hi <= 2.0 * lo);
  }
  return g;
}

struct ContractionAudit {
  int witness_n = 0;       // smallest n with sup exp(S_n phi - n log lambda) < 1, 0 if none
  double sup_value = 0.0;  // that supremum (or the smallest seen)
};

template <PotentialLike P>
ContractionAudit gn_contraction_audit(const IntervalMap& map, const P& phi, double log_lambda,
                                      int n_max = 20, int grid = kDefaultGrid) {
  std::vector<double> x(static_cast<std::size_t>(grid)), s(x.size(), 0.0);
  for (int i = 0; i < grid; ++i) x[i] = GridFunction::node(map.lo(), map.hi(), grid, i);
  ContractionAudit a;
  a.sup_value = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] += phi(x[i]);
      x[i] = map(x[i]);
      sup = std::max(sup, s[i] - n * log_lambda);
    }
    a.sup_value = std::min(a.sup_value, std::exp(sup));
    if (std::exp(sup) < 1.0) {
      a.witness_n = n;
      a.sup_value = std::exp(sup);
      return a;
    }
  }
  return a;
}

/// Ten test functions for the adjoint-invariance audit: polynomials,
/// trigonometric modes, a smoothed bump on [0.2, 0.4] and a kink, all in the
/// unit coordinate u = (x - lo) / (hi - lo).
inline std::vector<GridFunction> adjoint_test_suite(double lo, double hi, int G) {
  auto bump = [](double u) {
    const double k = 200.0;
    return 0.5 * (std::tanh(k * (u - 0.2)) - std::tanh(k * (u - 0.4)));
  };
  const std::vector<double (*)(double)> fns{
      [](double) { return 1.0; },
      [](double u) { return u; },
      [](double u) { return u * u; },
      [](double u) { return std::cos(M_PI * u); },
      [](double u) { return std::sin(M_PI * u); },
      [](double u) { return std::cos(2.0 * M_PI * u); },
      [](double u) { return std::exp(u); },
      [](double u) { return std::abs(u - 0.5); },
      [](double u) { return std::sin(3.0 * M_PI * u + 0.4); },
  };
  std::vector<GridFunction> out;
  for (auto f : fns)
    out.push_back(GridFunction::sample([&](double x) { return f((x - lo) / (hi - lo)); }, G, lo, hi));
  out.push_back(GridFunction::sample([&](double x) { return bump((x - lo) / (hi - lo)); }, G, lo, hi));
  return out;
}

}  // namespace thermo
