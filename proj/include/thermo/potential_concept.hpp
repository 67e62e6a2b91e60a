#pragma once

#include <concepts>

namespace thermo {

/// Anything evaluable as a real potential on the map domain.
template <class P>
concept PotentialLike = requires(const P& p, double x) {
  { p(x) } -> std::convertible_to<double>;
};

/// Value of `p` at `x` seen from the branch [lo, hi]. Potentials that are
/// discontinuous at branch breakpoints provide `on_branch` and return the
/// one-sided value; continuous ones fall back to plain evaluation.
template <PotentialLike P>
double eval_on_branch(const P& p, double x, double lo, double hi) {
  if constexpr (requires { { p.on_branch(x, lo, hi) } -> std::convertible_to<double>; }) {
    return p.on_branch(x, lo, hi);
  } else {
    return p(x);
  }
}

/// phi + t * chi, keeping branch-aware evaluation of both terms.
template <PotentialLike P, PotentialLike Q>
struct ScaledSum {
  const P& phi;
  const Q& chi;
  double t = 0.0;

  double operator()(double x) const { return phi(x) + t * chi(x); }
  double on_branch(double x, double lo, double hi) const {
    return eval_on_branch(phi, x, lo, hi) + t * eval_on_branch(chi, x, lo, hi);
  }
};

/// phi + c.
template <PotentialLike P>
struct Shifted {
  const P& phi;
  double shift = 0.0;

  double operator()(double x) const { return phi(x) + shift; }
  double on_branch(double x, double lo, double hi) const {
    return eval_on_branch(phi, x, lo, hi) + shift;
  }
};

struct ZeroPotential {
  double operator()(double) const { return 0.0; }
};

}  // namespace thermo
