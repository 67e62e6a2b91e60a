#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"

namespace thermo {

struct Atom {
  double point = 0.0;
  double mass = 0.0;
};

/// Finite weighted point set, kept sorted by point with coincident points
/// merged. Masses are nonnegative.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  explicit AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const Atom& a : atoms_)
      if (!(a.mass >= 0.0) || !std::isfinite(a.point))
        throw DomainError("atomic measure: masses must be >= 0 and points finite");
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& a, const Atom& b) { return a.point < b.point; });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const Atom& a : atoms_) {
      if (!merged.empty() && merged.back().point == a.point)
        merged.back().mass += a.mass;
      else
        merged.push_back(a);
    }
    atoms_ = std::move(merged);
    rebuild();
  }

  static AtomicMeasure dirac(double x) { return AtomicMeasure({{x, 1.0}}); }

  /// n equal atoms at the cell midpoints of [lo, hi].
  static AtomicMeasure uniform(int n, double lo = 0.0, double hi = 1.0) {
    std::vector<Atom> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[i] = {lo + (hi - lo) * (i + 0.5) / n, 1.0 / n};
    return AtomicMeasure(std::move(a));
  }

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  double total_mass() const noexcept { return prefix_.empty() ? 0.0 : prefix_.back(); }

  AtomicMeasure normalized() const {
    const double t = total_mass();
    if (!(t > 0.0)) throw DomainError("cannot normalize a measure of zero mass");
    std::vector<Atom> a = atoms_;
    for (Atom& x : a) x.mass /= t;
    return AtomicMeasure(std::move(a));
  }

  /// Mass of atoms in the closed interval [min(a,b), max(a,b)].
  double mass_in(double a, double b) const {
    if (a > b) std::swap(a, b);
    const auto first = std::lower_bound(atoms_.begin(), atoms_.end(), a,
                                        [](const Atom& x, double v) { return x.point < v; });
    const auto last = std::upper_bound(atoms_.begin(), atoms_.end(), b,
                                       [](double v, const Atom& x) { return v < x.point; });
    return range_mass(static_cast<std::size_t>(first - atoms_.begin()),
                      static_cast<std::size_t>(last - atoms_.begin()));
  }

  /// Mass of atoms with index in [i, j).
  double range_mass(std::size_t i, std::size_t j) const noexcept {
    if (j <= i) return 0.0;
    return prefix_[j] - prefix_[i];
  }

  template <class Fn>
  double integrate(Fn&& fn) const {
    double s = 0.0;
    for (const Atom& a : atoms_) s += a.mass * fn(a.point);
    return s;
  }

  /// Masses of `bins` equal cells of [lo, hi]; cell i is [lo + i w, lo + (i+1) w),
  /// the last cell is closed. Atoms outside [lo, hi] are ignored.
  std::vector<double> bin_masses(double lo, double hi, int bins) const {
    std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
    const double w = (hi - lo) / bins;
    for (const Atom& a : atoms_) {
      if (a.point < lo || a.point > hi) continue;
      int i = static_cast<int>(std::floor((a.point - lo) / w));
      i = std::clamp(i, 0, bins - 1);
      out[static_cast<std::size_t>(i)] += a.mass;
    }
    return out;
  }

  /// The binned measure as atoms at cell centres.
  AtomicMeasure binned(double lo, double hi, int bins) const {
    const auto m = bin_masses(lo, hi, bins);
    std::vector<Atom> a;
    for (int i = 0; i < bins; ++i)
      a.push_back({lo + (hi - lo) * (i + 0.5) / bins, m[static_cast<std::size_t>(i)]});
    return AtomicMeasure(std::move(a));
  }

 private:
  void rebuild() {
    prefix_.assign(atoms_.size() + 1, 0.0);
    // Neumaier-compensated running sum; trees have ~1e5 atoms.
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const double m = atoms_[i].mass, t = sum + m;
      comp += std::abs(sum) >= std::abs(m) ? (sum - t) + m : (m - t) + sum;
      sum = t;
      prefix_[i + 1] = sum + comp;
    }
  }

  std::vector<Atom> atoms_;
  std::vector<double> prefix_;
};

}  // namespace thermo
