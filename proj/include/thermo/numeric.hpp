#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace thermo::numeric {

// log(sum_i exp(args[i])), shifted by the largest argument.
// Returns -inf for an empty input.
inline double log_sum_exp(std::span<const double> args) {
  if (args.empty()) return -std::numeric_limits<double>::infinity();
  const double shift = *std::max_element(args.begin(), args.end());
  if (!std::isfinite(shift)) return shift;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - shift);
  return shift + std::log(sum);
}

// Weighted variant: log(sum_i w_i exp(args[i])) with w_i > 0.
inline double log_sum_exp(std::span<const double> args,
                          std::span<const double> log_weights) {
  std::vector<double> shifted(args.size());
  for (std::size_t i = 0; i < args.size(); ++i) shifted[i] = args[i] + log_weights[i];
  return log_sum_exp(shifted);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
};

// Ordinary least squares y ~ intercept + slope * x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  LinearFit fit;
  const std::size_t n = x.size();
  if (n < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.rms_residual = std::sqrt(ss_res / static_cast<double>(n));
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

// Least-squares polynomial of the given degree; returns coefficients c_0..c_d
// of sum c_k (x - center)^k. Normal equations on centred abscissae are
// adequate for the low degrees used here.
inline std::vector<double> fit_polynomial(std::span<const double> x,
                                          std::span<const double> y, int degree,
                                          double center = 0.0) {
  const int m = degree + 1;
  std::vector<double> a(static_cast<std::size_t>(m * m), 0.0);
  std::vector<double> b(static_cast<std::size_t>(m), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> pw(static_cast<std::size_t>(2 * m - 1), 1.0);
    for (int k = 1; k < 2 * m - 1; ++k) pw[k] = pw[k - 1] * (x[i] - center);
    for (int r = 0; r < m; ++r) {
      b[r] += pw[r] * y[i];
      for (int c = 0; c < m; ++c) a[r * m + c] += pw[r + c];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * m + col];
    if (d == 0.0) continue;
    for (int r = col + 1; r < m; ++r) {
      const double f = a[r * m + col] / d;
      for (int c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> coef(static_cast<std::size_t>(m), 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < m; ++c) s -= a[r * m + c] * coef[c];
    coef[r] = a[r * m + r] != 0.0 ? s / a[r * m + r] : 0.0;
  }
  return coef;
}

inline double eval_polynomial(std::span<const double> coef, double x,
                              double center = 0.0) {
  double v = 0.0;
  for (std::size_t k = coef.size(); k-- > 0;) v = v * (x - center) + coef[k];
  return v;
}

}  // namespace thermo::numeric
