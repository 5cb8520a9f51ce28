#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's quadrature, partial-fraction or moment code.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// Double-exponential quadrature, halving the step until two successive
// levels agree. tanh-sinh on [a, b]; exp-sinh on [a, inf).
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  const double c = 0.5 * (a + b), h2 = 0.5 * (b - a);
  auto level = [&](double h) {
    double s = 0.0;
    for (int k = -static_cast<int>(6.0 / h); k <= static_cast<int>(6.0 / h); ++k) {
      const double t = k * h;
      const double u = 0.5 * std::numbers::pi * std::sinh(t);
      const double w = 0.5 * std::numbers::pi * std::cosh(t) / (std::cosh(u) * std::cosh(u));
      const double dist = 1.0 / (std::exp(std::abs(u)) * std::cosh(u));  // 1 - |tanh u| without cancellation
      const double xx = t < 0 ? a + h2 * dist : (t > 0 ? b - h2 * dist : c);
      if (xx <= a || xx >= b || w == 0.0) continue;
      s += w * f(xx);
    }
    return s * h * h2;
  };
  double h = 0.5, prev = level(h);
  for (int it = 0; it < 9; ++it) {
    h *= 0.5;
    const double cur = level(h);
    if (std::abs(cur - prev) <= tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

inline double exp_sinh(const std::function<double(double)>& f, double a, double tol = 1e-13) {
  auto level = [&](double h) {
    double s = 0.0;
    for (int k = -static_cast<int>(6.5 / h); k <= static_cast<int>(6.5 / h); ++k) {
      const double t = k * h;
      const double u = 0.5 * std::numbers::pi * std::sinh(t);
      if (u > 700.0) break;
      const double x = std::exp(u);
      const double w = x * 0.5 * std::numbers::pi * std::cosh(t);
      if (x == 0.0) continue;
      const double v = f(a + x);
      if (std::isfinite(v)) s += w * v;
    }
    return s * h;
  };
  double h = 0.5, prev = level(h);
  for (int it = 0; it < 9; ++it) {
    h *= 0.5;
    const double cur = level(h);
    if (std::abs(cur - prev) <= tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

// E|G|^p by quadrature of 2 int_0^inf t^p phi(t) dt.
inline double gaussian_abs_moment(double p) {
  return 2.0 * exp_sinh([p](double t) { return std::pow(t, p) * std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }, 0.0);
}

// Sum of all degree-l monomials, by explicit enumeration of multisets.
template <class T>
T chs_enumerate(const std::vector<T>& x, int ell) {
  T total = 0;
  std::vector<int> idx(static_cast<std::size_t>(ell), 0);
  if (ell == 0) return T(1);
  const int n = static_cast<int>(x.size());
  while (true) {
    T term = 1;
    for (int i : idx) term *= x[static_cast<std::size_t>(i)];
    total += term;
    int pos = ell - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - 1) --pos;
    if (pos < 0) break;
    const int v = idx[static_cast<std::size_t>(pos)] + 1;
    for (int k = pos; k < ell; ++k) idx[static_cast<std::size_t>(k)] = v;
  }
  return total;
}

// Hypoexponential density for distinct positive/negative weights via the
// classical product formula f(t) = sum_i x_i^{n-2}/prod_{k!=i}(x_i - x_k) * e^{-t/x_i} on the side of x_i.
inline double hypoexp_density(const std::vector<double>& x, double t) {
  double s = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((x[i] > 0) != (t > 0)) continue;
    double d = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) d *= (x[i] - x[k]);
    s += std::pow(x[i], static_cast<double>(n) - 2.0) / d * std::exp(-t / x[i]) * (x[i] > 0 ? 1.0 : -1.0);
  }
  return s;
}

}  // namespace oracle
