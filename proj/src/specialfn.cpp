#include "expmoments/specialfn.hpp"

#include <array>
#include <cmath>
#include <string>

#include "expmoments/errors.hpp"

namespace expmoments {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178032973640562;
constexpr double kAsymptoticFrom = 15.0;

// B_{2k} / (2k (2k - 1)), k = 1..8
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,           -1.0 / 360.0,  1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0,         -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
};

// sum_k kStirling[k] * w^{1-2k}
double stirling_tail(double w) {
  const double inv = 1.0 / w;
  const double inv2 = inv * inv;
  double acc = 0.0;
  for (auto it = kStirling.rbegin(); it != kStirling.rend(); ++it) acc = acc * inv2 + *it;
  return acc * inv;
}

double stirling_log_gamma(double w) {
  return (w - 0.5) * std::log(w) - w + kHalfLogTwoPi + stirling_tail(w);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  if (std::isinf(x)) return x;
  if (x < 0.5) return std::log(kPi / std::sin(kPi * x)) - log_gamma(1.0 - x);
  if (x >= kAsymptoticFrom) return stirling_log_gamma(x);
  double prod = 1.0;
  while (x < kAsymptoticFrom) {
    prod *= x;
    x += 1.0;
  }
  return stirling_log_gamma(x) - std::log(prod);
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  if (x <= 21.0 && x == std::floor(x)) {
    double f = 1.0;
    for (int k = 2; k < static_cast<int>(x); ++k) f *= k;
    return f;
  }
  return std::exp(log_gamma(x));
}

double log_gamma_ratio(double z, double d) {
  if (!(z > 0.0) || !(z + d > 0.0)) throw DomainError("log_gamma_ratio: arguments must be positive");
  if (d == 0.0) return 0.0;
  double acc = 0.0;
  while (std::min(z, z + d) < kAsymptoticFrom) {
    acc -= std::log1p(d / z);
    z += 1.0;
  }
  const double main = (z - 0.5) * std::log1p(d / z) + d * std::log(z + d) - d;
  return acc + main + (stirling_tail(z + d) - stirling_tail(z));
}

double double_factorial_odd(int ell) {
  if (ell < 0 || ell % 2 != 0) throw DomainError("double_factorial_odd: ell must be even and nonnegative");
  double v = 1.0;
  for (int k = ell - 1; k > 1; k -= 2) v *= k;
  return v;
}

double gaussian_abs_moment(double p) {
  if (!(p > -1.0)) throw DomainError("gaussian_abs_moment: p must exceed -1");
  if (p == std::floor(p) && p <= 300.0 && static_cast<long>(p) % 2 == 0)
    return double_factorial_odd(static_cast<int>(p));
  return std::exp(0.5 * p * std::log(2.0) + log_gamma_ratio(0.5, 0.5 * p));
}

double fourier_constant(double q) {
  if (!(q > 0.0 && q < 2.0)) throw DomainError("fourier_constant: q must lie in (0, 2)");
  return (2.0 / kPi) * std::sin(0.5 * kPi * q) * gamma_fn(q + 1.0);
}

double log_psi(double beta, double x) {
  require_positive(beta, "psi: beta");
  require_positive(x, "psi: x");
  const double z = x + 0.5;
  if (std::min(z, z + beta) < kAsymptoticFrom) return log_gamma_ratio(z, beta) - beta * std::log(x);
  // Same expansion as log_gamma_ratio with beta*log(z+beta) - beta*log(x) folded into a log1p.
  return x * std::log1p(beta / z) - beta + beta * std::log1p((beta + 0.5) / x) +
         (stirling_tail(z + beta) - stirling_tail(z));
}

double psi(double beta, double x) { return std::exp(log_psi(beta, x)); }

double ratio_r(double beta, double x) {
  require_positive(beta, "ratio_r: beta");
  require_positive(x, "ratio_r: x");
  return std::exp(beta * std::log1p(1.0 / x) - std::log1p(beta / (x + 0.5)));
}

double closed_integral_iqs(double q, double s) {
  if (!(q > 0.0 && q < 2.0)) throw DomainError("closed_integral_iqs: q must lie in (0, 2)");
  require_positive(s, "closed_integral_iqs: s");
  const double log_value =
      log_gamma(1.0 - 0.5 * q) + log_gamma_ratio(0.5 * (1.0 + s), 0.5 * q) - 0.5 * q * std::log(s);
  return std::exp(log_value) / q;
}

}  // namespace expmoments
