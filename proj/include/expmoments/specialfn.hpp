#pragma once

// Closed-form special functions used throughout the library: log-gamma and
// gamma ratios, absolute moments of the standard Gaussian, the constant of
// the Fourier representation of |y|^q, and the Psi/R functions that control
// the Gaussian comparison for 2 <= p <= 4.

namespace expmoments {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kE = 2.71828182845904523536028747135266250;

/// log Gamma(x) for x > 0. Stirling series after upward recurrence to x >= 15,
/// reflection on (0, 0.5). Absolute error below 1e-14 on the whole range.
double log_gamma(double x);

/// Gamma(x) for x > 0 via exp(log_gamma), exact factorials for small integers.
double gamma_fn(double x);

/// log(Gamma(z + d) / Gamma(z)) for z > 0, z + d > 0, without cancellation
/// for large z. Used by every ratio of gamma functions with nearby arguments.
double log_gamma_ratio(double z, double d);

/// (n-1)!! for even n = l, i.e. E G^l; returns 1 for l = 0.
double double_factorial_odd(int ell);

/// E|G|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) for p > -1.
double gaussian_abs_moment(double p);

/// c_q = (2/pi) sin(pi q / 2) Gamma(q + 1) for 0 < q < 2, so that
/// E|Y|^q = c_q * int_0^inf (1 - Re phi_Y(t)) t^{-q-1} dt.
double fourier_constant(double q);

/// Psi_beta(x) = Gamma(x + beta + 1/2) / (x^beta Gamma(x + 1/2)).
double psi(double beta, double x);

/// log Psi_beta(x); keeps full relative accuracy in Psi - 1 for large x.
double log_psi(double beta, double x);

/// R_beta(x) = (1 + 1/x)^beta (x + 1/2) / (x + beta + 1/2), so that
/// Psi_beta(x) = prod_{k >= 0} R_beta(x + k).
double ratio_r(double beta, double x);

/// Closed form of I_{q,s} = int_0^inf (1 - (1 + t^2/s)^{-(1+s)/2}) t^{-q-1} dt
/// for 0 < q < 2, s > 0.
double closed_integral_iqs(double q, double s);

}  // namespace expmoments
