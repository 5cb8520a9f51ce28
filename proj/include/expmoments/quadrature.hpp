#pragma once

#include <functional>
#include <span>

namespace expmoments {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_depth = 60;
  /// Length of the finite stretch integrated directly before a semi-infinite
  /// tail is mapped onto [0, 1) by t = start + c (exp(u / (1 - u)) - 1).
  double tail_threshold = 1e3;

  void validate() const;
};

/// Breakpoint of the integrand. With exponent in (-1, 0) the integrand is
/// assumed to behave like |t - at|^exponent there, and each adjacent
/// subinterval is integrated after the substitution t - at = h v^{1/(1+exponent)},
/// which renders it bounded. A nonnegative exponent only splits the range.
/// Points within rounding distance of a nonzero singular point are dropped,
/// so exponents near -1 should be placed at 0 by a change of variable.
struct SingularPoint {
  double at;
  double exponent = 0.0;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

using Integrand = std::function<double(double)>;

/// Adaptive integral of f over [a, b]; either bound may be infinite.
/// Global bisection of the worst subinterval under a 7/15-point Gauss-Kronrod
/// pair, stopping once the summed error estimate is below
/// max(abs_tol, rel_tol * |value|). Throws ConvergenceError (carrying the best
/// estimate and achieved error) if the tolerance cannot be met within
/// max_depth bisections per subinterval.
QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg = {},
                           std::span<const SingularPoint> singular = {});

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg,
                           std::span<const double> split_points);

}  // namespace expmoments
