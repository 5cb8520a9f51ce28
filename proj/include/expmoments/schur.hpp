#pragma once

// Majorization tools and the moment functional M_p(x) = E(sum_j sqrt(x_j) E_j)^p
// on the nonnegative orthant: the Q_k/C_p integral representation, the F_k
// closed forms for k <= 3, Schur-monotonicity scans and the two-point failure
// profile for p > 4.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "expmoments/engines.hpp"

namespace expmoments {

/// The statement of the F_k lemma says Schur-convex while every case of its
/// proof concludes Schur-concave; the checks here certify the concave reading.
inline constexpr std::string_view kLemmaFWordingNote =
    "F_k lemma: statement reads 'Schur-convex', proof cases conclude 'Schur-concave'; "
    "nonpositive Ostrowski differentials for x_i > x_j certify the concave reading";

/// M_p(x) for x_j >= 0, p > -1, via the moment engines on weights sqrt(x_j).
/// Zero entries are dropped; weights closer than a relative 1e-7 are merged
/// and the (second-order) displacement is charged to the error.
MomentEstimate m_p(const Eigen::VectorXd& x, double p, const EngineOptions& options = {});

/// Q_k(t) = (-1)^{k+1} (e^{-t} - sum_{j<=k} (-t)^j / j!) > 0 for t > 0.
double q_k(int k, double t);

/// C_p = int_0^inf Q_k(t) t^{-p-1} dt with k = floor(p), for non-integer p > 0.
double c_p_constant(double p);

/// F_k(x) = E Q_k(sum_j sqrt(x_j) E_j), closed form for k in 0..3.
double f_k(const Eigen::VectorXd& x, int k);

/// Monte Carlo estimate of F_k(x) for any k >= 0.
MomentEstimate f_k_mc(const Eigen::VectorXd& x, int k, std::uint64_t seed, std::size_t count);

/// |M_p(x) - C_p^{-1} int_0^inf F_k(t^2 x) t^{-p-1} dt| / M_p(x), k = floor(p),
/// for non-integer p in (0, 4).
double mp_representation_check(const Eigen::VectorXd& x, double p);

/// Replaces (x_i, x_j) by (l x_i + (1-l) x_j, (1-l) x_i + l x_j).
Eigen::VectorXd t_transform(const Eigen::VectorXd& x, Eigen::Index i, Eigen::Index j, double lambda);

/// x majorizes y: equal totals and dominating sorted partial sums, up to `tol`.
bool majorizes(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol = 1e-12);

enum class SchurVerdict { convex, concave, neither, inconclusive };
std::string_view to_string(SchurVerdict v);

/// One comparison of M_p(x) against M_p(y) for x majorizing y.
struct ScanRow {
  Eigen::VectorXd x, y;
  double mx, ex, my, ey;
  /// +1: M_p(x) > M_p(y) beyond budget (convex direction), -1: reversed, 0: within budget.
  int direction;
};

struct ScanResult {
  double p;
  int n;
  int trials;
  int convex_evidence = 0;
  int concave_evidence = 0;
  SchurVerdict verdict = SchurVerdict::inconclusive;
  std::vector<ScanRow> rows;
};

/// Samples x from a mixture of flat Dirichlet, near-balanced and two-point
/// supported vectors, applies a random T-transform and compares M_p at both
/// points. A comparison counts only when the gap exceeds 3x the combined
/// error. Deterministic in seed regardless of worker count.
ScanResult schur_scan(double p, int n, int trials, std::uint64_t seed, const EngineOptions& options = {});

/// CSV with a header row; one line per trial.
std::string scan_csv(const ScanResult& scan);

/// f(x) = ((1-x^2)^{(p+1)/2} - x^{p+1}) / (sqrt(1-x^2) - x) on [0, 1/sqrt 2], so that
/// M_p(x^2, 1-x^2) = Gamma(p+1) f(x).
double failure_f(double p, double x);

struct FailureSample {
  double x, f, df;
};

struct FailureProfile {
  double p;
  std::vector<FailureSample> samples;
  /// Interior maximiser of f; absent when f has no interior critical point.
  std::optional<double> critical_point;
  double f_at_critical = 0.0;
  double f_at_0, f_at_right;
  double d1_at_0, d1_at_right, d2_at_right;
  /// (1/3) 2^{1-p/2} p (p+1) (p-4).
  double d2_closed_form;
};

/// Profile of f for p > -1 on a 512-point grid. For p > 4 the interior
/// critical point is bracketed from derivative sign changes and refined by
/// golden-section search; for p <= 4 f is monotone and none is reported.
FailureProfile failure_profile(double p);

/// dF_k/dx_i - dF_k/dx_j from the closed forms, with the factor (b_i - b_j)
/// (b = sqrt x) pulled out exactly so the sign is reliable near x_i = x_j.
double ostrowski_differential(const Eigen::VectorXd& x, int k, Eigen::Index i, Eigen::Index j);

/// (1 + b_1 + b_2) / ((1 + b_1)(1 + b_2)) > (1 - sum_j b_j) prod_j (1 + b_j).
bool claim_inequality_check(const Eigen::VectorXd& b);

}  // namespace expmoments
