#pragma once

// Weighted sums S = sum_j x_j X_j of independent X_j ~ Gamma(gamma_j, 1)
// (standard exponentials when all gamma_j = 1): exact even moments through
// complete homogeneous symmetric polynomials, the characteristic function,
// the partial-fraction density for integer shapes, and seeded sampling.

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <gmpxx.h>

#include "expmoments/random.hpp"

namespace expmoments {

using Rational = mpq_class;

/// Exact value of a double as a rational (every finite double is dyadic).
Rational to_rational(double v);

class GammaSumModel {
public:
  /// All shapes 1: S = sum_j x_j E_j.
  explicit GammaSumModel(Eigen::VectorXd weights);
  GammaSumModel(Eigen::VectorXd weights, Eigen::VectorXd shapes);

  static GammaSumModel exponential(std::initializer_list<double> weights);

  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& shapes() const { return shapes_; }
  Eigen::Index size() const { return weights_.size(); }

  bool has_integer_shapes() const;

  /// Model with one more summand appended.
  GammaSumModel with_summand(double weight, double shape = 1.0) const;

  /// Stable 64-bit digest of the weights and shapes, used to tag estimates.
  std::uint64_t fingerprint() const;

  /// Inverse of parse_model_literal (shortest round-trip formatting).
  std::string literal() const;

private:
  Eigen::VectorXd weights_;
  Eigen::VectorXd shapes_;
};

/// Parses `w1[^s1],w2[^s2],...`, e.g. "1,2^3,-0.5" or "1e-1^2.5,-3".
/// Throws ParseError on malformed input and DomainError on invalid values.
GammaSumModel parse_model_literal(std::string_view literal);

/// h_l(x): sum of all degree-l monomials of x, with h_0 = 1.
Rational chs(std::span<const Rational> x, int ell);

/// h_0(x) ... h_L(x) in one pass.
std::vector<Rational> chs_all(std::span<const Rational> x, int max_ell);

/// E (sum_j x_j E_j)^l = l! h_l(x); l must be even.
Rational even_moment_exact(std::span<const Rational> x, int ell);

/// E S^l for integer l >= 0 and arbitrary positive shapes, exactly, from the
/// product of the shifted-factorial series of each gamma summand.
Rational power_moment_exact(const GammaSumModel& model, int ell);

/// phi(t) = prod_j (1 - i x_j t)^{-gamma_j}, principal branch per factor.
std::complex<double> charfn(const GammaSumModel& model, double t);

/// Mean sum x_j gamma_j and variance sum x_j^2 gamma_j.
std::pair<double, double> mean_variance(const GammaSumModel& model);

/// coefficient * |t|^{order-1} e^{-t/scale} / ((order-1)! |scale|^order) on sign(scale) t > 0.
struct PfTerm {
  double coefficient;
  double scale;
  int order;
};

struct ClosedMoment {
  double value;
  /// Bound on the rounding error of the signed sum over terms.
  double error;
};

class PartialFractionDensity {
public:
  explicit PartialFractionDensity(std::vector<PfTerm> terms) : terms_(std::move(terms)) {}

  const std::vector<PfTerm>& terms() const { return terms_; }

  /// Density at t; at t = 0 the mean of the one-sided limits.
  double operator()(double t) const;

  /// E|X|^p (signed = false) or E|X|^p sgn(X), from per-term gamma integrals.
  ClosedMoment moment(double p, bool signed_moment = false) const;

private:
  std::vector<PfTerm> terms_;
};

/// Partial-fraction expansion of the density for integer shapes. Equal
/// weights merge into one higher-order pole. Throws DomainError for zero
/// weights and NotApplicable for non-integer shapes or distinct weights with
/// relative gap below 1e-10.
PartialFractionDensity partial_fraction_density(const GammaSumModel& model);

/// E|X|^p, p > -1, for the density's distribution.
double abs_power_moment_closed(const PartialFractionDensity& pfd, double p);

/// Replaces clusters of weights within relative distance `rel_gap` by their
/// shape-weighted mean. The moment functional is symmetric with equal
/// per-shape gradients at coincident weights, so the change is second order
/// in the displacement. `displacement` receives the largest relative move.
GammaSumModel coalesce_weights(const GammaSumModel& model, double rel_gap, double* displacement = nullptr);

/// `count` realizations of S; deterministic in (model, seed) and independent
/// of the number of worker threads. Integer shapes up to 64 are sums of
/// -log(U) exponentials; other shapes use Marsaglia-Tsang squeeze-rejection
/// (with the U^{1/gamma} boost below shape 1).
std::vector<double> sample(const GammaSumModel& model, std::uint64_t seed, std::size_t count);

/// Draws one realization of each summand; shared by the Monte Carlo engine.
class SumSampler {
public:
  explicit SumSampler(const GammaSumModel& model);

  double draw(Rng& rng) const;

  /// Realizations at U and 1 - U for every exponential uniform. Summands
  /// drawn by rejection are shared between the two.
  std::pair<double, double> draw_antithetic(Rng& rng) const;

private:
  struct Summand {
    double weight;
    double shape;
    int erlang;  // > 0: sum of this many exponentials; 0: rejection sampler
  };
  std::vector<Summand> summands_;
};

/// Gamma(shape, 1) variate by Marsaglia-Tsang.
double sample_gamma(Rng& rng, double shape);

}  // namespace expmoments
