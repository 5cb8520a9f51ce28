#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "expmoments/errors.hpp"
#include "expmoments/model.hpp"
#include "expmoments/specialfn.hpp"
#include "oracles.hpp"

using namespace expmoments;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<Rational> rationals(std::initializer_list<long> nums, long den = 1) {
  std::vector<Rational> out;
  for (long v : nums) out.emplace_back(v, den);
  for (auto& r : out) r.canonicalize();
  return out;
}

std::vector<Rational> random_rationals(std::mt19937_64& gen, int n) {
  std::uniform_int_distribution<long> num(-40, 40), den(1, 13);
  std::vector<Rational> out;
  for (int i = 0; i < n; ++i) {
    Rational r(num(gen), den(gen));
    r.canonicalize();
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Literal, ParseAndRoundTrip) {
  const auto m = parse_model_literal("1, 2^3 ,-0.5");
  ASSERT_EQ(m.size(), 3);
  EXPECT_EQ(m.weights()[1], 2.0);
  EXPECT_EQ(m.shapes()[1], 3.0);
  EXPECT_EQ(m.weights()[2], -0.5);
  EXPECT_EQ(parse_model_literal(m.literal()).fingerprint(), m.fingerprint());
  const auto g = parse_model_literal("1e-1^2.5,-3");
  EXPECT_EQ(g.shapes()[0], 2.5);
  EXPECT_FALSE(g.has_integer_shapes());
  EXPECT_EQ(parse_model_literal(g.literal()).fingerprint(), g.fingerprint());
}

TEST(Literal, Errors) {
  EXPECT_THROW(parse_model_literal(""), ParseError);
  EXPECT_THROW(parse_model_literal("1,,2"), ParseError);
  EXPECT_THROW(parse_model_literal("1,abc"), ParseError);
  EXPECT_THROW(parse_model_literal("1^"), ParseError);
  EXPECT_THROW(parse_model_literal("1^0"), DomainError);
  EXPECT_THROW(parse_model_literal("1^-2"), DomainError);
  EXPECT_THROW(parse_model_literal("inf"), DomainError);
}

TEST(Model, Validation) {
  EXPECT_THROW(GammaSumModel(Eigen::VectorXd(0)), DomainError);
  EXPECT_THROW(GammaSumModel(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)), DomainError);
  EXPECT_NE(GammaSumModel::exponential({1, 2}).fingerprint(), GammaSumModel::exponential({2, 1}).fingerprint());
  EXPECT_EQ(GammaSumModel::exponential({1}).with_summand(2.0, 3.0).literal(), "1,2^3");
}

TEST(Chs, Examples) {
  EXPECT_EQ(chs(rationals({5, -7}), 0), 1);
  EXPECT_EQ(chs(rationals({1, 1}), 2), 3);
  EXPECT_EQ(chs(rationals({3, 4}), 2), 37);
  EXPECT_EQ(chs(rationals({1, 1}), 3), 4);
  EXPECT_THROW(chs(rationals({1}), -1), DomainError);
}

TEST(Chs, MatchesEnumeration) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_rationals(gen, 1 + trial % 5);
    for (int ell = 0; ell <= 6; ++ell) EXPECT_EQ(chs(x, ell), oracle::chs_enumerate(x, ell));
  }
}

TEST(Chs, SignSymmetry) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_rationals(gen, 4);
    const auto h = chs_all(x, 9);
    for (auto& v : x) v = -v;
    const auto hn = chs_all(x, 9);
    for (int ell = 0; ell <= 9; ++ell) EXPECT_EQ(hn[ell], (ell % 2 ? -1 : 1) * h[ell]);
  }
}

TEST(Chs, GeneratingFunction) {
  // sum_l h_l(x) t^l = prod 1/(1 - x_j t); with max|x_j| <= r and t = 1/2 the
  // tail after degree L is at most C(L+n, n-1)-weighted (r t)^{L+1}/(1 - r t)^n.
  const auto x = rationals({1, -3, 5, 2}, 7);
  const Rational t(1, 2);
  Rational prod = 1;
  for (const auto& v : x) prod /= (1 - v * t);
  const auto h = chs_all(x, 60);
  Rational partial = 0, tp = 1;
  for (int ell = 0; ell <= 60; ++ell) {
    partial += h[ell] * tp;
    tp *= t;
    if (ell == 10 || ell == 30 || ell == 60) {
      const double r = 5.0 / 14.0;
      const double bound = std::pow(r, ell + 1) / std::pow(1.0 - r, 4.0) * std::pow(ell + 4.0, 3.0);
      EXPECT_LE(std::abs(Rational(partial - prod).get_d()), bound) << ell;
    }
  }
  EXPECT_LT(std::abs(Rational(partial - prod).get_d()), 1e-20);
}

TEST(EvenMoment, Examples) {
  EXPECT_EQ(even_moment_exact(rationals({1, 1}), 2), 6);
  EXPECT_EQ(even_moment_exact(rationals({1, -1}), 2), 2);
  EXPECT_EQ(even_moment_exact(rationals({1}), 4), 24);
  EXPECT_THROW(even_moment_exact(rationals({1}), 3), DomainError);
}

TEST(PowerMoment, ExactForGammaShapes) {
  // Gamma(2): E X^3 = 2*3*4 = 24.
  EXPECT_EQ(power_moment_exact(GammaSumModel(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 2.0)), 3), 24);
  // Gamma(1/2): E X^2 = (1/2)(3/2) = 3/4.
  EXPECT_EQ(power_moment_exact(GammaSumModel(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 0.5)), 2),
            Rational(3, 4));
  // Exponential weights agree with l! h_l.
  const auto m = GammaSumModel::exponential({0.5, -0.25, 2.0});
  std::vector<Rational> x;
  for (double w : m.weights()) x.push_back(to_rational(w));
  for (int ell : {2, 4, 6}) EXPECT_EQ(power_moment_exact(m, ell), even_moment_exact(x, ell));
  // E S^1 = mean.
  EXPECT_EQ(power_moment_exact(parse_model_literal("1,2^3"), 1), 7);
}

TEST(ToRational, ExactDyadic) {
  EXPECT_EQ(to_rational(0.375), Rational(3, 8));
  EXPECT_EQ(to_rational(-2.0), -2);
  EXPECT_EQ(to_rational(0.1).get_d(), 0.1);
  EXPECT_THROW(to_rational(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(Charfn, Examples) {
  const auto z = charfn(GammaSumModel::exponential({1}), 1.0);
  EXPECT_NEAR(z.real(), 0.5, 1e-15);
  EXPECT_NEAR(z.imag(), 0.5, 1e-15);
  for (double t : {0.1, 1.0, 7.0}) {
    const auto l = charfn(GammaSumModel::exponential({1, -1}), t);
    EXPECT_NEAR(l.real(), 1.0 / (1.0 + t * t), 1e-15);
    EXPECT_NEAR(l.imag(), 0.0, 1e-15);
  }
  EXPECT_NEAR(std::abs(charfn(GammaSumModel::exponential({1, 2}), 1.0)), 0.3162278, 1e-7);
  // Gamma(3) at weight 1: (1 - i t)^{-3}.
  const auto g = charfn(parse_model_literal("1^3"), 2.0);
  const auto ref = std::pow(std::complex<double>(1.0, -2.0), -3.0);
  EXPECT_NEAR(std::abs(g - ref), 0.0, 1e-15);
}

TEST(MeanVariance, Examples) {
  EXPECT_EQ(mean_variance(GammaSumModel::exponential({1})), std::make_pair(1.0, 1.0));
  const auto [m, v] = mean_variance(GammaSumModel::exponential({1 / std::sqrt(2.0), -1 / std::sqrt(2.0)}));
  EXPECT_EQ(m, 0.0);
  EXPECT_NEAR(v, 1.0, 1e-15);
  EXPECT_EQ(mean_variance(parse_model_literal("1,2^3")), std::make_pair(7.0, 13.0));
}

TEST(PartialFraction, Examples) {
  const auto two = partial_fraction_density(GammaSumModel::exponential({2, 1}));
  for (double t : {0.1, 1.0, 4.0}) EXPECT_NEAR(two(t), std::exp(-t / 2) - std::exp(-t), 1e-15);
  EXPECT_EQ(two(-1.0), 0.0);

  const auto lap = partial_fraction_density(GammaSumModel::exponential({1, -1}));
  ASSERT_EQ(lap.terms().size(), 2u);
  for (const auto& term : lap.terms()) EXPECT_NEAR(term.coefficient, 0.5, 1e-15);
  for (double t : {-2.0, -0.3, 0.0, 0.7}) EXPECT_NEAR(lap(t), 0.5 * std::exp(-std::abs(t)), 1e-15);

  const auto erlang = partial_fraction_density(GammaSumModel::exponential({1, 1}));
  ASSERT_EQ(erlang.terms().size(), 1u);
  EXPECT_EQ(erlang.terms()[0].order, 2);
  for (double t : {0.5, 3.0}) EXPECT_NEAR(erlang(t), t * std::exp(-t), 1e-15);
}

TEST(PartialFraction, Errors) {
  EXPECT_THROW(partial_fraction_density(GammaSumModel::exponential({1, 0})), DomainError);
  EXPECT_THROW(partial_fraction_density(parse_model_literal("1^1.5")), NotApplicable);
  EXPECT_THROW(partial_fraction_density(GammaSumModel::exponential({1, 1 + 1e-12})), NotApplicable);
  EXPECT_NO_THROW(partial_fraction_density(GammaSumModel::exponential({1, 1 + 1e-8})));
}

TEST(PartialFraction, MatchesProductFormula) {
  const std::vector<double> x{1.3, -0.4, 2.2, 0.7, -1.9};
  Eigen::VectorXd w(5);
  for (int i = 0; i < 5; ++i) w[i] = x[i];
  const auto pfd = partial_fraction_density(GammaSumModel(w));
  for (double t = -8.0; t <= 12.0; t += 0.37) EXPECT_NEAR(pfd(t), oracle::hypoexp_density(x, t), 1e-13) << t;
}

TEST(PartialFraction, IntegratesToOneAndNonnegative) {
  for (const char* lit : {"2,1", "1,-1", "1,1,1", "0.5,1^2,-0.7^3", "1.3,-0.4,2.2,0.7,-1.9"}) {
    const auto pfd = partial_fraction_density(parse_model_literal(lit));
    const double mass = oracle::exp_sinh([&](double t) { return pfd(t) + pfd(-t); }, 0.0);
    EXPECT_NEAR(mass, 1.0, 1e-10) << lit;
    for (double t = -20.0; t <= 20.0; t += 0.05) EXPECT_GE(pfd(t), -1e-14) << lit << ' ' << t;
  }
}

TEST(PartialFraction, CharfnDuality) {
  const auto model = parse_model_literal("0.5,1^2,-0.7");
  const auto pfd = partial_fraction_density(model);
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    const double re = oracle::exp_sinh([&](double u) { return std::cos(t * u) * (pfd(u) + pfd(-u)); }, 0.0, 1e-10);
    const double im = oracle::exp_sinh([&](double u) { return std::sin(t * u) * (pfd(u) - pfd(-u)); }, 0.0, 1e-10);
    const auto z = charfn(model, t);
    EXPECT_NEAR(re, z.real(), 1e-6) << t;
    EXPECT_NEAR(im, z.imag(), 1e-6) << t;
  }
}

TEST(ClosedMoments, Examples) {
  const auto two = partial_fraction_density(GammaSumModel::exponential({2, 1}));
  EXPECT_LT(rel(abs_power_moment_closed(two, 2.0), 14.0), 1e-13);
  EXPECT_LT(rel(abs_power_moment_closed(two, 3.0), 90.0), 1e-13);
  const auto lap = partial_fraction_density(GammaSumModel::exponential({1, -1}));
  EXPECT_LT(rel(abs_power_moment_closed(lap, 1.0), 1.0), 1e-14);
  for (double p : {-0.5, 0.3, 2.7}) EXPECT_LT(rel(abs_power_moment_closed(lap, p), std::tgamma(p + 1.0)), 1e-13);
  EXPECT_THROW(abs_power_moment_closed(lap, -1.0), DomainError);
}

TEST(ClosedMoments, TwoWeightClosedForm) {
  // E(aE + bE')^p = Gamma(p+1)(b^{p+1} - a^{p+1})/(b - a).
  for (double p : {-0.5, 0.5, 2.0, 4.5, 7.0}) {
    const double a = 0.6, b = 1.7;
    const auto pfd = partial_fraction_density(GammaSumModel::exponential({a, b}));
    const double truth = std::tgamma(p + 1.0) * (std::pow(b, p + 1) - std::pow(a, p + 1)) / (b - a);
    EXPECT_LT(rel(pfd.moment(p).value, truth), 1e-12) << p;
  }
}

TEST(ClosedMoments, GaussianMixtureLaw) {
  const auto lap = partial_fraction_density(GammaSumModel::exponential({1, -1}));
  for (double p : {0.5, 1.5, 3.0, 4.5}) {
    const double mix = std::pow(2.0, p / 2) * std::tgamma(p / 2 + 1) * gaussian_abs_moment(p);
    EXPECT_LT(rel(abs_power_moment_closed(lap, p), mix), 1e-10) << p;
  }
}

TEST(ClosedMoments, AgreeWithExactEvenMoments) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<Rational> x;
    Eigen::VectorXd w(n);
    std::uniform_int_distribution<long> num(1, 60);
    std::bernoulli_distribution neg(0.4);
    for (int i = 0; i < n; ++i) {
      Rational r((neg(gen) ? -1 : 1) * (num(gen) + 61 * i), 17);
      r.canonicalize();
      x.push_back(r);
      w[i] = r.get_d();
    }
    const auto pfd = partial_fraction_density(GammaSumModel(w));
    for (int ell : {2, 4, 6}) {
      const double exact = even_moment_exact(x, ell).get_d();
      const auto closed = pfd.moment(ell);
      EXPECT_LT(rel(closed.value, exact), 1e-9) << trial << ' ' << ell;
    }
  }
}

TEST(ClosedMoments, SignedMoment) {
  const auto e = partial_fraction_density(GammaSumModel::exponential({1}));
  EXPECT_NEAR(e.moment(1.0, true).value, 1.0, 1e-15);
  const auto lap = partial_fraction_density(GammaSumModel::exponential({1, -1}));
  EXPECT_NEAR(lap.moment(2.5, true).value, 0.0, 1e-14);
  // E S^3 for S = E - 2E' is 3! h_3(1, -2) = 6 (1 - 2 + 4 - 8) = -30.
  EXPECT_NEAR(partial_fraction_density(GammaSumModel::exponential({1, -2})).moment(3.0, true).value, -30.0, 1e-12);
}

TEST(Coalesce, MergesNearbyWeights) {
  double disp = 0.0;
  const auto m = coalesce_weights(GammaSumModel::exponential({1.0, 1.0 + 1e-9, 3.0}), 1e-7, &disp);
  EXPECT_EQ(m.weights()[0], m.weights()[1]);
  EXPECT_EQ(m.weights()[2], 3.0);
  EXPECT_LT(disp, 1e-9);
  EXPECT_NEAR(mean_variance(m).first, 5.0 + 1e-9, 1e-15);
  const auto same = coalesce_weights(GammaSumModel::exponential({1.0, 2.0}), 1e-7, &disp);
  EXPECT_EQ(disp, 0.0);
  EXPECT_EQ(same.weights()[1], 2.0);
}

TEST(Sampling, Deterministic) {
  const auto m = parse_model_literal("1,2^3,-0.5^0.7");
  EXPECT_EQ(sample(m, 42, 1000), sample(m, 42, 1000));
  EXPECT_NE(sample(m, 42, 1000), sample(m, 43, 1000));
  EXPECT_THROW(sample(m, 1, 0), DomainError);
}

TEST(Sampling, LawOfLargeNumbers) {
  const auto e = sample(GammaSumModel::exponential({1}), 1, 1'000'000);
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  EXPECT_LT(std::abs(mean - 1.0), 5.0 / std::sqrt(1e6));

  const auto l = sample(GammaSumModel::exponential({1, -1}), 2, 1'000'000);
  double abs_mean = 0.0;
  for (double v : l) abs_mean += std::abs(v);
  abs_mean /= static_cast<double>(l.size());
  EXPECT_LT(std::abs(abs_mean - 1.0), 5.0 / std::sqrt(1e6));
}

TEST(Sampling, GammaShapesMatchMoments) {
  for (double shape : {0.3, 1.0, 2.5, 7.0}) {
    Rng rng(derive_seed(9, static_cast<std::uint64_t>(shape * 10)));
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_gamma(rng, shape);
      s1 += v;
      s2 += v * v;
    }
    s1 /= n;
    s2 /= n;
    // mean = shape, E X^2 = shape (shape + 1); standard errors from Var X = shape, Var X^2 ~ 4 shape^3 scale.
    EXPECT_LT(std::abs(s1 - shape), 5.0 * std::sqrt(shape / n)) << shape;
    const double m4 = shape * (shape + 1) * (shape + 2) * (shape + 3);
    const double sd2 = std::sqrt((m4 - std::pow(shape * (shape + 1), 2)) / n);
    EXPECT_LT(std::abs(s2 - shape * (shape + 1)), 5.0 * sd2) << shape;
  }
}

TEST(Sampling, HistogramMatchesDensity) {
  const auto model = GammaSumModel::exponential({2, 1, -0.5});
  const auto pfd = partial_fraction_density(model);
  const std::size_t n = 1'000'000;
  const auto s = sample(model, 5, n);
  const double lo = -2.0, width = 0.25;
  std::vector<double> counts(40, 0.0);
  for (double v : s) {
    const auto b = static_cast<long>(std::floor((v - lo) / width));
    if (b >= 0 && b < 40) counts[static_cast<std::size_t>(b)] += 1.0;
  }
  for (std::size_t b = 0; b < 40; ++b) {
    const double a = lo + b * width;
    double prob = 0.0;
    for (int k = 0; k < 8; ++k) prob += pfd(a + (k + 0.5) * width / 8) * width / 8;
    const double sd = std::sqrt(n * prob * (1 - prob));
    EXPECT_LT(std::abs(counts[b] - n * prob), 5.0 * sd + 0.002 * n * prob + 5.0) << a;
  }
}

TEST(Rng, DeriveSeedAndUniformRange) {
  static_assert(derive_seed(1, 2) != derive_seed(2, 1));
  Rng rng(0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}
