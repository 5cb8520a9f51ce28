#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "expmoments/analysis.hpp"
#include "expmoments/errors.hpp"
#include "expmoments/specialfn.hpp"
#include "oracles.hpp"

using namespace expmoments;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// E|E - 1|^p by direct quadrature of |t - 1|^p e^{-t}.
double centered_oracle(double p) {
  return oracle::tanh_sinh([p](double u) { return std::pow(u, p) * std::exp(u - 1.0); }, 0.0, 1.0, 1e-14) +
         oracle::exp_sinh([p](double u) { return std::pow(u, p) * std::exp(-1.0 - u); }, 0.0, 1e-14);
}

}  // namespace

TEST(Constants, LaplaceMoment) {
  EXPECT_NEAR(laplace_abs_moment(1.0), 1.0, 1e-15);
  EXPECT_NEAR(laplace_abs_moment(2.0), 2.0, 1e-14);
  EXPECT_NEAR(laplace_abs_moment(0.5), 0.8862269, 1e-7);
  EXPECT_THROW(laplace_abs_moment(-1.0), DomainError);
  for (double p : {0.5, 1.0, 1.5, 3.0}) {
    const double dup = std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * p + 1.0) * gaussian_abs_moment(p);
    EXPECT_LT(rel(laplace_abs_moment(p), dup), 1e-12) << p;
  }
}

TEST(Constants, CenteredExponentialMoment) {
  EXPECT_NEAR(centered_exp_abs_moment(1.0), 2.0 / std::numbers::e, 1e-15);
  EXPECT_NEAR(centered_exp_abs_moment(2.0), 1.0, 1e-14);
  // e^{-1} (6 + sum_k 1 / (k! (k + 4))).
  EXPECT_NEAR(centered_exp_abs_moment(3.0), 2.4145533, 1e-7);
  for (double p : {-0.9, -0.5, 0.3, 1.7, 3.0, 6.5})
    EXPECT_LT(rel(centered_exp_abs_moment(p), centered_oracle(p)), 1e-10) << p;
  EXPECT_NEAR(kappa(), std::numbers::e / 2.0, 1e-15);
  EXPECT_NEAR(kappa() * centered_exp_abs_moment(1.0), 1.0, 1e-15);
  EXPECT_THROW(centered_exp_abs_moment(-1.0), DomainError);
}

TEST(Solvers, PStar) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_pstar();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(r.value, 2.9414, 5e-3);
  EXPECT_NEAR(r.value, 2.941472752712622, 1e-9);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_GT(r.value, r.bracket.first);
  EXPECT_LT(r.value, r.bracket.second);
  EXPECT_LT(secs, 1.0);
  // Both norms agree at the root.
  const double lhs = std::pow(laplace_abs_moment(r.value), 1.0 / r.value);
  const double rhs = kappa() * std::pow(centered_exp_abs_moment(r.value), 1.0 / r.value);
  EXPECT_LT(rel(lhs, rhs), 1e-10);
  EXPECT_NEAR(solve_pstar(2.1, 3.9).value, r.value, 1e-8);
  EXPECT_NEAR(pstar(), r.value, 1e-12);
}

TEST(Solvers, P0) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_p0();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(r.value, -0.565, 5e-3);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT(secs, 1.0);
  const double lhs = std::pow(centered_exp_abs_moment(r.value), 1.0 / r.value);
  const double rhs = std::pow(gaussian_abs_moment(r.value), 1.0 / r.value);
  EXPECT_LT(rel(lhs, rhs), 1e-9);
  EXPECT_NEAR(solve_p0(-0.9, -0.1).value, r.value, 1e-8);
  // Unit variances: both sides are 1 at p = 2.
  EXPECT_NEAR(centered_exp_abs_moment(2.0), gaussian_abs_moment(2.0), 1e-14);
}

TEST(Solvers, NoSignChangeIsReported) { EXPECT_THROW(solve_pstar(3.5, 4.0), ConvergenceError); }

TEST(Theorem1, Examples) {
  // x = (1/sqrt 2, -1/sqrt 2), p = 3: E|S|^3 = 6 / 2^{3/2}.
  const Eigen::Vector2d x(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
  const auto est = moment_merged(x, {3.0});
  EXPECT_LT(rel(est.value, 6.0 / std::pow(2.0, 1.5)), 1e-10);
  EXPECT_NEAR(std::cbrt(est.value), 1.2849, 1e-4);
  EXPECT_GT(std::cbrt(est.value), std::cbrt(gaussian_abs_moment(3.0)));
}

TEST(Theorem1, SuiteAcrossExponents) {
  for (double p : {2.0, 2.5, 3.0, 4.0, 5.0, 6.0}) {
    const auto rep = verify_theorem1(p, 60, 8, 42);
    EXPECT_TRUE(rep.pass) << p << ' ' << rep.violations.size();
    EXPECT_EQ(rep.trials, 64);
    const auto it = std::find_if(rep.metrics.begin(), rep.metrics.end(),
                                 [](const Metric& m) { return m.name == "balanced_ratio_n16"; });
    ASSERT_NE(it, rep.metrics.end());
    EXPECT_GE(it->value, 1.0) << p;
    EXPECT_LE(it->value, 1.1) << p;
  }
  EXPECT_THROW(verify_theorem1(1.5, 1, 2, 0), DomainError);
}

TEST(Hunter, ExactSuite) {
  const auto rep = verify_hunter_exact(300, {2, 4, 6, 8}, 7);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.trials, 300);
  EXPECT_THROW(verify_hunter_exact(1, {3}, 0), DomainError);
}

TEST(Hunter, EqualityAdjacentCase) {
  // x = (1, -1), l = 2: 2! h_2 = 2 and 1 * 2^1 = 2.
  const std::vector<Rational> x{Rational(1), Rational(-1)};
  EXPECT_EQ(even_moment_exact(x, 2), Rational(2));
}

TEST(Mrtt, Branches) {
  for (double p : {-0.5, 0.5, 1.5, 2.5, 4.0}) {
    const auto rep = verify_mrtt(p, 30, 5);
    EXPECT_TRUE(rep.pass) << p << ' ' << rep.violations.size();
    const auto it = std::find_if(rep.metrics.begin(), rep.metrics.end(),
                                 [](const Metric& m) { return m.name == "extremiser_log_gap"; });
    ASSERT_NE(it, rep.metrics.end());
    EXPECT_LT(std::abs(it->value), 1e-8) << p;
  }
  EXPECT_THROW(verify_mrtt(0.0, 1, 0), DomainError);
}

TEST(AllEqual, ClosedForms) {
  const auto rep = verify_all_equal(20, {2.0, 3.0, 4.0, 6.0});
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.trials, 80);
  // n = 2, p = 2: Gamma(4)/Gamma(2)/2 = 3 against 2.
  EXPECT_NEAR(std::exp(log_gamma_ratio(2.0, 2.0)) / 2.0, 3.0, 1e-13);
  // Equality at n = 1, p = 2.
  EXPECT_NEAR(std::exp(log_gamma_ratio(1.0, 2.0)), 2.0 * gaussian_abs_moment(2.0), 1e-13);
  // The uncentred sum grows like n^{p/2}: the ratio increases with n instead of approaching 1.
  const auto it = std::find_if(rep.metrics.begin(), rep.metrics.end(),
                               [](const Metric& m) { return m.name == "ratio_n20_p6"; });
  ASSERT_NE(it, rep.metrics.end());
  EXPECT_NEAR(it->value, std::exp(log_gamma_ratio(20.0, 6.0)) / 8000.0 / 120.0, 1e-10);
}

TEST(GammaExtension, Suite) {
  EngineOptions opt;
  opt.mc_samples = 100'000;
  const auto rep = verify_gamma_extension({2.0, 3.0, 4.0}, 20, 3, opt);
  EXPECT_TRUE(rep.pass) << rep.violations.size();
  // gamma = 2, p = 2: E X^3 = 24 = 2 E(X + E)^2.
  const auto lhs = moment(GammaSumModel(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 2.0)), {3.0});
  const auto rhs = moment(GammaSumModel(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(2.0, 1.0)), {2.0});
  EXPECT_NEAR(lhs.value, 24.0, 1e-9);
  EXPECT_NEAR(2.0 * rhs.value, 24.0, 1e-12);
}

TEST(ClaimAndStepII, Suites) {
  EXPECT_TRUE(verify_claim(10000, 1).pass);
  EXPECT_TRUE(verify_step_ii_bound(300, 2).pass);
}

TEST(Gradient, Examples) {
  const double c = 0.7;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, c);
  EXPECT_NEAR(gradient(x, 2.0, 0).value, 4.0 * c, 1e-12);
  for (double p : {2.5, 3.0, 4.7})
    EXPECT_LT(rel(gradient(x, p, 0).value, p * std::pow(c, p - 1.0) * std::tgamma(p + 1.0)), 1e-9) << p;
  EXPECT_THROW(gradient(x, 1.5, 0), DomainError);
  EXPECT_THROW(gradient(x, 3.0, 1), DomainError);
}

TEST(Gradient, FiniteDifferences) {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> up(2.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    Eigen::VectorXd x(n);
    for (auto& v : x) v = nd(gen);
    const double p = up(gen);
    const auto j = static_cast<Eigen::Index>(trial % n);
    const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    const double fd = (moment_merged(a, {p}).value - moment_merged(b, {p}).value) / (2.0 * h);
    const double g = gradient(x, p, j, Engine::density).value;
    EXPECT_LT(std::abs(g - fd), 1e-3 * std::abs(fd) + 1e-9) << trial;
  }
}

TEST(Minimizer, BalancedPointAtThree) {
  const auto r = minimize_sphere(2, 3.0, 8, 11);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(std::abs(r.x_min[0]), 1.0 / std::sqrt(2.0), 1e-4);
  EXPECT_NEAR(std::abs(r.x_min[1]), 1.0 / std::sqrt(2.0), 1e-4);
  EXPECT_LT(r.x_min[0] * r.x_min[1], 0.0);
  EXPECT_NEAR(r.value, 6.0 / std::pow(2.0, 1.5), 1e-6);
  EXPECT_GE(r.value, gaussian_abs_moment(3.0));
  ASSERT_TRUE(r.crux_residual.has_value());
  EXPECT_LT(*r.crux_residual, 1e-3);
}

TEST(Minimizer, MeanZeroAtTwo) {
  const auto r = minimize_sphere(3, 2.0, 4, 5);
  // E S^2 = sum x^2 + (sum x)^2, minimised on the sphere where sum x = 0.
  EXPECT_NEAR(r.x_min.sum(), 0.0, 1e-4);
  EXPECT_NEAR(r.value, 1.0, 1e-8);
  EXPECT_LT(r.crux_residual.value_or(0.0), 1e-3);
}

TEST(LogConvexity, BalancedModels) {
  std::vector<double> grid;
  for (double p = 2.0; p <= 6.0 + 1e-12; p += 0.5) grid.push_back(p);
  for (int n : {2, 4, 6}) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = j % 2 == 0 ? 1.0 : -1.0;
    const auto rep = logconvexity_probe(x, grid);
    EXPECT_TRUE(rep.asserted);
    EXPECT_TRUE(rep.pass) << n;
    EXPECT_EQ(rep.second_differences.size(), grid.size() - 2);
    for (double d : rep.second_differences) EXPECT_GE(d, -1e-9);
  }
  const auto general = logconvexity_probe(Eigen::Vector3d(0.8, -0.5, -0.3), grid);
  EXPECT_FALSE(general.asserted);
  EXPECT_TRUE(general.pass);
  EXPECT_THROW(logconvexity_probe(Eigen::Vector2d(1.0, 0.5), grid), DomainError);
}

TEST(Tang, DensityAtMean) {
  const auto one = tang_density_check(Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(one.value, std::exp(-1.0), 1e-15);
  EXPECT_TRUE(one.holds);
  const double c = 1.0 / std::sqrt(2.0);
  const auto two = tang_density_check(Eigen::Vector2d(c, c));
  // Erlang-2 density of c(E + E') at 2c: 2 e^{-2} / c.
  EXPECT_NEAR(two.value, 2.0 * std::exp(-2.0) / c, 1e-13);
  EXPECT_TRUE(two.holds);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(1 + trial % 5);
    for (auto& v : x) v = u(gen);
    x /= x.norm();
    EXPECT_TRUE(tang_density_check(x).holds) << trial;
  }
  EXPECT_THROW(tang_density_check(Eigen::Vector2d(1.0, 1.0)), DomainError);
}
