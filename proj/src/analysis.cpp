#include "expmoments/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include "expmoments/errors.hpp"
#include "expmoments/format.hpp"
#include "expmoments/random.hpp"
#include "expmoments/schur.hpp"
#include "expmoments/specialfn.hpp"
#include "parallel.hpp"

namespace expmoments {

namespace {

constexpr double kMergeGap = 1e-7;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_p(double p, const char* what) {
  if (!(p > -1.0) || !std::isfinite(p)) throw DomainError(std::string(what) + ": p must exceed -1");
}

Eigen::VectorXd random_normal(Rng& rng, int n) {
  Eigen::VectorXd x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

int random_size(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

MomentEstimate merged_moment(const GammaSumModel& model, const MomentQuery& q, std::optional<Engine> engine,
                             const EngineOptions& options) {
  double displacement = 0.0;
  const auto merged = coalesce_weights(model, kMergeGap, &displacement);
  auto est = moment(merged, q, engine, options);
  const double scale = std::max(std::abs(est.value), 1.0 + std::abs(q.shift));
  est.error += scale * (q.p * q.p + 1.0) * displacement * displacement;
  return est;
}

// Runs `trial(i)` in parallel and concatenates the violations in trial order.
void run_trials(VerificationReport& report, int trials, const std::function<std::vector<Violation>(int)>& trial) {
  std::vector<std::vector<Violation>> found(static_cast<std::size_t>(trials));
  detail::parallel_for(static_cast<std::size_t>(trials),
                       [&](std::size_t i) { found[i] = trial(static_cast<int>(i)); });
  for (auto& v : found) report.violations.insert(report.violations.end(), v.begin(), v.end());
  report.trials += trials;
}

void finish(VerificationReport& report) { report.pass = report.violations.empty(); }

std::string model_string(const Eigen::VectorXd& x) {
  return join_numbers({x.data(), static_cast<std::size_t>(x.size())}, ',');
}

// Bisection/secant hybrid (Illinois variant) on a sign-changing bracket.
RootResult find_root(const std::function<double(double)>& f, double lo, double hi, const char* what) {
  double a = lo, b = hi, fa = f(a), fb = f(b);
  if (!(fa * fb < 0.0))
    throw ConvergenceError(std::string(what) + ": no sign change on [" + shortest(lo) + ", " + shortest(hi) +
                               "], f = " + shortest(fa) + ", " + shortest(fb),
                           std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
  int side = 0;
  for (int it = 1; it <= 200; ++it) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b) || it % 8 == 0) c = 0.5 * (a + b);
    const double fc = f(c);
    if (std::abs(fc) < 1e-13 || b - a < 4.0 * kEps * std::abs(c)) return {c, {lo, hi}, std::abs(fc), it};
    if (fc * fb < 0.0) {
      a = b;
      fa = fb;
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (a > b) {
      std::swap(a, b);
      std::swap(fa, fb);
    }
  }
  const double c = 0.5 * (a + b);
  return {c, {lo, hi}, std::abs(f(c)), 200};
}

}  // namespace

double laplace_abs_moment(double p) {
  require_p(p, "laplace_abs_moment");
  return gamma_fn(p + 1.0);
}

double centered_exp_abs_moment(double p) {
  require_p(p, "centered_exp_abs_moment");
  // int_0^1 u^p e^{u-1} du + e^{-1} Gamma(p+1).
  double sum = 0.0, fact = 1.0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) fact *= k;
    const double term = 1.0 / (fact * (p + k + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return (gamma_fn(p + 1.0) + sum) / std::numbers::e;
}

double kappa() { return 1.0 / centered_exp_abs_moment(1.0); }

MomentEstimate moment_merged(const Eigen::VectorXd& x, const MomentQuery& q, const EngineOptions& options) {
  return merged_moment(GammaSumModel(x), q, std::nullopt, options);
}

VerificationReport verify_theorem1(double p, int trials, int n_max, std::uint64_t seed, const EngineOptions& options) {
  if (!(p >= 2.0)) throw DomainError("verify_theorem1: p must be at least 2");
  if (trials < 0 || n_max < 1) throw DomainError("verify_theorem1: trials >= 0 and n_max >= 1 required");
  if (p < 2.0 + 1e-6) p = 2.0;
  VerificationReport report;
  report.suite = "theorem1";
  report.params = {{"p", shortest(p)}, {"n_max", std::to_string(n_max)}, {"seed", std::to_string(seed)}};
  const double gauss = gaussian_abs_moment(p);
  const auto check = [&](const Eigen::VectorXd& x) -> std::optional<Violation> {
    const auto est = moment_merged(x, {p}, options);
    const double rhs = gauss * std::pow(x.squaredNorm(), 0.5 * p);
    const double budget = 3.0 * est.error + 8.0 * kEps * rhs;
    if (est.value < rhs - budget) return Violation{model_string(x), p, est.value, rhs, budget};
    return std::nullopt;
  };
  run_trials(report, trials, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    auto x = random_normal(rng, random_size(rng, 1, n_max));
    x /= x.norm();
    std::vector<Violation> out;
    if (auto v = check(x)) out.push_back(*v);
    return out;
  });
  for (int n : {2, 4, 8, 16}) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(n));
    const auto est = moment_merged(x, {p}, options);
    report.metrics.push_back({"balanced_ratio_n" + std::to_string(n), std::pow(est.value / gauss, 1.0 / p)});
    if (auto v = check(x)) report.violations.push_back(*v);
    ++report.trials;
  }
  report.notes.emplace_back("uncentred form: sqrt(sum x_j^2) on the right-hand side");
  finish(report);
  return report;
}

VerificationReport verify_hunter_exact(int trials, const std::vector<int>& ells, std::uint64_t seed) {
  if (trials < 0) throw DomainError("verify_hunter_exact: trials must be nonnegative");
  for (int ell : ells)
    if (ell < 0 || ell % 2 != 0) throw DomainError("verify_hunter_exact: degrees must be even and nonnegative");
  VerificationReport report;
  report.suite = "hunter";
  std::string ell_list;
  for (int ell : ells) ell_list += (ell_list.empty() ? "" : ";") + std::to_string(ell);
  report.params = {{"ells", ell_list}, {"seed", std::to_string(seed)}};
  run_trials(report, trials, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int n = random_size(rng, 1, 6);
    std::vector<Rational> x(static_cast<std::size_t>(n));
    for (auto& v : x) {
      v = Rational(static_cast<long>(rng.below(41)) - 20, static_cast<long>(rng.below(10)) + 1);
      v.canonicalize();
    }
    Rational norm2 = 0;
    for (const auto& v : x) norm2 += v * v;
    std::vector<Violation> out;
    for (int ell : ells) {
      const Rational lhs = even_moment_exact(x, ell);  // l! h_l
      Rational dfact = 1;
      for (int k = ell - 1; k > 1; k -= 2) dfact *= k;
      Rational rhs = dfact * dfact;
      for (int k = 0; k < ell; ++k) rhs *= norm2;
      if (sgn(lhs) < 0 || lhs * lhs < rhs) {
        std::string model;
        for (const auto& v : x) model += (model.empty() ? "" : ",") + v.get_str();
        out.push_back({model, static_cast<double>(ell), Rational(lhs * lhs).get_d(), rhs.get_d(), 0.0});
      }
    }
    return out;
  });
  finish(report);
  return report;
}

double pstar() {
  static const double value = solve_pstar().value;
  return value;
}

VerificationReport verify_mrtt(double p, int trials, std::uint64_t seed, const EngineOptions& options) {
  require_p(p, "verify_mrtt");
  if (p == 0.0) throw DomainError("verify_mrtt: p = 0 is excluded");
  VerificationReport report;
  report.suite = "mrtt";
  report.params = {{"p", shortest(p)}, {"seed", std::to_string(seed)}};
  const double ps = pstar();
  // +1: r must not exceed the bound; -1: r must not fall below it.
  int direction;
  double log_bound;
  Eigen::VectorXd extremiser;
  if (p <= 1.0) {
    direction = -1;
    log_bound = log_gamma(p + 1.0) / p;
    extremiser = Eigen::Vector2d(1.0, -1.0);
  } else if (p <= ps) {
    direction = 1;
    log_bound = log_gamma(p + 1.0) / p;
    extremiser = Eigen::Vector2d(1.0, -1.0);
  } else {
    direction = 1;
    log_bound = std::log(kappa()) + std::log(centered_exp_abs_moment(p)) / p;
    extremiser = Eigen::VectorXd::Ones(1);
  }
  report.metrics.push_back({"log_bound", log_bound});
  report.notes.emplace_back("kappa = e/2 normalises ||kappa (E - 1)||_1 to 1; the printed factor 2/e does not");

  const auto ratio = [&](const Eigen::VectorXd& x, double& log_r, double& budget) {
    const double mean = x.sum();
    const auto num = moment_merged(x, {p, mean}, options);
    const auto den = moment_merged(x, {1.0, mean}, options);
    log_r = std::log(num.value) / p - std::log(den.value);
    budget = 3.0 * (num.error / (std::abs(p) * num.value) + den.error / den.value) + 1e-12;
  };
  const auto check = [&](const Eigen::VectorXd& x) -> std::optional<Violation> {
    double log_r, budget;
    ratio(x, log_r, budget);
    if (direction * (log_r - log_bound) > budget) return Violation{model_string(x), p, log_r, log_bound, budget};
    return std::nullopt;
  };
  run_trials(report, trials, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const auto x = random_normal(rng, random_size(rng, 1, 5));
    std::vector<Violation> out;
    if (auto v = check(x)) out.push_back(*v);
    return out;
  });
  double log_r, budget;
  ratio(extremiser, log_r, budget);
  report.metrics.push_back({"extremiser_log_gap", log_r - log_bound});
  if (std::abs(log_r - log_bound) > budget)
    report.violations.push_back({model_string(extremiser), p, log_r, log_bound, budget});
  ++report.trials;
  finish(report);
  return report;
}

VerificationReport verify_all_equal(int n_max, const std::vector<double>& ps) {
  if (n_max < 1) throw DomainError("verify_all_equal: n_max must be positive");
  VerificationReport report;
  report.suite = "all-equal";
  std::vector<double> pv(ps);
  report.params = {{"n_max", std::to_string(n_max)}, {"ps", join_numbers(pv)}};
  for (double p : ps) {
    require_p(p, "verify_all_equal");
    const double rhs = std::pow(2.0, 0.5 * p) * gaussian_abs_moment(p);
    for (int n = 1; n <= n_max; ++n) {
      const double lhs = std::exp(log_gamma_ratio(n, p) - 0.5 * p * std::log(static_cast<double>(n)));
      const double budget = 32.0 * kEps * rhs;
      if (lhs < rhs - budget) report.violations.push_back({"n=" + std::to_string(n), p, lhs, rhs, budget});
      if (n == n_max) report.metrics.push_back({"ratio_n" + std::to_string(n) + "_p" + shortest(p), lhs / rhs});
      ++report.trials;
    }
  }
  finish(report);
  return report;
}

VerificationReport verify_gamma_extension(const std::vector<double>& ps, int trials, std::uint64_t seed,
                                          const EngineOptions& options) {
  VerificationReport report;
  report.suite = "gamma";
  report.params = {{"ps", join_numbers(ps)}, {"seed", std::to_string(seed)}};
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    const double p = ps[pi];
    if (!(p >= 2.0)) throw DomainError("verify_gamma_extension: p must be at least 2");
    const double gauss = gaussian_abs_moment(p);
    const std::uint64_t base = derive_seed(seed, pi);
    run_trials(report, trials, [&](int i) {
      Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
      const int n = random_size(rng, 1, 4);
      Eigen::VectorXd w = random_normal(rng, n), shapes(n);
      for (auto& s : shapes) s = rng.below(2) ? 1.0 + static_cast<double>(rng.below(3)) : rng.uniform(0.3, 3.0);
      w /= std::sqrt((w.array().square() * shapes.array()).sum());
      EngineOptions opt = options;
      opt.seed = derive_seed(base, static_cast<std::uint64_t>(i) + 0x9e37);
      const GammaSumModel model(w, shapes);
      std::vector<Violation> out;
      const auto est = merged_moment(model, {p}, std::nullopt, opt);
      const double budget = 3.0 * est.error + 8.0 * kEps * gauss;
      if (est.value < gauss - budget) out.push_back({model.literal(), p, est.value, gauss, budget});
      // E[X |X|^p] = gamma E|X + E|^p for X ~ Gamma(gamma).
      const double g = shapes[0];
      const auto lhs = moment(GammaSumModel(Eigen::VectorXd::Ones(1), shapes.head(1)), {p + 1.0}, std::nullopt, opt);
      const auto rhs = moment(GammaSumModel(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(g, 1.0)), {p}, std::nullopt, opt);
      const double gap = std::abs(lhs.value - g * rhs.value);
      const double id_budget = 3.0 * (lhs.error + g * rhs.error) + 1e-12 * lhs.value;
      if (gap > id_budget)
        out.push_back({"identity:" + shortest(g), p, lhs.value, g * rhs.value, id_budget});
      return out;
    });
  }
  finish(report);
  return report;
}

VerificationReport verify_claim(int trials, std::uint64_t seed) {
  VerificationReport report;
  report.suite = "claim";
  report.params = {{"seed", std::to_string(seed)}};
  run_trials(report, trials, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd b(random_size(rng, 2, 6));
    for (auto& v : b) v = std::exp(rng.uniform(std::log(1e-4), std::log(2.0)));
    std::vector<Violation> out;
    if (!claim_inequality_check(b)) {
      const double lhs = (1.0 + b[0] + b[1]) / ((1.0 + b[0]) * (1.0 + b[1]));
      out.push_back({model_string(b), 0.0, lhs, (1.0 - b.sum()) * (1.0 + b.array()).prod(), 0.0});
    }
    return out;
  });
  finish(report);
  return report;
}

VerificationReport verify_step_ii_bound(int trials, std::uint64_t seed) {
  VerificationReport report;
  report.suite = "stepII-bound";
  report.params = {{"seed", std::to_string(seed)}};
  run_trials(report, trials, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int n = random_size(rng, 2, 8);
    Eigen::VectorXd x = random_normal(rng, n);
    x /= x.norm();
    Eigen::Index top = 0;
    const double x1 = x.cwiseAbs().maxCoeff(&top);
    const double x2 = x[(top + 1) % n];
    const double s = 1.0 / (x1 * x1);
    const auto y = GammaSumModel(x).with_summand(x[top]).with_summand(x2);
    std::vector<Violation> out;
    for (double t = 0.01; t < 50.0; t *= 1.25) {
      const auto z = charfn(y, t);
      const double bound = std::pow(1.0 + x1 * x1 * t * t, -0.5 * (1.0 + s));
      if (std::abs(z) > bound * (1.0 + 1e-12) || z.real() > std::abs(z) + 1e-15) {
        out.push_back({model_string(x), t, std::abs(z), bound, bound * 1e-12});
        break;
      }
    }
    return out;
  });
  finish(report);
  return report;
}

RootResult solve_pstar(double lo, double hi) {
  const double log_kappa = std::log(kappa());
  return find_root(
      [log_kappa](double p) { return log_gamma(p + 1.0) / p - log_kappa - std::log(centered_exp_abs_moment(p)) / p; },
      lo, hi, "solve_pstar");
}

RootResult solve_p0(double lo, double hi) {
  return find_root(
      [](double p) { return (std::log(centered_exp_abs_moment(p)) - std::log(gaussian_abs_moment(p))) / p; }, lo, hi,
      "solve_p0");
}

MomentEstimate gradient(const Eigen::VectorXd& x, double p, Eigen::Index j, std::optional<Engine> engine,
                        const EngineOptions& options) {
  if (!(p >= 2.0)) throw DomainError("gradient: p must be at least 2");
  if (j < 0 || j >= x.size()) throw DomainError("gradient: index out of range");
  const auto model = GammaSumModel(x).with_summand(x[j]);
  auto est = merged_moment(model, {p - 1.0, 0.0, true}, engine, options);
  est.value *= p;
  est.error *= p;
  est.p = p;
  return est;
}

MinimizeResult minimize_sphere(int n, double p, int multistart, std::uint64_t seed, const EngineOptions& options) {
  if (n < 2) throw DomainError("minimize_sphere: n must be at least 2");
  if (!(p >= 2.0)) throw DomainError("minimize_sphere: p must be at least 2");
  if (multistart < 1) throw DomainError("minimize_sphere: multistart must be positive");
  const auto objective = [&](const Eigen::VectorXd& x) { return moment_merged(x, {p}, options).value; };
  const auto tangent_gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) g[j] = gradient(x, p, j, std::nullopt, options).value;
    return Eigen::VectorXd(g - g.dot(x) * x);
  };
  std::vector<MinimizeResult> runs(static_cast<std::size_t>(multistart));
  detail::parallel_for(runs.size(), [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    Eigen::VectorXd x = random_normal(rng, n);
    x /= x.norm();
    double f = objective(x);
    double step = 0.5;
    MinimizeResult r{};
    Eigen::VectorXd g = tangent_gradient(x);
    for (r.iterations = 0; r.iterations < 2000; ++r.iterations) {
      const double gn = g.norm();
      if (gn < 1e-6 * std::max(1.0, f)) {
        r.converged = true;
        break;
      }
      step = std::min(1.0, 2.0 * step);
      bool moved = false;
      while (step > 1e-14) {
        Eigen::VectorXd trial = x - step * g;
        trial /= trial.norm();
        const double ft = objective(trial);
        if (ft <= f - 1e-4 * step * gn * gn) {
          x = trial;
          f = ft;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      g = tangent_gradient(x);
      if (!moved) {
        r.converged = g.norm() < 1e-5 * std::max(1.0, f);
        break;
      }
    }
    r.x_min = x;
    r.value = f;
    r.gradient_norm = g.norm();
    runs[s] = std::move(r);
  });
  auto best = *std::min_element(runs.begin(), runs.end(),
                                [](const MinimizeResult& a, const MinimizeResult& b) { return a.value < b.value; });
  // Crux at a critical point: p E|S|^p = p(p-1) E|S + x_a E' + x_b E''|^{p-2}.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(best.x_min[a]) > std::abs(best.x_min[b]);
  });
  const Eigen::Index a = order[0];
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Eigen::Index b = order[k];
    if (std::abs(best.x_min[a] - best.x_min[b]) > 1e-6) {
      const auto y = GammaSumModel(best.x_min).with_summand(best.x_min[a]).with_summand(best.x_min[b]);
      const double rhs = p * (p - 1.0) * merged_moment(y, {p - 2.0}, std::nullopt, options).value;
      const double lhs = p * best.value;
      best.crux_residual = std::abs(lhs - rhs) / lhs;
      break;
    }
  }
  return best;
}

LogConvexityReport logconvexity_probe(const Eigen::VectorXd& x, const std::vector<double>& ps, double tol) {
  if (x.size() < 2 || !x.allFinite()) throw DomainError("logconvexity_probe: need a finite vector of length >= 2");
  if (std::abs(x.sum()) > 1e-12 * std::max(1.0, x.cwiseAbs().sum()))
    throw DomainError("logconvexity_probe: weights must sum to 0");
  for (double p : ps)
    if (!(p >= 2.0)) throw DomainError("logconvexity_probe: grid must lie in [2, inf)");
  const double c = std::abs(x[0]);
  const bool equal_magnitudes = c > 0.0 && ((x.cwiseAbs().array() - c).abs() <= 1e-12 * c).all();
  const auto positives = (x.array() > 0.0).count();
  LogConvexityReport rep;
  rep.ps = ps;
  rep.asserted = equal_magnitudes && 2 * positives == x.size();
  const double log_norm = std::log(x.norm());
  for (double p : ps)
    rep.g.push_back(std::log(moment_merged(x, {p}).value) - std::log(gaussian_abs_moment(p)) - p * log_norm);
  for (std::size_t i = 1; i + 1 < rep.g.size(); ++i)
    rep.second_differences.push_back(rep.g[i + 1] - 2.0 * rep.g[i] + rep.g[i - 1]);
  rep.pass = !rep.asserted || std::all_of(rep.second_differences.begin(), rep.second_differences.end(),
                                          [tol](double d) { return d >= -tol; });
  return rep;
}

TangReport tang_density_check(const Eigen::VectorXd& x) {
  if (x.size() < 1 || !x.allFinite() || (x.array() < 0.0).any())
    throw DomainError("tang_density_check: weights must be nonnegative");
  if (std::abs(x.squaredNorm() - 1.0) > 1e-9) throw DomainError("tang_density_check: weights must have unit norm");
  std::vector<double> kept;
  for (double v : x)
    if (v > 0.0) kept.push_back(v);
  const auto model = coalesce_weights(
      GammaSumModel(Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()))), kMergeGap);
  const double value = density_at(model, 0.0, x.sum());
  const double reference = std::exp(-1.0);
  return {value, reference, value >= reference * (1.0 - 1e-12)};
}

}  // namespace expmoments
