#include "expmoments/engines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include "expmoments/errors.hpp"
#include "expmoments/specialfn.hpp"
#include "parallel.hpp"

namespace expmoments {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile
constexpr std::size_t kPairsPerChunk = std::size_t{1} << 15;

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

bool exact_applies(const MomentQuery& q) {
  if (q.shift != 0.0 || !is_integer(q.p) || q.p < 0.0 || q.p > 200.0) return false;
  const bool even = static_cast<long>(q.p) % 2 == 0;
  // |S|^p = S^p for even p; |S|^p sgn(S) = S^p for odd p.
  return q.signed_moment ? !even : even;
}

double signed_power(double u, double p, bool signed_moment) {
  const double v = std::pow(std::abs(u), p);
  return signed_moment && u < 0.0 ? -v : v;
}

MomentEstimate run_exact(const GammaSumModel& model, const MomentQuery& q) {
  const Rational v = power_moment_exact(model, static_cast<int>(q.p));
  return {v.get_d(), 0.0, Engine::exact, q.p, model.fingerprint()};
}

// Summands with weight 0 contribute nothing; nullopt when all weights vanish.
std::optional<GammaSumModel> nonzero_part(const GammaSumModel& model) {
  std::vector<double> w, s;
  for (Eigen::Index j = 0; j < model.size(); ++j)
    if (model.weights()[j] != 0.0) {
      w.push_back(model.weights()[j]);
      s.push_back(model.shapes()[j]);
    }
  if (w.empty()) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(w.size());
  return GammaSumModel(Eigen::Map<Eigen::VectorXd>(w.data(), n), Eigen::Map<Eigen::VectorXd>(s.data(), n));
}

MomentEstimate run_density(const GammaSumModel& model, const MomentQuery& q, const EngineOptions& opt) {
  const auto reduced = nonzero_part(model);
  if (!reduced) return {signed_power(-q.shift, q.p, q.signed_moment), 0.0, Engine::density, q.p, model.fingerprint()};
  const auto pfd = partial_fraction_density(*reduced);
  if (q.shift == 0.0) {
    const auto closed = pfd.moment(q.p, q.signed_moment);
    double value = closed.value;
    if (!q.signed_moment) value = std::max(value, 0.0);
    return {value, closed.error, Engine::density, q.p, model.fingerprint()};
  }
  // Shifted: integrate |u|^p f(u + m) in the offset variable u = t - m so the
  // power singularity sits exactly at 0.
  const double m = q.shift;
  const auto integrand = [&](double u) {
    const double dens = pfd(u + m);
    return dens == 0.0 ? 0.0 : signed_power(u, q.p, q.signed_moment) * dens;
  };
  // Splits at multiples of every pole scale keep narrow tails visible to the
  // first Kronrod pass.
  std::vector<SingularPoint> points{{0.0, std::min(q.p, 0.0)}, {-m, 0.0}};
  for (const auto& t : pfd.terms())
    for (double k : {1.0, 4.0, 16.0, 64.0}) points.push_back({k * t.order * t.scale - m, 0.0});
  const auto r = integrate(integrand, -std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(), opt.quadrature, points);
  double coef_mass = 0.0;
  for (const auto& t : pfd.terms()) coef_mass += std::abs(t.coefficient);
  const double rounding = kEps * 64.0 * coef_mass * std::abs(r.value);
  double value = r.value;
  if (!q.signed_moment) value = std::max(value, 0.0);
  return {value, r.error + rounding, Engine::density, q.p, model.fingerprint()};
}

MomentEstimate run_fourier(const GammaSumModel& model, const MomentQuery& q, const EngineOptions& opt) {
  const double qe = q.p;
  const double m = q.shift;
  const double cq = fourier_constant(qe);
  const auto& x = model.weights().array();
  const auto& g = model.shapes().array();
  const double x_min = (x.abs() > 0.0).select(x.abs(), std::numeric_limits<double>::infinity()).minCoeff();
  const double x_max = x.abs().maxCoeff();
  if (x_max == 0.0) {
    // S = 0 almost surely.
    return {std::pow(std::abs(m), qe), 0.0, Engine::fourier, qe, model.fingerprint()};
  }
  double log_prod = 0.0;  // log prod |x_j|^{gamma_j} over nonzero weights
  double nonzero_shape = 0.0;
  for (Eigen::Index j = 0; j < model.size(); ++j)
    if (x[j] != 0.0) {
      log_prod += g[j] * std::log(std::abs(x[j]));
      nonzero_shape += g[j];
    }

  // |phi(t)| <= t^{-G} / prod|x_j|^{gamma_j}, G = sum of shapes over nonzero weights.
  const auto tail_bound = [&](double T) {
    return std::exp(-(nonzero_shape + qe) * std::log(T) - log_prod) / (nonzero_shape + qe);
  };
  const auto [mean, var] = mean_variance(model);
  const double second = var + (mean - m) * (mean - m);
  const double rough = 0.1 * std::pow(second, 0.5 * qe) / cq;
  const double target = std::max(opt.quadrature.abs_tol, 1e-2 * opt.quadrature.rel_tol * rough);

  double T = 50.0 / x_min;
  if (m != 0.0) {
    while (tail_bound(T) > target && T < 1e12) T *= 2.0;
  }
  std::vector<SingularPoint> points{{0.0, std::min(1.0 - qe, 0.0)}};
  for (double s = 1.0 / x_max; s < T; s *= 10.0) points.push_back({s, 0.0});
  // The shifted integrand oscillates with angular frequency at most
  // |m| + sum gamma_j |x_j|; split every two periods until the envelope mass
  // beyond is below tolerance. Mass left unresolved is charged to the error.
  double unresolved = 0.0;
  if (m != 0.0) {
    const double len = 4.0 * std::numbers::pi / (std::abs(m) + (x.abs() * g).sum());
    const auto envelope_mass = [&](double t) {  // bound on int_t^inf |phi| s^{-q-1} ds
      return std::exp(-0.5 * (g * (x * t).square().log1p()).sum() - qe * std::log(t)) / (qe + 0.5 * nonzero_shape);
    };
    const double tol = opt.quadrature.rel_tol * rough;
    int added = 0;
    double s = len;
    for (; s < T && envelope_mass(s) > tol && added < 2000; s += len, ++added) points.push_back({s, 0.0});
    if (added == 2000 && s < T) unresolved = 2.0 * envelope_mass(s);
  }
  const auto integrand = [&](double t) {
    return one_minus_re_charfn(model, t, m) * std::exp(-(qe + 1.0) * std::log(t));
  };
  const auto head = integrate(integrand, 0.0, T, opt.quadrature, points);
  double value = head.value + std::pow(T, -qe) / qe;
  double error = head.error;
  if (m == 0.0) {
    const auto re_phi = [&](double t) {
      return (1.0 - one_minus_re_charfn(model, t, 0.0)) * std::exp(-(qe + 1.0) * std::log(t));
    };
    const auto tail = integrate(re_phi, T, std::numeric_limits<double>::infinity(), opt.quadrature);
    value -= tail.value;
    error += tail.error;
  } else {
    error += tail_bound(T) + unresolved;
  }
  value *= cq;
  error = cq * error + 16.0 * kEps * std::abs(value);
  return {std::max(value, 0.0), error, Engine::fourier, qe, model.fingerprint()};
}

MomentEstimate run_montecarlo(const GammaSumModel& model, const MomentQuery& q, const EngineOptions& opt) {
  const std::size_t pairs = std::max<std::size_t>(opt.mc_samples / 2, 2);
  const std::size_t chunks = (pairs + kPairsPerChunk - 1) / kPairsPerChunk;
  struct Partial {
    double sum = 0.0, sum_sq = 0.0;
  };
  std::vector<Partial> partials(chunks);
  const SumSampler sampler(model);
  detail::parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(opt.seed, c));
    const std::size_t end = std::min(pairs, (c + 1) * kPairsPerChunk);
    Partial acc;
    for (std::size_t i = c * kPairsPerChunk; i < end; ++i) {
      const auto [s1, s2] = sampler.draw_antithetic(rng);
      const double y = 0.5 * (signed_power(s1 - q.shift, q.p, q.signed_moment) +
                              signed_power(s2 - q.shift, q.p, q.signed_moment));
      acc.sum += y;
      acc.sum_sq += y * y;
    }
    partials[c] = acc;
  });
  Partial total;
  for (const auto& p : partials) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
  }
  const double n = static_cast<double>(pairs);
  const double mean = total.sum / n;
  const double variance = std::max(0.0, (total.sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, kZ99 * std::sqrt(variance / n), Engine::montecarlo, q.p, model.fingerprint()};
}

void require_applicable(const GammaSumModel& model, const MomentQuery& q, Engine e) {
  switch (e) {
    case Engine::exact:
      if (!exact_applies(q))
        throw NotApplicable("exact engine needs shift 0 and an even (unsigned) or odd (signed) integer p");
      break;
    case Engine::density:
      if (!model.has_integer_shapes()) throw NotApplicable("density engine needs integer shapes");
      break;
    case Engine::fourier:
      if (q.signed_moment) throw NotApplicable("fourier engine does not serve signed moments");
      if (!(q.p > 0.0 && q.p < 2.0)) throw NotApplicable("fourier engine needs 0 < p < 2");
      break;
    case Engine::montecarlo:
      break;
  }
}

}  // namespace

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::exact:
      return "exact";
    case Engine::density:
      return "density";
    case Engine::fourier:
      return "fourier";
    case Engine::montecarlo:
      return "montecarlo";
  }
  return "unknown";
}

Engine parse_engine(std::string_view name) {
  for (Engine e : {Engine::exact, Engine::density, Engine::fourier, Engine::montecarlo})
    if (name == to_string(e)) return e;
  throw ParseError("unknown engine '" + std::string(name) + "'");
}

std::vector<Engine> applicable_engines(const GammaSumModel& model, const MomentQuery& q) {
  std::vector<Engine> out;
  for (Engine e : {Engine::exact, Engine::density, Engine::fourier, Engine::montecarlo}) {
    try {
      require_applicable(model, q, e);
      out.push_back(e);
    } catch (const NotApplicable&) {
    }
  }
  return out;
}

MomentEstimate moment(const GammaSumModel& model, const MomentQuery& q, std::optional<Engine> engine,
                      const EngineOptions& options) {
  if (!(q.p > -1.0) || !std::isfinite(q.p)) throw DomainError("moment: p must exceed -1");
  if (!std::isfinite(q.shift)) throw DomainError("moment: shift must be finite");
  const Engine e = engine ? *engine : applicable_engines(model, q).front();
  require_applicable(model, q, e);
  switch (e) {
    case Engine::exact:
      return run_exact(model, q);
    case Engine::density:
      return run_density(model, q, options);
    case Engine::fourier:
      return run_fourier(model, q, options);
    case Engine::montecarlo:
      return run_montecarlo(model, q, options);
  }
  throw NotApplicable("moment: unknown engine");
}

MomentEstimate signed_moment(const GammaSumModel& model, MomentQuery q, std::optional<Engine> engine,
                             const EngineOptions& options) {
  q.signed_moment = true;
  return moment(model, q, engine, options);
}

double density_at(const GammaSumModel& model, double t, double shift) {
  return partial_fraction_density(model)(t + shift);
}

double one_minus_re_charfn(const GammaSumModel& model, double t, double shift) {
  // phi(t) e^{-i t m} = exp(L), L = sum_j gamma_j (-log1p(x_j^2 t^2)/2 + i atan(x_j t)) - i m t.
  double re = 0.0, im = -shift * t;
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const double xt = model.weights()[j] * t;
    re -= 0.5 * model.shapes()[j] * std::log1p(xt * xt);
    im += model.shapes()[j] * std::atan(xt);
  }
  const double half = std::sin(0.5 * im);
  return -std::expm1(re) * std::cos(im) + 2.0 * half * half;
}

CrossValidation cross_validate(const GammaSumModel& model, double p, std::uint64_t seed, const EngineOptions& options) {
  if (!(p > -1.0)) throw DomainError("cross_validate: p must exceed -1");
  const MomentQuery q{p};
  EngineOptions opt = options;
  opt.seed = seed;
  CrossValidation report{p, {}, {}, true};
  for (Engine e : applicable_engines(model, q)) {
    try {
      report.estimates.push_back(moment(model, q, e, opt));
    } catch (const NotApplicable&) {
      // e.g. near-coincident weights for the density engine
    }
  }
  for (std::size_t i = 0; i < report.estimates.size(); ++i)
    for (std::size_t j = i + 1; j < report.estimates.size(); ++j) {
      const auto& a = report.estimates[i];
      const auto& b = report.estimates[j];
      const double gap = std::abs(a.value - b.value);
      const double budget = a.error + b.error + 1e-12 * std::max(std::abs(a.value), std::abs(b.value));
      const bool flagged = gap > budget;
      report.consistent = report.consistent && !flagged;
      report.pairs.push_back({a.engine, b.engine, gap, budget, flagged});
    }
  return report;
}

}  // namespace expmoments
