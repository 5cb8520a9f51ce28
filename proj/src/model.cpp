#include "expmoments/model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "expmoments/errors.hpp"
#include "expmoments/specialfn.hpp"
#include "parallel.hpp"

namespace expmoments {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kCoincidentGap = 1e-10;
constexpr int kMaxErlang = 64;
constexpr std::size_t kSampleChunk = std::size_t{1} << 16;

bool is_integer(double v) { return v == std::floor(v); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view token, std::string_view literal) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("model literal: cannot parse '" + std::string(token) + "' in '" + std::string(literal) + "'");
  return v;
}

void append_shortest(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

// Taylor coefficients of (1 + beta w)^{-m} up to degree `degree`.
std::vector<double> negative_binomial_series(double beta, int m, int degree) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  c[0] = 1.0;
  for (int j = 1; j <= degree; ++j) c[j] = c[j - 1] * (-beta) * (m + j - 1) / j;
  return c;
}

}  // namespace

Rational to_rational(double v) {
  if (!std::isfinite(v)) throw DomainError("to_rational: non-finite value");
  Rational r(v);
  r.canonicalize();
  return r;
}

GammaSumModel::GammaSumModel(Eigen::VectorXd weights)
    : GammaSumModel(weights, Eigen::VectorXd::Ones(weights.size())) {}

GammaSumModel::GammaSumModel(Eigen::VectorXd weights, Eigen::VectorXd shapes)
    : weights_(std::move(weights)), shapes_(std::move(shapes)) {
  if (weights_.size() < 1) throw DomainError("GammaSumModel: at least one weight required");
  if (shapes_.size() != weights_.size()) throw DomainError("GammaSumModel: shapes and weights differ in length");
  if (!weights_.allFinite()) throw DomainError("GammaSumModel: weights must be finite");
  if (!shapes_.allFinite() || (shapes_.array() <= 0.0).any())
    throw DomainError("GammaSumModel: shapes must be positive and finite");
}

GammaSumModel GammaSumModel::exponential(std::initializer_list<double> weights) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
  Eigen::Index i = 0;
  for (double v : weights) w[i++] = v;
  return GammaSumModel(std::move(w));
}

bool GammaSumModel::has_integer_shapes() const {
  return std::all_of(shapes_.begin(), shapes_.end(), [](double s) { return is_integer(s); });
}

GammaSumModel GammaSumModel::with_summand(double weight, double shape) const {
  Eigen::VectorXd w(size() + 1), s(size() + 1);
  w << weights_, weight;
  s << shapes_, shape;
  return GammaSumModel(std::move(w), std::move(s));
}

std::uint64_t GammaSumModel::fingerprint() const {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(size()));
  for (Eigen::Index j = 0; j < size(); ++j) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(weights_[j]));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(shapes_[j]));
  }
  return h;
}

std::string GammaSumModel::literal() const {
  std::string out;
  for (Eigen::Index j = 0; j < size(); ++j) {
    if (j) out += ',';
    append_shortest(out, weights_[j]);
    if (shapes_[j] != 1.0) {
      out += '^';
      append_shortest(out, shapes_[j]);
    }
  }
  return out;
}

GammaSumModel parse_model_literal(std::string_view literal) {
  std::vector<double> w, s;
  std::string_view rest = literal;
  if (trim(rest).empty()) throw ParseError("model literal is empty");
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view token = rest.substr(0, comma);
    const auto caret = token.find('^');
    w.push_back(parse_number(token.substr(0, caret), literal));
    s.push_back(caret == std::string_view::npos ? 1.0 : parse_number(token.substr(caret + 1), literal));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return GammaSumModel(Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                       Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())));
}

std::vector<Rational> chs_all(std::span<const Rational> x, int max_ell) {
  if (max_ell < 0) throw DomainError("chs: degree must be nonnegative");
  std::vector<Rational> h(static_cast<std::size_t>(max_ell) + 1, Rational(0));
  h[0] = 1;
  // h_l(x_1..x_j) = h_l(x_1..x_{j-1}) + x_j h_{l-1}(x_1..x_j)
  for (const Rational& xj : x)
    for (int ell = 1; ell <= max_ell; ++ell) h[ell] += xj * h[ell - 1];
  return h;
}

Rational chs(std::span<const Rational> x, int ell) { return chs_all(x, ell).back(); }

Rational even_moment_exact(std::span<const Rational> x, int ell) {
  if (ell < 0 || ell % 2 != 0) throw DomainError("even_moment_exact: degree must be even and nonnegative");
  mpz_class factorial;
  mpz_fac_ui(factorial.get_mpz_t(), static_cast<unsigned long>(ell));
  return Rational(factorial) * chs(x, ell);
}

Rational power_moment_exact(const GammaSumModel& model, int ell) {
  if (ell < 0) throw DomainError("power_moment_exact: degree must be nonnegative");
  // E S^l / l! is the t^l coefficient of prod_j sum_m (gamma_j)_m (x_j t)^m / m!.
  std::vector<Rational> acc(static_cast<std::size_t>(ell) + 1, Rational(0));
  acc[0] = 1;
  std::vector<Rational> factor(acc.size());
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const Rational x = to_rational(model.weights()[j]);
    const Rational g = to_rational(model.shapes()[j]);
    factor[0] = 1;
    for (int m = 1; m <= ell; ++m) {
      factor[m] = factor[m - 1] * (g + (m - 1)) * x / m;
    }
    std::vector<Rational> next(acc.size(), Rational(0));
    for (int a = 0; a <= ell; ++a) {
      if (acc[a] == 0) continue;
      for (int b = 0; a + b <= ell; ++b) next[a + b] += acc[a] * factor[b];
    }
    acc.swap(next);
  }
  mpz_class factorial;
  mpz_fac_ui(factorial.get_mpz_t(), static_cast<unsigned long>(ell));
  return Rational(factorial) * acc[ell];
}

std::complex<double> charfn(const GammaSumModel& model, double t) {
  // log(1 - i x t) = log1p(x^2 t^2)/2 - i atan(x t) on the principal branch.
  double re = 0.0, im = 0.0;
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const double xt = model.weights()[j] * t;
    re -= 0.5 * model.shapes()[j] * std::log1p(xt * xt);
    im += model.shapes()[j] * std::atan(xt);
  }
  return std::polar(std::exp(re), im);
}

std::pair<double, double> mean_variance(const GammaSumModel& model) {
  const auto& x = model.weights().array();
  const auto& g = model.shapes().array();
  return {(x * g).sum(), (x * x * g).sum()};
}

double PartialFractionDensity::operator()(double t) const {
  double pos = 0.0, neg = 0.0;
  for (const auto& term : terms_) {
    const double a = std::abs(term.scale);
    const bool positive_side = term.scale > 0.0;
    if (t == 0.0) {
      if (term.order == 1) (positive_side ? pos : neg) += term.coefficient / a;
      continue;
    }
    if (positive_side != (t > 0.0)) continue;
    const double u = std::abs(t) / a;
    double v;
    if (term.order <= 30) {
      v = std::exp(-u) / a;
      for (int k = 1; k < term.order; ++k) v *= u / k;
    } else {
      v = std::exp((term.order - 1) * std::log(u) - u - log_gamma(term.order)) / a;
    }
    (positive_side ? pos : neg) += term.coefficient * v;
  }
  return t == 0.0 ? 0.5 * (pos + neg) : pos + neg;
}

ClosedMoment PartialFractionDensity::moment(double p, bool signed_moment) const {
  if (!(p > -1.0)) throw DomainError("moment: p must exceed -1");
  double value = 0.0, magnitude = 0.0;
  for (const auto& term : terms_) {
    const double a = std::abs(term.scale);
    double v = term.coefficient * std::exp(log_gamma_ratio(term.order, p) + p * std::log(a));
    if (signed_moment && term.scale < 0.0) v = -v;
    value += v;
    magnitude += std::abs(v);
  }
  const double error = kEps * (4.0 * static_cast<double>(terms_.size()) + 16.0) * magnitude;
  return {value, error};
}

PartialFractionDensity partial_fraction_density(const GammaSumModel& model) {
  if (!model.has_integer_shapes())
    throw NotApplicable("partial_fraction_density: shapes must be integers (use the fourier or montecarlo engine)");
  if ((model.weights().array() == 0.0).any()) throw DomainError("partial_fraction_density: zero weight");

  // Merge equal weights into poles of summed order.
  std::vector<std::pair<double, int>> poles;
  {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(model.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return model.weights()[a] < model.weights()[b]; });
    for (auto j : idx) {
      const double w = model.weights()[j];
      const int m = static_cast<int>(model.shapes()[j]);
      if (!poles.empty() && poles.back().first == w)
        poles.back().second += m;
      else
        poles.emplace_back(w, m);
    }
  }
  for (std::size_t i = 1; i < poles.size(); ++i) {
    const double a = poles[i - 1].first, b = poles[i].first;
    if (std::abs(b - a) < kCoincidentGap * std::max(std::abs(a), std::abs(b)))
      throw NotApplicable("partial_fraction_density: near-coincident weights " + std::to_string(a) + " and " +
                          std::to_string(b) + "; merge or perturb them");
  }

  std::vector<PfTerm> terms;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const auto [ai, mi] = poles[i];
    // With w = 1 - a_i s: (1 - a_k s) = alpha_k (1 + beta_k w).
    std::vector<double> series(static_cast<std::size_t>(mi), 0.0);
    series[0] = 1.0;
    double scalar = 1.0;
    for (std::size_t k = 0; k < poles.size(); ++k) {
      if (k == i) continue;
      const auto [ak, mk] = poles[k];
      const double alpha = (ai - ak) / ai;
      const double beta = ak / (ai - ak);
      scalar *= std::pow(alpha, -mk);
      if (mi == 1) continue;
      const auto factor = negative_binomial_series(beta, mk, mi - 1);
      std::vector<double> next(series.size(), 0.0);
      for (std::size_t a = 0; a < series.size(); ++a)
        for (std::size_t b = 0; a + b < series.size(); ++b) next[a + b] += series[a] * factor[b];
      series.swap(next);
    }
    for (int j = 0; j < mi; ++j)
      if (series[j] != 0.0) terms.push_back({scalar * series[j], ai, mi - j});
  }
  return PartialFractionDensity(std::move(terms));
}

double abs_power_moment_closed(const PartialFractionDensity& pfd, double p) { return pfd.moment(p).value; }

GammaSumModel coalesce_weights(const GammaSumModel& model, double rel_gap, double* displacement) {
  const auto n = static_cast<std::size_t>(model.size());
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return model.weights()[a] < model.weights()[b]; });
  Eigen::VectorXd w = model.weights();
  double worst = 0.0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n) {
      const double a = model.weights()[idx[end - 1]], b = model.weights()[idx[end]];
      if (std::abs(b - a) > rel_gap * std::max(std::abs(a), std::abs(b))) break;
      ++end;
    }
    if (end - start > 1) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        num += model.shapes()[idx[k]] * model.weights()[idx[k]];
        den += model.shapes()[idx[k]];
      }
      const double mean = num / den;
      for (std::size_t k = start; k < end; ++k) {
        if (mean != 0.0) worst = std::max(worst, std::abs(w[idx[k]] - mean) / std::abs(mean));
        w[idx[k]] = mean;
      }
    }
    start = end;
  }
  if (displacement) *displacement = worst;
  return GammaSumModel(std::move(w), model.shapes());
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double sample_gamma(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw DomainError("sample_gamma: shape must be positive");
  if (shape < 1.0) return sample_gamma(rng, shape + 1.0) * std::pow(rng.uniform(), 1.0 / shape);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

SumSampler::SumSampler(const GammaSumModel& model) {
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const double s = model.shapes()[j];
    const int erlang = (is_integer(s) && s <= kMaxErlang) ? static_cast<int>(s) : 0;
    summands_.push_back({model.weights()[j], s, erlang});
  }
}

double SumSampler::draw(Rng& rng) const {
  double total = 0.0;
  for (const auto& s : summands_) {
    double x = 0.0;
    if (s.erlang > 0) {
      for (int k = 0; k < s.erlang; ++k) x -= std::log(rng.uniform());
    } else {
      x = sample_gamma(rng, s.shape);
    }
    total += s.weight * x;
  }
  return total;
}

std::pair<double, double> SumSampler::draw_antithetic(Rng& rng) const {
  double first = 0.0, second = 0.0;
  for (const auto& s : summands_) {
    if (s.erlang > 0) {
      double x1 = 0.0, x2 = 0.0;
      for (int k = 0; k < s.erlang; ++k) {
        const double u = rng.uniform();
        x1 -= std::log(u);
        x2 -= std::log1p(-u);
      }
      first += s.weight * x1;
      second += s.weight * x2;
    } else {
      const double x = sample_gamma(rng, s.shape);
      first += s.weight * x;
      second += s.weight * x;
    }
  }
  return {first, second};
}

std::vector<double> sample(const GammaSumModel& model, std::uint64_t seed, std::size_t count) {
  if (count < 1) throw DomainError("sample: count must be at least 1");
  std::vector<double> out(count);
  const SumSampler sampler(model);
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  detail::parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t i = c * kSampleChunk; i < end; ++i) out[i] = sampler.draw(rng);
  });
  return out;
}

}  // namespace expmoments
