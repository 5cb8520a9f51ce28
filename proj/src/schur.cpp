#include "expmoments/schur.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "expmoments/errors.hpp"
#include "expmoments/format.hpp"
#include "expmoments/quadrature.hpp"
#include "expmoments/specialfn.hpp"
#include "parallel.hpp"

namespace expmoments {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMergeGap = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative(const Eigen::VectorXd& x, const char* what) {
  if (x.size() < 1) throw DomainError(std::string(what) + ": empty vector");
  if (!x.allFinite() || (x.array() < 0.0).any()) throw DomainError(std::string(what) + ": entries must be nonnegative");
}

void require_k(int k, int max_k, const char* what) {
  if (k < 0 || k > max_k) throw DomainError(std::string(what) + ": k out of range");
}

// Q_k(t) / t^{k+1}, finite for every t >= 0.
double q_k_scaled(int k, double t) {
  if (t < k + 1.0) {
    // Alternating Taylor tail with decreasing terms.
    double term = 1.0;
    for (int j = 1; j <= k + 1; ++j) term /= j;
    double sum = 0.0;
    for (int j = k + 1; j < k + 400; ++j) {
      sum += term;
      term *= -t / (j + 1);
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  // sum_{j<=k} (-t)^j / j! scaled by t^{-(k+1)}, accumulated from the top degree.
  double partial = 0.0, coef = 1.0;
  for (int j = 0; j <= k; ++j) {
    partial += ((j % 2 == 0) ? coef : -coef) * std::pow(t, j - k - 1.0);
    coef /= j + 1;
  }
  const double v = std::exp(-t - (k + 1.0) * std::log(t)) - partial;
  return (k % 2 == 0) ? -v : v;
}

double q_k_unchecked(int k, double t) { return t == 0.0 ? 0.0 : q_k_scaled(k, t) * std::pow(t, k + 1.0); }

// h_0(b) .. h_max(b) in double precision.
std::vector<double> chs_double(const Eigen::VectorXd& b, int max_ell) {
  std::vector<double> h(static_cast<std::size_t>(max_ell) + 1, 0.0);
  h[0] = 1.0;
  for (Eigen::Index m = 0; m < b.size(); ++m)
    for (int ell = 1; ell <= max_ell; ++ell) h[ell] += b[m] * h[ell - 1];
  return h;
}

// F_k(t^2 x) / t^{k+1} for b = sqrt(x); finite for every t >= 0.
double f_k_scaled(const Eigen::VectorXd& b, int k, double t) {
  const double total = b.sum();
  if (total == 0.0) return 0.0;
  if (t * total < 0.5) {
    // F_k = sum_{j>k} (-1)^{k+1+j} h_j(t b) with h_j(t b) = t^j h_j(b).
    const int max_ell = k + 1 + static_cast<int>(std::ceil(40.0 / std::max(0.3, -std::log10(t * total))));
    const auto h = chs_double(b, max_ell);
    double sum = 0.0, tj = 1.0;
    for (int j = k + 1; j <= max_ell; ++j, tj *= t) {
      const double term = ((k + 1 + j) % 2 == 0 ? 1.0 : -1.0) * h[j] * tj;
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  const auto h = chs_double(b, k);  // M_j / j! = h_j
  double log_p = 0.0;
  for (double v : b) log_p -= std::log1p(t * v);
  double partial = 0.0;
  for (int j = 0; j <= k; ++j) partial += (j % 2 == 0 ? 1.0 : -1.0) * h[j] * std::pow(t, j - k - 1.0);
  const double v = std::exp(log_p - (k + 1.0) * std::log(t)) - partial;
  return (k % 2 == 0) ? -v : v;
}

}  // namespace

MomentEstimate m_p(const Eigen::VectorXd& x, double p, const EngineOptions& options) {
  require_nonnegative(x, "m_p");
  if (!(p > -1.0)) throw DomainError("m_p: p must exceed -1");
  std::vector<double> roots;
  for (double v : x)
    if (v > 0.0) roots.push_back(std::sqrt(v));
  if (roots.empty()) {
    if (p < 0.0) throw DomainError("m_p: negative p at x = 0");
    return {p == 0.0 ? 1.0 : 0.0, 0.0, Engine::exact, p, 0};
  }
  double displacement = 0.0;
  const auto model = coalesce_weights(
      GammaSumModel(Eigen::Map<Eigen::VectorXd>(roots.data(), static_cast<Eigen::Index>(roots.size()))), kMergeGap,
      &displacement);
  auto est = moment(model, {p}, std::nullopt, options);
  est.error += std::abs(est.value) * (p * p + 1.0) * displacement * displacement;
  return est;
}

double q_k(int k, double t) {
  if (k < 0) throw DomainError("q_k: k must be nonnegative");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("q_k: t must be positive");
  return q_k_unchecked(k, t);
}

double c_p_constant(double p) {
  if (!(p > 0.0) || p != p || p == std::floor(p) || !std::isfinite(p))
    throw DomainError("c_p_constant: p must be positive and non-integer");
  const int k = static_cast<int>(std::floor(p));
  const SingularPoint at0[] = {{0.0, k - p}};
  return integrate([k, p](double t) { return t == 0.0 ? 0.0 : q_k_scaled(k, t) * std::pow(t, k - p); }, 0.0, kInf, {},
                   at0)
      .value;
}

double f_k(const Eigen::VectorXd& x, int k) {
  require_nonnegative(x, "f_k");
  require_k(k, 3, "f_k");
  return f_k_scaled(x.cwiseSqrt(), k, 1.0);
}

MomentEstimate f_k_mc(const Eigen::VectorXd& x, int k, std::uint64_t seed, std::size_t count) {
  require_nonnegative(x, "f_k_mc");
  if (k < 0) throw DomainError("f_k_mc: k must be nonnegative");
  if (count < 2) throw DomainError("f_k_mc: count must be at least 2");
  const GammaSumModel model(x.cwiseSqrt());
  const auto s = sample(model, seed, count);
  double sum = 0.0, sum_sq = 0.0;
  for (double v : s) {
    const double q = q_k_unchecked(k, std::max(v, 0.0));
    sum += q;
    sum_sq += q * q;
  }
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, 2.5758293035489004 * std::sqrt(var / n), Engine::montecarlo, static_cast<double>(k),
          model.fingerprint()};
}

double mp_representation_check(const Eigen::VectorXd& x, double p) {
  require_nonnegative(x, "mp_representation_check");
  if (!(p > 0.0 && p < 4.0) || p == std::floor(p))
    throw DomainError("mp_representation_check: p must be a non-integer in (0, 4)");
  const int k = static_cast<int>(std::floor(p));
  const Eigen::VectorXd b = x.cwiseSqrt();
  const SingularPoint at0[] = {{0.0, k - p}};
  const auto rep = integrate(
      [&](double t) { return t == 0.0 ? 0.0 : f_k_scaled(b, k, t) * std::pow(t, k - p); },
      0.0, kInf, {}, at0);
  const double mp = m_p(x, p).value;
  return std::abs(mp - rep.value / c_p_constant(p)) / mp;
}

Eigen::VectorXd t_transform(const Eigen::VectorXd& x, Eigen::Index i, Eigen::Index j, double lambda) {
  if (i < 0 || j < 0 || i >= x.size() || j >= x.size() || i == j)
    throw DomainError("t_transform: indices must be distinct and in range");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("t_transform: lambda must lie in [0, 1]");
  Eigen::VectorXd y = x;
  const double moved = (1.0 - lambda) * (x[i] - x[j]);
  y[i] = x[i] - moved;
  y[j] = x[j] + moved;
  return y;
}

bool majorizes(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol) {
  if (x.size() != y.size()) throw DomainError("majorizes: length mismatch");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  std::sort(xs.rbegin(), xs.rend());
  std::sort(ys.rbegin(), ys.rend());
  const double scale = tol * std::max(1.0, x.cwiseAbs().sum());
  double px = 0.0, py = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    px += xs[k];
    py += ys[k];
    if (px < py - scale) return false;
  }
  return std::abs(px - py) <= scale;
}

std::string_view to_string(SchurVerdict v) {
  switch (v) {
    case SchurVerdict::convex:
      return "convex";
    case SchurVerdict::concave:
      return "concave";
    case SchurVerdict::neither:
      return "neither";
    case SchurVerdict::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

ScanResult schur_scan(double p, int n, int trials, std::uint64_t seed, const EngineOptions& options) {
  if (!(p > -1.0)) throw DomainError("schur_scan: p must exceed -1");
  if (n < 2) throw DomainError("schur_scan: n must be at least 2");
  if (trials < 1) throw DomainError("schur_scan: trials must be positive");
  ScanResult result;
  result.p = p;
  result.n = n;
  result.trials = trials;
  result.rows.resize(static_cast<std::size_t>(trials));
  detail::parallel_for(static_cast<std::size_t>(trials), [&](std::size_t trial) {
    Rng rng(derive_seed(seed, trial));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    switch (rng.below(3)) {
      case 0:  // flat Dirichlet
        for (auto& v : x) v = -std::log(rng.uniform());
        break;
      case 1: {  // near the balanced point, at a log-uniform distance
        const double sigma = std::pow(10.0, rng.uniform(-3.0, -0.5));
        for (auto& v : x) v = std::abs(1.0 + sigma * rng.normal());
        break;
      }
      default: {  // two-point support, transformed within the support
        const double u = rng.uniform();
        x[i] = u;
        x[j] = 1.0 - u;
      }
    }
    x /= x.sum();
    const Eigen::VectorXd y = t_transform(x, i, j, rng.uniform());
    const auto mx = m_p(x, p, options);
    const auto my = m_p(y, p, options);
    const double budget = 3.0 * (mx.error + my.error) + 64.0 * kEps * std::max(mx.value, my.value);
    const double gap = mx.value - my.value;
    const int direction = gap > budget ? 1 : (-gap > budget ? -1 : 0);
    result.rows[trial] = {x, y, mx.value, mx.error, my.value, my.error, direction};
  });
  for (const auto& row : result.rows) {
    result.convex_evidence += row.direction > 0;
    result.concave_evidence += row.direction < 0;
  }
  if (result.convex_evidence && result.concave_evidence)
    result.verdict = SchurVerdict::neither;
  else if (result.convex_evidence)
    result.verdict = SchurVerdict::convex;
  else if (result.concave_evidence)
    result.verdict = SchurVerdict::concave;
  return result;
}

std::string scan_csv(const ScanResult& scan) {
  std::string out = "trial,x,y,mp_x,err_x,mp_y,err_y,direction\n";
  for (std::size_t t = 0; t < scan.rows.size(); ++t) {
    const auto& r = scan.rows[t];
    out += std::to_string(t) + ',' + join_numbers({r.x.data(), static_cast<std::size_t>(r.x.size())}) + ',' +
           join_numbers({r.y.data(), static_cast<std::size_t>(r.y.size())}) + ',' + shortest(r.mx) + ',' +
           shortest(r.ex) + ',' + shortest(r.my) + ',' + shortest(r.ey) + ',' +
           (r.direction > 0 ? "convex" : r.direction < 0 ? "concave" : "tie") + '\n';
  }
  return out;
}

double failure_f(double p, double x) {
  if (!(p > -1.0)) throw DomainError("failure_f: p must exceed -1");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("failure_f: x must lie in [0, 1]");
  const double a = x;
  const double b = std::sqrt((1.0 - x) * (1.0 + x));
  if (std::abs(b - a) < 1e-6) {
    // (g(c + d) - g(c - d)) / (2d) for g(u) = u^{p+1}, to second order in d.
    const double c = 0.5 * (a + b), d = 0.5 * (b - a);
    return (p + 1.0) * std::pow(c, p) + (p + 1.0) * p * (p - 1.0) * std::pow(c, p - 2.0) * d * d / 6.0;
  }
  return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (b - a);
}

FailureProfile failure_profile(double p) {
  if (!(p > -1.0)) throw DomainError("failure_profile: p must exceed -1");
  const double right = 1.0 / std::sqrt(2.0);
  const auto f = [p](double x) { return failure_f(p, x); };
  FailureProfile prof{};
  prof.p = p;
  prof.f_at_0 = f(0.0);
  prof.f_at_right = f(right);
  prof.d2_closed_form = std::pow(2.0, 1.0 - 0.5 * p) * p * (p + 1.0) * (p - 4.0) / 3.0;

  // One-sided fourth-order difference at 0.
  {
    const double h = 1e-3;
    prof.d1_at_0 = (-25.0 * f(0.0) + 48.0 * f(h) - 36.0 * f(2 * h) + 16.0 * f(3 * h) - 3.0 * f(4 * h)) / (12.0 * h);
  }
  // Richardson-extrapolated central differences at the right end.
  {
    const auto d1 = [&](double h) { return (f(right + h) - f(right - h)) / (2.0 * h); };
    const auto d2 = [&](double h) { return (f(right + h) - 2.0 * f(right) + f(right - h)) / (h * h); };
    const double h = 1e-3;
    prof.d1_at_right = (4.0 * d1(0.5 * h) - d1(h)) / 3.0;
    prof.d2_at_right = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
  }

  constexpr int kGrid = 512;
  const double step = right / (kGrid - 1);
  const double hd = 1e-6;
  for (int i = 0; i < kGrid; ++i) {
    const double x = i * step;
    double df;
    if (i == 0)
      df = prof.d1_at_0;
    else if (i == kGrid - 1)
      df = prof.d1_at_right;
    else
      df = (f(x + hd) - f(x - hd)) / (2.0 * hd);
    prof.samples.push_back({x, f(x), df});
  }
  // Interior maximum: derivative changes sign from + to - away from the right end.
  for (int i = 0; i + 2 < kGrid; ++i) {
    if (prof.samples[i].df > 0.0 && prof.samples[i + 1].df <= 0.0) {
      double lo = prof.samples[std::max(i - 1, 0)].x, hi = prof.samples[i + 2].x;
      const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
      double fc = f(c), fd = f(d);
      while (hi - lo > 1e-12) {
        if (fc > fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - inv_phi * (hi - lo);
          fc = f(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + inv_phi * (hi - lo);
          fd = f(d);
        }
      }
      prof.critical_point = 0.5 * (lo + hi);
      prof.f_at_critical = f(*prof.critical_point);
      break;
    }
  }
  return prof;
}

double ostrowski_differential(const Eigen::VectorXd& x, int k, Eigen::Index i, Eigen::Index j) {
  require_k(k, 3, "ostrowski_differential");
  if (x.size() < 2 || !x.allFinite() || (x.array() <= 0.0).any())
    throw DomainError("ostrowski_differential: entries must be strictly positive");
  if (i < 0 || j < 0 || i >= x.size() || j >= x.size() || i == j)
    throw DomainError("ostrowski_differential: indices must be distinct and in range");
  using L = long double;
  std::vector<L> b(static_cast<std::size_t>(x.size()));
  for (Eigen::Index m = 0; m < x.size(); ++m) b[m] = std::sqrt(static_cast<L>(x[m]));
  const L u1 = b[i], u2 = b[j];
  // dF_k/db_m = g(b_m) with g(u) = F_{k-1}(b, u) (g(u) = P(b)/(1+u) for k = 0), and
  // dF/dx_i - dF/dx_j = (b_i - b_j)/2 * [g(u)/u]_{divided difference at u1, u2}.
  L prod = 1.0L;
  for (L v : b) prod /= (1.0L + v);
  std::vector<L> h(4, 0.0L);
  h[0] = 1.0L;
  for (L v : b)
    for (int ell = 1; ell < 4; ++ell) h[ell] += v * h[ell - 1];
  const auto dd_power = [&](int r) -> L {  // divided difference of u^{r-1}
    if (r == 0) return -1.0L / (u1 * u2);
    if (r == 1) return 0.0L;
    L s = 0.0L;  // h_{r-2}(u1, u2)
    for (int a = 0; a <= r - 2; ++a) s += std::pow(u1, a) * std::pow(u2, r - 2 - a);
    return s;
  };
  L bracket = -prod * (1.0L + u1 + u2) / (u1 * u2 * (1.0L + u1) * (1.0L + u2));
  for (int deg = 0; deg <= k - 1; ++deg) {
    L inner = 0.0L;
    for (int r = 0; r <= deg; ++r) inner += h[deg - r] * dd_power(r);
    bracket -= (deg % 2 == 0 ? 1.0L : -1.0L) * inner;
  }
  if (k % 2 == 1) bracket = -bracket;
  return static_cast<double>(0.5L * (u1 - u2) * bracket);
}

bool claim_inequality_check(const Eigen::VectorXd& b) {
  if (b.size() < 2 || !b.allFinite() || (b.array() <= 0.0).any())
    throw DomainError("claim_inequality_check: need at least two positive entries");
  const double lhs = (1.0 + b[0] + b[1]) / ((1.0 + b[0]) * (1.0 + b[1]));
  const double rhs = (1.0 - b.sum()) * (1.0 + b.array()).prod();
  return lhs > rhs;
}

}  // namespace expmoments
