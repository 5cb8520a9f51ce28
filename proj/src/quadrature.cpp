#include "expmoments/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "expmoments/errors.hpp"

namespace expmoments {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr long kMaxIntervals = 400000;

// Every segment is parametrized over v in [0, 1]; g includes the Jacobian.
struct Segment {
  Integrand g;
};

struct Interval {
  double lo, hi;
  double value, error;
  int depth;
  int segment;
  bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gauss_kronrod(const Segment& seg, int index, double lo, double hi, int depth, long& evals) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = seg.g(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = seg.g(center - dx);
    const double f2 = seg.g(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  evals += 15;
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) throw DomainError("integrate: integrand is not finite on the range");
  double err = std::abs(kronrod - gauss);
  // Floor at the rounding level of the rule itself.
  err = std::max(err, 50.0 * kEps * std::abs(kronrod));
  return {lo, hi, kronrod, err, depth, index};
}

// Finite [l, r] with optional power singularities at either end.
void add_finite(std::vector<Segment>& out, const Integrand& f, double l, double r, double alpha_l, double alpha_r) {
  const bool sing_l = alpha_l < 0.0;
  const bool sing_r = alpha_r < 0.0;
  if (sing_l && sing_r) {
    const double mid = 0.5 * (l + r);
    add_finite(out, f, l, mid, alpha_l, 0.0);
    add_finite(out, f, mid, r, 0.0, alpha_r);
    return;
  }
  const double h = r - l;
  if (sing_l) {
    const double g = 1.0 / (1.0 + alpha_l);
    out.push_back({[f, l, h, g](double v) {
      const double vg1 = std::pow(v, g - 1.0);
      const double dt = h * vg1 * v;
      if (dt == 0.0 || l + dt == l) return 0.0;
      return f(l + dt) * h * g * vg1;
    }});
  } else if (sing_r) {
    const double g = 1.0 / (1.0 + alpha_r);
    out.push_back({[f, r, h, g](double v) {
      const double vg1 = std::pow(v, g - 1.0);
      const double dt = h * vg1 * v;
      if (dt == 0.0 || r - dt == r) return 0.0;
      return f(r - dt) * h * g * vg1;
    }});
  } else {
    out.push_back({[f, l, h](double v) { return f(l + h * v) * h; }});
  }
}

// [l, +inf) with a power singularity exponent at l; `dir` = -1 mirrors to (-inf, l].
void add_semi_infinite(std::vector<Segment>& out, const Integrand& f, double l, double alpha_l, int dir,
                       double threshold) {
  const Integrand oriented = dir > 0 ? f : Integrand([f, l](double t) { return f(2.0 * l - t); });
  add_finite(out, oriented, l, l + threshold, alpha_l, 0.0);
  // t = start + c (e^s - 1), s = u / (1 - u): algebraic decay in t becomes
  // exponential in s, so the image has no endpoint singularity at u = 1.
  const double start = l + threshold;
  const double c = std::max(std::abs(start), threshold);
  out.push_back({[oriented, start, c](double u) {
    if (u >= 1.0) return 0.0;
    const double w = 1.0 - u;
    const double s = u / w;
    if (s > 700.0) return 0.0;
    const double es = std::exp(s);
    return oriented(start + c * std::expm1(s)) * c * es / (w * w);
  }});
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("QuadratureConfig: tolerances must be positive");
  if (max_depth < 10) throw DomainError("QuadratureConfig: max_depth must be at least 10");
  if (!(tail_threshold > 0.0)) throw DomainError("QuadratureConfig: tail_threshold must be positive");
}

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg,
                           std::span<const SingularPoint> singular) {
  cfg.validate();
  if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate: NaN bound");
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, cfg, singular);
    r.value = -r.value;
    return r;
  }

  // Breakpoints with the strongest singularity exponent recorded at each.
  std::vector<SingularPoint> points;
  for (const auto& s : singular)
    if (s.at >= a && s.at <= b && std::isfinite(s.at)) points.push_back(s);
  if (std::isinf(a) && std::isinf(b) && points.empty()) points.push_back({0.0, 0.0});
  std::sort(points.begin(), points.end(), [](const auto& x, const auto& y) { return x.at < y.at; });
  std::vector<SingularPoint> merged;
  for (const auto& s : points) {
    if (!merged.empty() && merged.back().at == s.at)
      merged.back().exponent = std::min(merged.back().exponent, s.exponent);
    else
      merged.push_back(s);
  }
  auto exponent_at = [&](double t) {
    for (const auto& s : merged)
      if (s.at == t) return s.exponent;
    return 0.0;
  };

  std::vector<double> knots;
  if (std::isfinite(a)) knots.push_back(a);
  for (const auto& s : merged)
    if (s.at > a && s.at < b) knots.push_back(s.at);
  if (std::isfinite(b)) knots.push_back(b);
  if (knots.empty()) knots.push_back(0.0);

  std::vector<Segment> segments;
  if (std::isinf(a)) add_semi_infinite(segments, f, knots.front(), exponent_at(knots.front()), -1, cfg.tail_threshold);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    add_finite(segments, f, knots[i], knots[i + 1], exponent_at(knots[i]), exponent_at(knots[i + 1]));
  if (std::isinf(b)) add_semi_infinite(segments, f, knots.back(), exponent_at(knots.back()), +1, cfg.tail_threshold);

  QuadratureResult result;
  std::priority_queue<Interval> active;
  std::vector<Interval> frozen;
  for (std::size_t i = 0; i < segments.size(); ++i)
    active.push(gauss_kronrod(segments[i], static_cast<int>(i), 0.0, 1.0, 0, result.evaluations));

  auto totals = [&]() {
    double v = 0.0, e = 0.0;
    auto copy = active;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      copy.pop();
    }
    for (const auto& iv : frozen) {
      v += iv.value;
      e += iv.error;
    }
    return std::pair{v, e};
  };

  double value = 0.0, error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  long intervals = static_cast<long>(active.size());
  while (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value))) {
    if (active.empty() || intervals > kMaxIntervals)
      throw ConvergenceError("integrate: tolerance not reached", value, error);
    Interval worst = active.top();
    active.pop();
    if (worst.depth >= cfg.max_depth || worst.error <= 50.0 * kEps * std::abs(worst.value) ||
        (worst.hi - worst.lo) <= 4.0 * kEps * std::max(std::abs(worst.lo), std::abs(worst.hi))) {
      frozen.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    const auto& seg = segments[worst.segment];
    Interval left = gauss_kronrod(seg, worst.segment, worst.lo, mid, worst.depth + 1, result.evaluations);
    Interval right = gauss_kronrod(seg, worst.segment, mid, worst.hi, worst.depth + 1, result.evaluations);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    active.push(left);
    active.push(right);
    ++intervals;
  }
  // Recompute from scratch to shed incremental rounding.
  auto [v, e] = totals();
  result.value = v;
  result.error = e;
  return result;
}

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg,
                           std::span<const double> split_points) {
  std::vector<SingularPoint> pts;
  pts.reserve(split_points.size());
  for (double s : split_points) pts.push_back({s, 0.0});
  return integrate(f, a, b, cfg, pts);
}

}  // namespace expmoments
