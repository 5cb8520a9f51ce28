#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "expmoments/model.hpp"
#include "expmoments/quadrature.hpp"

namespace expmoments {

enum class Engine { exact, density, fourier, montecarlo };

std::string_view to_string(Engine e);
/// Accepts the names returned by to_string; throws ParseError otherwise.
Engine parse_engine(std::string_view name);

/// E|S - shift|^p, or E|S - shift|^p sgn(S - shift) when signed_moment is set.
struct MomentQuery {
  double p;
  double shift = 0.0;
  bool signed_moment = false;
};

struct MomentEstimate {
  double value;
  /// Absolute error bound, or 99% confidence half-width for montecarlo.
  double error;
  Engine engine;
  double p;
  std::uint64_t fingerprint;
};

struct EngineOptions {
  QuadratureConfig quadrature{};
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 0;
};

/// Engines able to answer the query for this model, most accurate first.
std::vector<Engine> applicable_engines(const GammaSumModel& model, const MomentQuery& q);

/// Computes the query with the requested engine, or with the first applicable
/// one in the order exact > density > fourier > montecarlo. Throws
/// DomainError for p <= -1 and NotApplicable when the requested engine cannot
/// serve the query.
MomentEstimate moment(const GammaSumModel& model, const MomentQuery& q, std::optional<Engine> engine = std::nullopt,
                      const EngineOptions& options = {});

/// moment() with signed_moment forced on.
MomentEstimate signed_moment(const GammaSumModel& model, MomentQuery q, std::optional<Engine> engine = std::nullopt,
                             const EngineOptions& options = {});

/// Density of S - shift at t (integer shapes only).
double density_at(const GammaSumModel& model, double t, double shift = 0.0);

/// 1 - Re(phi(t) e^{-i t shift}) without cancellation at small t.
double one_minus_re_charfn(const GammaSumModel& model, double t, double shift = 0.0);

struct EngineDiscrepancy {
  Engine first;
  Engine second;
  double gap;
  double budget;
  bool flagged;
};

struct CrossValidation {
  double p;
  std::vector<MomentEstimate> estimates;
  std::vector<EngineDiscrepancy> pairs;
  bool consistent;
};

/// Runs every applicable engine on E|S|^p and compares all pairs; a pair is
/// flagged when the gap exceeds the sum of both error bounds.
CrossValidation cross_validate(const GammaSumModel& model, double p, std::uint64_t seed,
                               const EngineOptions& options = {});

}  // namespace expmoments
