#pragma once

// The acceptance battery: sixteen numbered checks, each at a fixed tolerance.

#include <cstdint>
#include <string>
#include <vector>

namespace expmoments {

struct CriterionResult {
  int id;
  std::string title;
  bool pass;
  /// Measured quantities; deterministic in the seed (no timings).
  std::string detail;
  double seconds;
};

inline constexpr int kCriterionCount = 16;

/// Runs criterion `id` (1-based). Seeds are derived from `seed` and the id.
CriterionResult run_criterion(int id, std::uint64_t seed = 0);

/// All criteria in order.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = 0);

}  // namespace expmoments
