#pragma once

#include <cstdint>
#include <span>

namespace fdx {

struct MannKendallResult {
  // Pair-sign sum over i < j of sgn(x_j - x_i).
  std::int64_t s = 0;
  // Tie-corrected variance of S.
  double var_s = 0.0;
  // Standardized statistic with continuity correction.
  double z = 0.0;
  // One-sided p-value for a positive trend.
  double p_pos = 1.0;
};

// Requires n >= 4 and finite values. S is counted in O(n log n) via
// merge-sort inversion counting; the unit tests pin it against a
// brute-force pair count.
MannKendallResult mann_kendall(std::span<const double> x);

}  // namespace fdx
