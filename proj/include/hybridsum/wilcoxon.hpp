#pragma once

#include <utility>
#include <vector>

namespace hybridsum {

struct WilcoxonResult {
  /// min(W+, W-) over the non-zero differences.
  double statistic = 0.0;
  /// Two-sided: P(min(W+, W-) <= observed) under the sign-flip null.
  double p_value = 1.0;
  std::size_t n = 0;
  bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactMaxN = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 6;

/// Paired two-sided signed-rank test on a - b. Zero differences are dropped
/// and tied magnitudes share their average rank. The null distribution is
/// enumerated exactly (with the tied ranks) for n <= 25; above that a normal
/// approximation with tie and continuity corrections is used. Throws when
/// fewer than six non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& paired);

/// Average ranks (1-based) of the absolute values, ties sharing their mean rank.
std::vector<double> signed_rank_magnitudes(const std::vector<double>& differences);

}  // namespace hybridsum
