#include "hybridsum/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hybridsum/error.hpp"

namespace hybridsum {

std::vector<double> signed_rank_magnitudes(const std::vector<double>& differences) {
  const std::size_t n = differences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(differences[a]) < std::abs(differences[b]);
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(differences[order[j + 1]]) == std::abs(differences[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& paired) {
  std::vector<double> diffs;
  for (const auto& [a, b] : paired) {
    const double d = a - b;
    if (!std::isfinite(d)) throw InvalidArgument("wilcoxon: non-finite score");
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.size() < kWilcoxonMinPairs) {
    throw InvalidArgument("wilcoxon: need at least " + std::to_string(kWilcoxonMinPairs) +
                          " non-zero differences, got " + std::to_string(diffs.size()));
  }

  const auto ranks = signed_rank_magnitudes(diffs);
  const std::size_t n = diffs.size();
  // Average ranks are multiples of 1/2, so doubled ranks are exact integers.
  std::vector<std::size_t> doubled(n);
  std::size_t w_plus2 = 0;
  std::size_t total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    doubled[i] = static_cast<std::size_t>(std::llround(ranks[i] * 2.0));
    total2 += doubled[i];
    if (diffs[i] > 0) w_plus2 += doubled[i];
  }
  const std::size_t w_minus2 = total2 - w_plus2;
  const std::size_t stat2 = std::min(w_plus2, w_minus2);

  WilcoxonResult result;
  result.n = n;
  result.statistic = static_cast<double>(stat2) / 2.0;

  if (n <= kWilcoxonExactMaxN) {
    // counts[s] = number of sign assignments with doubled W+ == s.
    std::vector<double> counts(total2 + 1, 0.0);
    counts[0] = 1.0;
    std::size_t reach = 0;
    for (std::size_t r : doubled) {
      for (std::size_t s = reach + 1; s-- > 0;) {
        if (counts[s] != 0.0) counts[s + r] += counts[s];
      }
      reach += r;
    }
    double tail = 0.0;
    for (std::size_t s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= stat2) tail += counts[s];
    }
    result.p_value = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
    result.exact = true;
    return result;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    auto sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double w_plus = static_cast<double>(w_plus2) / 2.0;
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  result.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  result.exact = false;
  return result;
}

}  // namespace hybridsum
