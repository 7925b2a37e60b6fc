#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hybridsum/error.hpp"
#include "hybridsum/wilcoxon.hpp"

using namespace hybridsum;

namespace {

// Two-sided p by enumerating all 2^n sign assignments of the observed ranks.
double enumerate_p(const std::vector<std::pair<double, double>>& paired) {
  std::vector<double> d;
  for (const auto& [a, b] : paired) {
    if (a != b) d.push_back(a - b);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      else if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double total = 0, wplus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) wplus += rank[i];
  }
  const double observed = std::min(wplus, total - wplus);
  std::size_t hits = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank[i];
    }
    if (std::min(w, total - w) <= observed + 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::size_t{1} << n);
}

}  // namespace

TEST(Wilcoxon, AllZeroDifferencesIsAnError) {
  std::vector<std::pair<double, double>> p(10, {0.3, 0.3});
  EXPECT_THROW(wilcoxon_signed_rank(p), InvalidArgument);
}

TEST(Wilcoxon, TooFewPairsIsAnError) {
  EXPECT_THROW(wilcoxon_signed_rank({{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {1, 1}}), InvalidArgument);
}

TEST(Wilcoxon, ConstantShiftIsExtreme) {
  std::vector<std::pair<double, double>> p;
  for (int i = 0; i < 10; ++i) p.push_back({0.1 * i + 0.25, 0.1 * i});
  const auto r = wilcoxon_signed_rank(p);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_LT(r.p_value, 0.01);
  EXPECT_TRUE(r.exact);
}

TEST(Wilcoxon, EightPairFixtureMatchesEnumeration) {
  const std::vector<std::pair<double, double>> p{{0.30, 0.21}, {0.44, 0.47}, {0.12, 0.02}, {0.51, 0.38},
                                                 {0.27, 0.29}, {0.33, 0.18}, {0.40, 0.26}, {0.25, 0.19}};
  const auto r = wilcoxon_signed_rank(p);
  EXPECT_EQ(r.n, 8u);
  EXPECT_NEAR(r.p_value, enumerate_p(p), 1e-12);
}

TEST(Wilcoxon, RandomFixturesMatchEnumeration) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 6 + rng() % 7;
    std::vector<std::pair<double, double>> p;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse values so ties and zero differences occur
      p.push_back({static_cast<double>(rng() % 8) / 4.0, static_cast<double>(rng() % 8) / 4.0});
    }
    std::size_t nonzero = 0;
    for (const auto& [a, b] : p) nonzero += a != b;
    if (nonzero < kWilcoxonMinPairs) continue;
    EXPECT_NEAR(wilcoxon_signed_rank(p).p_value, enumerate_p(p), 1e-10);
  }
}

TEST(Wilcoxon, SymmetricInTheOrderOfSystems) {
  const std::vector<std::pair<double, double>> p{{1, 2}, {3, 1}, {4, 6}, {2, 7}, {9, 3}, {5, 11}, {4, 4.5}};
  std::vector<std::pair<double, double>> q;
  for (const auto& [a, b] : p) q.push_back({b, a});
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(p).p_value, wilcoxon_signed_rank(q).p_value);
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(p).statistic, wilcoxon_signed_rank(q).statistic);
}

TEST(Wilcoxon, AverageRanksForTies) {
  EXPECT_EQ(signed_rank_magnitudes({1.0, -1.0, 2.0, 0.5}), (std::vector<double>{2.5, 2.5, 4.0, 1.0}));
}

TEST(Wilcoxon, NormalApproximationAtThirty) {
  // Exact two-sided p from the exact null distribution (tests/oracles).
  const std::vector<double> a{0.300123, 0.329875, 0.272586, 0.210941, 0.254533, 0.200835, 0.306014, 0.434022,
                              0.250779, 0.237953, 0.348984, 0.335689, 0.310541, 0.206953, 0.297075, 0.36953,
                              0.165579, 0.254238, 0.109878, 0.171046, 0.115826, 0.276491, 0.173255, 0.327126,
                              0.315675, 0.281307, 0.048324, 0.246131, 0.29515,  0.311331};
  const std::vector<double> b{0.34663,  0.323762, 0.291512, 0.221383, 0.171488, 0.211212, 0.27764,  0.359802,
                              0.249959, 0.213538, 0.313461, 0.3025,   0.341794, 0.173146, 0.199134, 0.416888,
                              0.092609, 0.218271, 0.111951, 0.041025, 0.047714, 0.306455, 0.13953,  0.268292,
                              0.295114, 0.217161, 0.02165,  0.182768, 0.193224, 0.315114};
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < a.size(); ++i) p.push_back({a[i], b[i]});
  const auto r = wilcoxon_signed_rank(p);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.n, 30u);
  EXPECT_NEAR(r.p_value, 0.0020201820880174637, 0.02);
}
