#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "hybridsum/error.hpp"
#include "hybridsum/router.hpp"
#include "bleu_oracle.hpp"
#include "synthetic.hpp"

using namespace hybridsum;

namespace {

const std::vector<std::string> kWords{"returns", "the", "user", "name", "sets", "value", "of",
                                      "a",       "list", "closes", "stream", "opens", "file"};

Tokens random_sentence(std::mt19937_64& rng, std::size_t min_len = 4, std::size_t max_len = 9) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> word(0, kWords.size() - 1);
  Tokens out(len(rng));
  for (auto& t : out) t = kWords[word(rng)];
  return out;
}

std::vector<SweepSample> mixed_fixture(std::uint64_t seed, std::size_t n = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::vector<SweepSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    SweepSample s;
    s.reference = random_sentence(rng);
    s.ir_comment = i % 3 == 0 ? s.reference : random_sentence(rng);
    s.nmt_comment = i % 4 == 1 ? s.reference : random_sentence(rng);
    s.score = std::round(score(rng) * 100.0) / 100.0;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST(LexicalScore, IdenticalSnippetsScoreOne) {
  const Tokens code{"public", "int", "get", "size", "return", "size"};
  EXPECT_DOUBLE_EQ(lexical_score(code, code), 1.0);
}

TEST(LexicalScore, DisjointSnippetsScoreZero) {
  EXPECT_DOUBLE_EQ(lexical_score({"a", "b", "c", "d"}, {"w", "x", "y", "z"}), 0.0);
}

TEST(LexicalScore, PrefixPair) {
  EXPECT_NEAR(lexical_score({"a", "b", "c", "d"}, {"a", "b", "c", "d", "e"}), 0.7788007831, 1e-4);
}

TEST(LexicalScore, EmptyRetrievedCodeScoresZero) {
  EXPECT_DOUBLE_EQ(lexical_score({"a"}, {}), 0.0);
}

TEST(Route, ThresholdExamples) {
  EXPECT_EQ(route(1.0, 0.40), Choice::IR);
  EXPECT_EQ(route(0.39, 0.40), Choice::NMT);
  EXPECT_EQ(route(0.40, 0.40), Choice::IR);
  EXPECT_EQ(route(0.0, 0.0), Choice::IR);
}

TEST(Route, RejectsOutOfRangeInputs) {
  EXPECT_THROW(route(1.2, 0.4), InvalidArgument);
  EXPECT_THROW(route(0.5, -0.1), InvalidArgument);
  EXPECT_THROW(route(std::nan(""), 0.4), InvalidArgument);
}

TEST(Route, OracleExamples) {
  EXPECT_EQ(oracle_route(0.9, 0.2), Choice::IR);
  EXPECT_EQ(oracle_route(0.5, 0.5), Choice::NMT);
  EXPECT_EQ(oracle_route(0.0, 0.0), Choice::NMT);
}

TEST(Route, RaisingTheThresholdNeverFlipsNmtToIr) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = threshold_grid();
  for (int trial = 0; trial < 2000; ++trial) {
    const double s = u(rng);
    bool seen_nmt = false;
    for (double t : grid) {
      const Choice c = route(s, t);
      if (seen_nmt) EXPECT_EQ(c, Choice::NMT);
      seen_nmt = seen_nmt || c == Choice::NMT;
    }
  }
}

TEST(RouterConfigTest, ValidatesThreshold) {
  RouterConfig cfg;
  cfg.threshold = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.threshold = 0.4;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RouterKindTest, ParsesAndPrints) {
  for (auto k : {RouterKind::Lexical, RouterKind::External, RouterKind::Oracle, RouterKind::AlwaysIr,
                 RouterKind::AlwaysNmt}) {
    EXPECT_EQ(parse_router_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_router_kind("psychic"), Error);
}

TEST(External, ScoreOneRoutesToIr) {
  FunctionBackend b(nullptr, [](const ClassifyRequest&) { return 1.0; });
  const auto s = classify_external(b, "q1", {"a"}, {"b"});
  EXPECT_FALSE(s.clamped);
  EXPECT_EQ(route(s.score, 0.40), Choice::IR);
}

TEST(External, ScoreZeroRoutesToNmt) {
  FunctionBackend b(nullptr, [](const ClassifyRequest&) { return 0.0; });
  EXPECT_EQ(route(classify_external(b, "q1", {"a"}, {"b"}).score, 0.40), Choice::NMT);
}

TEST(External, OutOfRangeScoresAreClamped) {
  FunctionBackend b(nullptr, [](const ClassifyRequest& r) { return r.id == "hi" ? 1.7 : -0.2; });
  const auto hi = classify_external(b, "hi", {"a"}, {"b"});
  EXPECT_DOUBLE_EQ(hi.score, 1.0);
  EXPECT_TRUE(hi.clamped);
  const auto lo = classify_external(b, "lo", {"a"}, {"b"});
  EXPECT_DOUBLE_EQ(lo.score, 0.0);
  EXPECT_TRUE(lo.clamped);
}

TEST(External, NanIsABackendError) {
  EXPECT_THROW(clamp_score("n", std::nan("")), BackendError);
}

TEST(External, WorksOverTheSubprocessProtocol) {
  BackendConfig cfg;
  cfg.command = std::string("\"") + HYBRIDSUM_MOCK_BACKEND + "\" --generate none --classify constant --score 1.7";
  SubprocessBackend b(cfg);
  const std::vector<ClassifyRequest> reqs{{"a", {"x"}, {"x"}}, {"b", {"x"}, {"y"}}};
  const auto scores = classify_external(b, reqs);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_DOUBLE_EQ(scores[0].score, 1.0);
  EXPECT_TRUE(scores[1].clamped);
}

TEST(Grid, HasTwentyOnePointsFromZeroToOne) {
  const auto grid = threshold_grid();
  ASSERT_EQ(grid.size(), 21u);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_DOUBLE_EQ(grid[k], static_cast<double>(k) / 20.0);
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_THROW(threshold_grid(0.0, 1.0, 0.0), InvalidArgument);
}

TEST(Sweep, AllIrBestIsZero) {
  std::mt19937_64 rng(1);
  std::vector<SweepSample> samples;
  for (int i = 0; i < 10; ++i) {
    SweepSample s;
    s.reference = random_sentence(rng);
    s.ir_comment = s.reference;
    s.nmt_comment = random_sentence(rng);
    s.score = 0.1 * i;
    samples.push_back(s);
  }
  const auto r = sweep_threshold(samples);
  EXPECT_EQ(r.best_threshold, 0.0);
  EXPECT_DOUBLE_EQ(r.best_bleu, 1.0);
  EXPECT_EQ(r.curve.size(), 21u);
}

TEST(Sweep, AllNmtBestIsFirstGridPointAboveEveryScore) {
  std::vector<SweepSample> samples;
  const std::vector<double> scores{0.12, 0.33, 0.61, 0.07, 0.5};
  std::mt19937_64 rng(2);
  for (double sc : scores) {
    SweepSample s;
    s.reference = random_sentence(rng);
    s.nmt_comment = s.reference;
    s.ir_comment = {"zz", "yy", "xx", "ww"};
    s.score = sc;
    samples.push_back(s);
  }
  const auto r = sweep_threshold(samples);
  EXPECT_DOUBLE_EQ(r.best_threshold, 0.65);
  EXPECT_DOUBLE_EQ(r.best_bleu, 1.0);
  for (const auto& p : r.curve) {
    if (p.threshold > 0.61) EXPECT_DOUBLE_EQ(p.bleu, 1.0);
  }
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_GE(r.curve[i].bleu, r.curve[i - 1].bleu);
}

TEST(Sweep, MatchesBruteForceOnMixedFixtures) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto samples = mixed_fixture(seed);
    const auto r = sweep_threshold(samples);
    double best = -1.0;
    double best_t = -1.0;
    for (int k = 0; k <= 20; ++k) {
      const double t = k / 20.0;
      std::vector<std::pair<Tokens, Tokens>> pairs;
      for (const auto& s : samples) pairs.emplace_back(s.score >= t ? s.ir_comment : s.nmt_comment, s.reference);
      const double b = testsupport::oracle_corpus_bleu(pairs);
      EXPECT_NEAR(r.curve[static_cast<std::size_t>(k)].bleu, b, 1e-12);
      if (b > best + 1e-15) {
        best = b;
        best_t = t;
      }
    }
    EXPECT_DOUBLE_EQ(r.best_threshold, best_t) << seed;
    EXPECT_NEAR(r.best_bleu, best, 1e-12);
  }
}

TEST(Sweep, TiesGoToTheSmallestThreshold) {
  SweepSample s;
  s.reference = {"a", "b", "c", "d"};
  s.ir_comment = s.reference;
  s.nmt_comment = s.reference;
  s.score = 0.5;
  EXPECT_EQ(sweep_threshold({s}).best_threshold, 0.0);
}

TEST(Sweep, EmptyDevSetIsAnError) {
  EXPECT_THROW(sweep_threshold({}), InvalidArgument);
}

TEST(Sweep, CsvListsEveryPoint) {
  const auto csv = sweep_to_csv(sweep_threshold(mixed_fixture(3)));
  EXPECT_EQ(csv.rfind("threshold,bleu,best\n0.00,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
  EXPECT_NE(csv.find("\n1.00,"), std::string::npos);
}

TEST(SweepFile, RoundTrips) {
  const auto samples = mixed_fixture(4, 6);
  std::vector<std::pair<SampleId, SweepSample>> named;
  for (std::size_t i = 0; i < samples.size(); ++i) named.emplace_back("s" + std::to_string(i), samples[i]);
  const auto path = testsupport::fresh_dir("sweepfile") / "s.jsonl";
  std::ofstream(path) << write_sweep_samples_to_string(named);
  const auto back = read_sweep_samples(path);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].score, samples[i].score);
    EXPECT_EQ(back[i].reference, samples[i].reference);
    EXPECT_EQ(back[i].ir_comment, samples[i].ir_comment);
  }
}

TEST(SweepFile, AcceptsTokenArraysAndRejectsBadScores) {
  const auto dir = testsupport::fresh_dir("sweepfile_bad");
  std::ofstream(dir / "ok.jsonl") << R"({"id":"a","score":0.5,"ir":["x","y"],"nmt":"x","reference":"x y"})" << "\n";
  EXPECT_EQ(read_sweep_samples(dir / "ok.jsonl").front().ir_comment, (Tokens{"x", "y"}));
  std::ofstream(dir / "bad.jsonl") << R"({"id":"a","score":1.5,"ir":"x","nmt":"x","reference":"x"})" << "\n";
  EXPECT_THROW(read_sweep_samples(dir / "bad.jsonl"), FormatError);
}
