#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "hybridsum/error.hpp"
#include "hybridsum/pipeline.hpp"
#include "bleu_oracle.hpp"
#include "synthetic.hpp"

using namespace hybridsum;

namespace {

struct Fixture {
  Corpus corpus;
  Bm25Index index;
};

Fixture make_fixture(std::uint64_t seed = 11) {
  testsupport::SyntheticOptions o;
  o.seed = seed;
  Corpus c = testsupport::synthetic_corpus(o);
  Bm25Index index = Bm25Index::build(c);
  return {std::move(c), std::move(index)};
}

RunConfig base_config() {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.router.kind = RouterKind::Lexical;
  cfg.router.threshold = 0.4;
  return cfg;
}

std::string record(const std::string& id, const std::string& project, const std::string& code,
                   const std::string& comment, const std::string& split) {
  return R"({"id":")" + id + R"(","project":")" + project + R"(","code":")" + code +
         R"(","comment":")" + comment + R"(","split":")" + split + "\"}\n";
}

}  // namespace

TEST(GenerateComments, AlwaysIrNeverCallsTheGenerator) {
  const auto f = make_fixture();
  const auto test = f.corpus.samples_in(Split::Test);
  auto gen = testsupport::heuristic_backend();
  RouterConfig router;
  router.kind = RouterKind::AlwaysIr;
  const auto decisions = generate_comments(test, f.index, router, {gen.get(), nullptr});
  EXPECT_EQ(gen->stats().generate_requests, 0u);
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(decisions[i].choice, Choice::IR);
    EXPECT_EQ(decisions[i].emitted_comment, f.index.retrieve_top1(*test[i]).retrieved_comment);
  }
  // No generator at all is fine too.
  EXPECT_NO_THROW(generate_comments(test, f.index, router, {}));
}

TEST(GenerateComments, AlwaysNmtEmitsTheBackendOutput) {
  const auto f = make_fixture();
  const auto test = f.corpus.samples_in(Split::Test);
  auto gen = testsupport::heuristic_backend();
  RouterConfig router;
  router.kind = RouterKind::AlwaysNmt;
  const auto decisions = generate_comments(test, f.index, router, {gen.get(), nullptr});
  EXPECT_EQ(gen->stats().generate_requests, test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(decisions[i].choice, Choice::NMT);
    EXPECT_EQ(decisions[i].emitted_comment, testsupport::heuristic_comment(test[i]->code_tokens));
  }
}

TEST(GenerateComments, ExternalScoreOneOnADuplicateReusesTheComment) {
  const std::string text = record("a", "p1", "getUserName()", "Returns the user name.", "train") +
                           record("b", "p2", "closeStream(s)", "Closes the stream.", "train") +
                           record("c", "p3", "getUserName()", "Gives back the name.", "test");
  const Corpus c = load_corpus_from_string(text);
  const auto index = Bm25Index::build(c);
  FunctionBackend classifier(nullptr, [](const ClassifyRequest&) { return 1.0; });
  RouterConfig router;
  router.kind = RouterKind::External;
  const auto d = generate_comment(*c.find("c"), index, router, {nullptr, &classifier});
  EXPECT_EQ(d.choice, Choice::IR);
  EXPECT_EQ(d.emitted_comment, c.find("a")->comment_tokens);
  EXPECT_EQ(classifier.stats().classify_requests, 1u);
}

TEST(GenerateComments, ExternalRouterNeedsAClassifier) {
  const auto f = make_fixture();
  RouterConfig router;
  router.kind = RouterKind::External;
  EXPECT_THROW(generate_comments(f.corpus.samples_in(Split::Test), f.index, router, {}), InvalidArgument);
}

TEST(GenerateComments, GeneratorCallsEqualNmtRoutedCount) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto f = make_fixture(seed);
    const auto test = f.corpus.samples_in(Split::Test);
    auto gen = testsupport::heuristic_backend();
    RouterConfig router;
    const auto decisions = generate_comments(test, f.index, router, {gen.get(), nullptr});
    std::size_t nmt = 0;
    for (const auto& d : decisions) nmt += d.choice == Choice::NMT;
    EXPECT_EQ(gen->stats().generate_requests, nmt);
  }
}

TEST(GenerateComments, IrChoicesAppearVerbatimInTraining) {
  const auto f = make_fixture(4);
  const auto test = f.corpus.samples_in(Split::Test);
  auto gen = testsupport::heuristic_backend();
  RouterConfig router;
  router.threshold = 0.2;
  std::set<Tokens> train_comments;
  for (const Sample* s : f.corpus.samples_in(Split::Train)) train_comments.insert(s->comment_tokens);
  for (const auto& d : generate_comments(test, f.index, router, {gen.get(), nullptr})) {
    if (d.choice == Choice::IR) EXPECT_TRUE(train_comments.count(d.emitted_comment)) << d.sample_id;
  }
}

TEST(GenerateComments, GeneratorFailureNamesTheSample) {
  const auto f = make_fixture();
  const auto test = f.corpus.samples_in(Split::Test);
  const std::string victim = test.back()->id;
  FunctionBackend gen([&](const GenerateRequest& r) -> Tokens {
    if (r.id == victim) throw std::runtime_error("oom");
    return {"x"};
  });
  RouterConfig router;
  router.kind = RouterKind::AlwaysNmt;
  try {
    generate_comments(test, f.index, router, {&gen, nullptr});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.request_id(), victim);
  }
}

TEST(Effort, Fractions) {
  std::vector<RoutingDecision> all_ir(4), none_ir(3), mixed(5);
  for (auto& d : all_ir) d.choice = Choice::IR;
  mixed[1].choice = Choice::IR;
  mixed[3].choice = Choice::IR;
  EXPECT_DOUBLE_EQ(effort_saved(all_ir).fraction, 1.0);
  EXPECT_DOUBLE_EQ(effort_saved(none_ir).fraction, 0.0);
  const auto e = effort_saved(mixed);
  EXPECT_EQ(e.skipped, 2u);
  EXPECT_EQ(e.total, 5u);
  EXPECT_DOUBLE_EQ(e.fraction, 0.4);
  EXPECT_THROW(effort_saved({}), InvalidArgument);
}

TEST(Partition, AllIrBetter) {
  std::vector<PerSampleOutputs> outs;
  std::vector<Tokens> ir;
  for (int i = 0; i < 4; ++i) {
    const Tokens ref{"returns", "the", "value", "of", std::to_string(i)};
    outs.push_back({"s" + std::to_string(i), ref, ref, {"zz"}});
    ir.push_back(ref);
  }
  const auto p = partition_analysis(outs, {{"ir", ir}}, BleuConfig::epsilon_smoothed());
  EXPECT_EQ(p.ir_better.count, 4u);
  EXPECT_EQ(p.nmt_better.count, 0u);
  EXPECT_DOUBLE_EQ(*p.ir_better.bleu.at("ir"), 1.0);
  EXPECT_FALSE(p.nmt_better.bleu.at("ir").has_value());
}

TEST(Partition, TenSampleFixtureMatchesRecomputation) {
  const std::vector<Tokens> refs{
      {"returns", "the", "user", "name"},       {"closes", "the", "open", "stream"},
      {"parses", "a", "header", "line", "now"}, {"sets", "the", "value", "of", "key"},
      {"opens", "the", "file", "for", "reading"}, {"counts", "the", "rows", "in", "table"},
      {"clears", "the", "cache", "entries"},    {"builds", "a", "new", "request"},
      {"removes", "the", "listener", "from", "list"}, {"loads", "the", "config", "file"}};
  std::vector<PerSampleOutputs> outs;
  std::vector<Tokens> ir, nmt, combined;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    Tokens good = refs[i];
    Tokens half(refs[i].begin(), refs[i].begin() + 2);
    half.push_back("something");
    half.push_back("else");
    const bool ir_wins = i % 3 != 0;
    const Tokens a = ir_wins ? good : half;
    const Tokens b = ir_wins ? half : good;
    outs.push_back({"s" + std::to_string(i), refs[i], a, b});
    ir.push_back(a);
    nmt.push_back(b);
    combined.push_back(i % 2 ? a : b);
  }
  const std::map<std::string, std::vector<Tokens>> systems{{"ir", ir}, {"nmt", nmt}, {"combined", combined}};
  const auto p = partition_analysis(outs, systems, BleuConfig::epsilon_smoothed());
  EXPECT_EQ(p.ir_better.count, 6u);
  EXPECT_EQ(p.nmt_better.count, 4u);
  for (const auto& [name, cands] : systems) {
    std::vector<std::pair<Tokens, Tokens>> irs, nmts;
    for (std::size_t i = 0; i < refs.size(); ++i) (i % 3 != 0 ? irs : nmts).emplace_back(cands[i], refs[i]);
    EXPECT_NEAR(*p.ir_better.bleu.at(name), testsupport::oracle_corpus_bleu(irs), 1e-12) << name;
    EXPECT_NEAR(*p.nmt_better.bleu.at(name), testsupport::oracle_corpus_bleu(nmts), 1e-12) << name;
  }
  EXPECT_DOUBLE_EQ(*p.ir_better.bleu.at("ir"), 1.0);
  EXPECT_DOUBLE_EQ(*p.nmt_better.bleu.at("nmt"), 1.0);
}

TEST(Partition, MismatchedSystemLengthIsAnError) {
  std::vector<PerSampleOutputs> outs{{"a", {"x"}, {"x"}, {"y"}}};
  EXPECT_THROW(partition_analysis(outs, {{"ir", {}}}, {}), InvalidArgument);
}

TEST(RunExperiment, ProducesEverySystemAndDeterministicReport) {
  const auto f = make_fixture(3);
  auto g1 = testsupport::heuristic_backend();
  auto g2 = testsupport::heuristic_backend();
  const RunConfig cfg = base_config();
  const auto a = run_experiment(f.corpus, cfg, {g1.get(), nullptr});
  const auto b = run_experiment(f.corpus, cfg, {g2.get(), nullptr});
  EXPECT_EQ(report_to_json(a.report), report_to_json(b.report));
  ASSERT_EQ(a.report.systems.size(), 4u);
  EXPECT_EQ(a.report.systems[0].name, "ir");
  EXPECT_EQ(a.report.systems[3].name, "oracle");
  EXPECT_EQ(a.report.significance.size(), 6u);
  ASSERT_TRUE(a.report.partition);
  EXPECT_EQ(a.report.partition->ir_better.count + a.report.partition->nmt_better.count,
            a.report.test_size);
  ASSERT_TRUE(a.report.classifier);
  const auto& cl = *a.report.classifier;
  EXPECT_EQ(cl.tp + cl.fp + cl.tn + cl.fn, a.report.test_size);
}

TEST(RunExperiment, OracleRowDominatesSingleSystems) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto f = make_fixture(seed);
    auto gen = testsupport::heuristic_backend();
    const auto r = run_experiment(f.corpus, base_config(), {gen.get(), nullptr});
    const double oracle = r.report.system("oracle")->metrics.bleu;
    EXPECT_GE(oracle, r.report.system("ir")->metrics.bleu) << seed;
    EXPECT_GE(oracle, r.report.system("nmt")->metrics.bleu) << seed;
  }
}

TEST(RunExperiment, IrOnDuplicatedTestScoresOne) {
  std::string text;
  const std::vector<std::pair<std::string, std::string>> methods{
      {"getUserName()", "Returns the user name."},   {"closeStream(s)", "Closes the open stream."},
      {"parseHeader(h)", "Parses a single header line."}, {"openSocket(port)", "Opens a new socket."},
      {"sortItems(list)", "Sorts the items in place."}};
  for (std::size_t i = 0; i < methods.size(); ++i) {
    text += record("tr" + std::to_string(i), "a", methods[i].first, methods[i].second, "train");
    text += record("te" + std::to_string(i), "b", methods[i].first, methods[i].second, "test");
  }
  text += record("va0", "c", "hashKey(k)", "Computes the key hash.", "validation");
  const Corpus c = load_corpus_from_string(text);
  RunConfig cfg = base_config();
  cfg.systems = {"ir"};
  const auto r = run_experiment(c, cfg, {});
  EXPECT_DOUBLE_EQ(r.report.system("ir")->metrics.bleu, 1.0);
  EXPECT_FALSE(r.report.partition.has_value());
}

TEST(RunExperiment, EffortMatchesDecisionsAndGeneratorCalls) {
  const auto f = make_fixture(5);
  auto gen = testsupport::heuristic_backend();
  RunConfig cfg = base_config();
  cfg.systems = {"ir", "combined"};
  const auto r = run_experiment(f.corpus, cfg, {gen.get(), nullptr});
  ASSERT_TRUE(r.report.effort);
  std::size_t ir = 0;
  for (const auto& d : r.decisions) ir += d.choice == Choice::IR;
  EXPECT_EQ(r.report.effort->skipped, ir);
  EXPECT_EQ(r.report.effort->total, r.decisions.size());
  EXPECT_EQ(r.report.effort->generator_calls, r.decisions.size() - ir);
  EXPECT_EQ(gen->stats().generate_requests, r.decisions.size() - ir);
  EXPECT_FALSE(r.report.classifier.has_value());
}

TEST(RunExperiment, WritesPredictionsDecisionsAndReports) {
  const auto f = make_fixture(2);
  auto gen = testsupport::heuristic_backend();
  RunConfig cfg = base_config();
  cfg.output_dir = testsupport::fresh_dir("run_outputs");
  const auto r = run_experiment(f.corpus, cfg, {gen.get(), nullptr});
  for (const char* name : {"predictions_ir.jsonl", "predictions_nmt.jsonl", "predictions_combined.jsonl",
                           "predictions_oracle.jsonl", "decisions.jsonl", "report.json", "report.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / name)) << name;
  }
  const auto preds = read_predictions(cfg.output_dir / "predictions_combined.jsonl");
  ASSERT_EQ(preds.size(), r.decisions.size());
  for (std::size_t i = 0; i < preds.size(); ++i) EXPECT_EQ(preds[i].candidate, r.decisions[i].emitted_comment);
  EXPECT_EQ(testsupport::slurp(cfg.output_dir / "report.json"), report_to_json(r.report));
}

TEST(RunExperiment, RejectsBadSystemLists) {
  const auto f = make_fixture();
  RunConfig cfg = base_config();
  cfg.systems = {"ir", "ir"};
  EXPECT_THROW(run_experiment(f.corpus, cfg, {}), ConfigError);
  cfg.systems = {"magic"};
  EXPECT_THROW(run_experiment(f.corpus, cfg, {}), ConfigError);
  cfg.systems = {"nmt"};
  EXPECT_THROW(run_experiment(f.corpus, cfg, {}), InvalidArgument);
}

TEST(RunExperiment, OpensTheConfiguredSubprocessGenerator) {
  const auto f = make_fixture(6);
  RunConfig cfg = base_config();
  BackendConfig gen;
  gen.command = std::string("\"") + HYBRIDSUM_MOCK_BACKEND + "\" --generate heuristic";
  cfg.generator = gen;
  const auto viaProcess = run_experiment(f.corpus, cfg);
  auto inproc = testsupport::heuristic_backend();
  const auto direct = run_experiment(f.corpus, cfg, {inproc.get(), nullptr});
  EXPECT_EQ(report_to_json(viaProcess.report), report_to_json(direct.report));
}

TEST(PrepareCorpus, FiltersAndSplits) {
  const auto dir = testsupport::fresh_dir("prepare");
  testsupport::SyntheticOptions o;
  o.auto_generated_rate = 0.1;
  std::ofstream(dir / "c.jsonl") << testsupport::synthetic_jsonl(o);
  RunConfig cfg = base_config();
  cfg.corpus_path = dir / "c.jsonl";
  cfg.ratios = {0.7, 0.15, 0.15};
  cfg.preprocess.auto_generated_patterns = {{"auto", "generated"}};
  const Corpus c = prepare_corpus(cfg);
  EXPECT_TRUE(c.has_split());
  for (const auto& s : c.samples()) EXPECT_NE(s.comment_tokens.front(), "auto");
  cfg.filter_auto_generated = false;
  EXPECT_GT(prepare_corpus(cfg).size(), c.size());
}
