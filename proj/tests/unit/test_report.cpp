#include <gtest/gtest.h>

#include "hybridsum/error.hpp"
#include "hybridsum/pipeline.hpp"
#include "hybridsum/report.hpp"
#include "synthetic.hpp"

using namespace hybridsum;

namespace {

EvaluationReport small_report() {
  EvaluationReport r;
  r.test_size = 10;
  r.router_kind = "lexical";
  r.threshold = 0.4;
  MetricReport ir;
  ir.bleu = 0.31234567890123;
  ir.bleu_n = {0.5, 0.4, 0.3, 0.2};
  ir.meteor = 0.25;
  ir.rouge_l = 0.45;
  ir.cider = 1.234;
  MetricReport nmt = ir;
  nmt.bleu = 0.1;
  r.systems = {{"ir", ir}, {"nmt", nmt}};
  ClassifierRow c;
  c.tp = 3;
  c.fp = 1;
  c.tn = 5;
  c.fn = 1;
  c.metrics = classification_metrics(3, 1, 5, 1);
  c.combined_bleu = 0.33;
  r.classifier = c;
  PartitionReport p;
  p.ir_better.count = 4;
  p.ir_better.bleu = {{"ir", 0.9}, {"nmt", 0.05}};
  p.nmt_better.count = 6;
  p.nmt_better.bleu = {{"ir", std::nullopt}, {"nmt", 0.6}};
  r.partition = p;
  r.effort = EffortReport{4, 10, 0.4, 6};
  r.significance = {{"ir", "nmt", 3.0, 0.0234, 8, true}, {"ir", "combined", std::nullopt, std::nullopt, 0, false}};
  return r;
}

EvaluationReport pipeline_report() {
  testsupport::SyntheticOptions o;
  o.seed = 9;
  const Corpus c = testsupport::synthetic_corpus(o);
  auto gen = testsupport::heuristic_backend();
  RunConfig cfg;
  return run_experiment(c, cfg, {gen.get(), nullptr}).report;
}

}  // namespace

TEST(Report, RenderingIsDeterministic) {
  const auto r = pipeline_report();
  for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Text, ReportFormat::Markdown}) {
    EXPECT_EQ(render_report(r, {f, false}), render_report(r, {f, false}));
    EXPECT_EQ(render_report(r, {f, true}), render_report(pipeline_report(), {f, true}));
  }
}

TEST(Report, UnscaledBleuLiesInUnitInterval) {
  const auto r = pipeline_report();
  for (const auto& s : r.systems) {
    EXPECT_GE(s.metrics.bleu, 0.0);
    EXPECT_LE(s.metrics.bleu, 1.0);
  }
  const auto back = report_from_json(report_to_json(r, false));
  for (const auto& s : back.systems) EXPECT_LE(s.metrics.bleu, 1.0);
}

TEST(Report, PartitionCountsSumToTestSize) {
  const auto r = pipeline_report();
  ASSERT_TRUE(r.partition);
  EXPECT_EQ(r.partition->ir_better.count + r.partition->nmt_better.count, r.test_size);
}

TEST(Report, CsvRoundTripIsIdentical) {
  for (const auto& r : {small_report(), pipeline_report()}) {
    const std::string csv = render_report(r, {ReportFormat::Csv, false});
    EXPECT_EQ(csv.rfind("section,key,field,value\n", 0), 0u);
    EXPECT_EQ(render_report(report_from_csv(csv), {ReportFormat::Csv, false}), csv);
    // CSV ignores percent scaling.
    EXPECT_EQ(render_report(r, {ReportFormat::Csv, true}), csv);
  }
}

TEST(Report, JsonRoundTripIsIdentical) {
  for (const auto& r : {small_report(), pipeline_report()}) {
    const std::string json = report_to_json(r);
    EXPECT_EQ(report_to_json(report_from_json(json)), json);
  }
}

TEST(Report, PercentJsonScalesBleuButNotCider) {
  const auto r = small_report();
  const auto back = report_from_json(report_to_json(r, true));
  EXPECT_NEAR(back.systems[0].metrics.bleu, r.systems[0].metrics.bleu, 1e-15);
  EXPECT_DOUBLE_EQ(back.systems[0].metrics.cider, 1.234);
  const std::string json = report_to_json(r, true);
  EXPECT_NE(json.find("\"bleu\": 31.23"), std::string::npos);
  EXPECT_NE(json.find("\"cider\": 1.234"), std::string::npos);
}

TEST(Report, TextTableColumnOrder) {
  const std::string text = render_report(small_report(), {ReportFormat::Text, true});
  const auto header = text.find("\nSystem ") + 1;
  ASSERT_NE(header, 0u) << text;
  const std::string line = text.substr(header, text.find('\n', header) - header);
  std::size_t pos = 0;
  for (const char* col : {"BLEU", "BLEU1", "BLEU2", "BLEU3", "BLEU4", "METEOR", "ROUGE-L", "CIDEr"}) {
    const auto at = line.find(col, pos);
    ASSERT_NE(at, std::string::npos) << col;
    pos = at + 1;
  }
  EXPECT_NE(text.find("31.23"), std::string::npos);
  EXPECT_NE(text.find("1.234"), std::string::npos);
  EXPECT_EQ(render_report(small_report(), {ReportFormat::Text, false}).find("31.23"), std::string::npos);
}

TEST(Report, MarkdownHasOneTablePerSection) {
  const std::string md = render_report(small_report(), {ReportFormat::Markdown, false});
  std::size_t sections = 0;
  for (auto pos = md.find("### "); pos != std::string::npos; pos = md.find("### ", pos + 1)) ++sections;
  EXPECT_EQ(sections, 5u);
  EXPECT_NE(md.find("| System |"), std::string::npos);
  EXPECT_NE(md.find("---:"), std::string::npos);
}

TEST(Report, OptionalSectionsAreOmitted) {
  EvaluationReport r = small_report();
  r.classifier.reset();
  r.partition.reset();
  r.effort.reset();
  r.significance.clear();
  const std::string text = render_report(r, {ReportFormat::Text, false});
  EXPECT_EQ(text.find("Classifier"), std::string::npos);
  EXPECT_EQ(text.find("Partition"), std::string::npos);
  const auto json = report_from_json(report_to_json(r));
  EXPECT_FALSE(json.classifier.has_value());
  EXPECT_FALSE(json.partition.has_value());
}

TEST(Report, CsvParserRejectsGarbage) {
  EXPECT_THROW(report_from_csv("a,b,c,d\n"), FormatError);
  EXPECT_THROW(report_from_csv("section,key,field,value\nsystem,ir\n"), FormatError);
  try {
    report_from_csv("section,key,field,value\nsystem,ir,bleu,0.5\nbogus,x,y,1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Report, FormatNames) {
  EXPECT_EQ(parse_report_format("json"), ReportFormat::Json);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
  EXPECT_THROW(parse_report_format("xml"), InvalidArgument);
}

TEST(Report, SingleSystemRendering) {
  MetricReport m = small_report().systems[0].metrics;
  m.per_sample = {{"s1", 1.0, 0.9995, 1.0, 10.0}};
  const auto json = render_metric_report("ir", m, {ReportFormat::Json, true});
  EXPECT_NE(json.find("\"per_sample\""), std::string::npos);
  EXPECT_NE(json.find("\"bleu\": 100.0"), std::string::npos);
  const auto text = render_metric_report("ir", m, {ReportFormat::Text, false});
  EXPECT_NE(text.find("0.31"), std::string::npos);
}
