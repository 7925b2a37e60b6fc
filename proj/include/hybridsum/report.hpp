#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridsum/metrics.hpp"

namespace hybridsum {

struct SystemRow {
  std::string name;
  MetricReport metrics;
};

struct ClassifierRow {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  ClassificationMetrics metrics;
  double combined_bleu = 0.0;
};

struct PartitionSide {
  std::size_t count = 0;
  /// Corpus BLEU of each system restricted to this side; empty side -> nullopt.
  std::map<std::string, std::optional<double>> bleu;
};

struct PartitionReport {
  PartitionSide ir_better;
  PartitionSide nmt_better;
};

struct EffortReport {
  std::size_t skipped = 0;
  std::size_t total = 0;
  double fraction = 0.0;
  /// Generator requests issued while producing the combined system.
  std::size_t generator_calls = 0;
};

struct SignificanceRow {
  std::string system_a;
  std::string system_b;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::size_t n = 0;
  bool exact = false;
};

struct EvaluationReport {
  std::size_t test_size = 0;
  std::string router_kind;
  double threshold = 0.0;
  std::vector<SystemRow> systems;
  std::optional<ClassifierRow> classifier;
  std::optional<PartitionReport> partition;
  std::optional<EffortReport> effort;
  std::vector<SignificanceRow> significance;

  const SystemRow* system(const std::string& name) const;
};

enum class ReportFormat { Json, Csv, Text, Markdown };

ReportFormat parse_report_format(std::string_view text);

struct ReportRendering {
  ReportFormat format = ReportFormat::Text;
  /// Scales BLEU, BLEU_n, METEOR, ROUGE-L and the classifier ratios by 100
  /// in JSON and tables.
  /// CSV is always unscaled.
  bool percent = false;
};

/// Deterministic rendering. JSON and CSV carry full precision; tables round
/// to two decimals (CIDEr to three).
std::string render_report(const EvaluationReport& report, const ReportRendering& rendering);

/// Single-system table for `evaluate`.
std::string render_metric_report(const std::string& name, const MetricReport& report,
                                 const ReportRendering& rendering);

std::string report_to_json(const EvaluationReport& report, bool percent = false);
EvaluationReport report_from_json(const std::string& text);
EvaluationReport report_from_csv(const std::string& text);

}  // namespace hybridsum
