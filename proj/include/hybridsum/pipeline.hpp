#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridsum/backend.hpp"
#include "hybridsum/corpus.hpp"
#include "hybridsum/labeler.hpp"
#include "hybridsum/metrics.hpp"
#include "hybridsum/report.hpp"
#include "hybridsum/retrieval.hpp"
#include "hybridsum/router.hpp"

namespace hybridsum {

/// Backends a routing step may call. The generator is only needed when some
/// sample can be routed to NMT; the classifier only for the external router.
struct Backends {
  Backend* generator = nullptr;
  Backend* classifier = nullptr;
};

/// Retrieve, score, route and emit for a batch of samples. IR-routed samples
/// reuse the retrieved comment verbatim and never reach the generator; the
/// NMT-routed ones are sent to it in one pipelined batch.
std::vector<RoutingDecision> generate_comments(const std::vector<const Sample*>& samples,
                                               const Bm25Index& index, const RouterConfig& router,
                                               const Backends& backends);

RoutingDecision generate_comment(const Sample& sample, const Bm25Index& index,
                                 const RouterConfig& router, const Backends& backends);

struct PerSampleOutputs {
  SampleId id;
  Tokens reference;
  Tokens ir;
  Tokens nmt;
};

/// Splits samples into IR-better (bleu_ir > bleu_nmt under `cfg`) and
/// NMT-better, then recomputes corpus BLEU of every named system on each side.
PartitionReport partition_analysis(
    const std::vector<PerSampleOutputs>& outputs,
    const std::map<std::string, std::vector<Tokens>>& system_candidates, const BleuConfig& cfg,
    const BleuConfig& corpus_cfg = {});

/// skipped = number of IR choices, fraction = skipped / total.
EffortReport effort_saved(const std::vector<RoutingDecision>& decisions);

inline const std::vector<std::string>& known_systems() {
  static const std::vector<std::string> names{"ir", "nmt", "combined", "oracle"};
  return names;
}

struct RunConfig {
  std::filesystem::path corpus_path;
  PreprocessConfig preprocess;
  bool filter_auto_generated = true;
  /// Use a `split` column from the corpus file when present.
  bool reuse_split = true;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  Bm25Params bm25;
  RouterConfig router;
  LabelConfig label;
  std::optional<BackendConfig> generator;
  std::optional<BackendConfig> classifier;
  std::vector<std::string> systems = known_systems();
  MetricOptions metrics;
  std::filesystem::path output_dir;
};

struct ExperimentResult {
  EvaluationReport report;
  std::map<std::string, std::vector<Prediction>> predictions;
  std::vector<RoutingDecision> decisions;
};

/// Loads, filters and splits the corpus described by `config`.
Corpus prepare_corpus(const RunConfig& config);

/// Runs every configured system on the test split and scores them. When
/// `output_dir` is set, predictions, routing decisions and the report are
/// written there (predictions before any scoring).
ExperimentResult run_experiment(const Corpus& corpus, const RunConfig& config,
                                const Backends& backends);

/// Opens the configured backends and runs the experiment.
ExperimentResult run_experiment(const Corpus& corpus, const RunConfig& config);

}  // namespace hybridsum
