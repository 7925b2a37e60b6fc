#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hybridsum/backend.hpp"
#include "hybridsum/metrics.hpp"

namespace hybridsum {

enum class RouterKind { Lexical, External, Oracle, AlwaysIr, AlwaysNmt };
enum class Choice { IR, NMT };

std::string_view to_string(RouterKind kind);
RouterKind parse_router_kind(std::string_view text);
std::string_view to_string(Choice choice);

inline constexpr double kDefaultThreshold = 0.40;

struct RouterConfig {
  RouterKind kind = RouterKind::Lexical;
  /// score >= threshold routes to IR.
  double threshold = kDefaultThreshold;
  /// Similarity metric of the lexical router.
  BleuConfig lexical_bleu;
  /// Per-sample comparison used by the oracle router and the partition
  /// analysis. Smoothed so that candidates which both miss a higher-order
  /// n-gram are still ordered by their lower-order matches.
  BleuConfig oracle_bleu = BleuConfig::epsilon_smoothed();

  void validate() const;
};

struct RoutingDecision {
  SampleId sample_id;
  double score = 0.0;
  Choice choice = Choice::NMT;
  Tokens emitted_comment;
};

/// Sentence BLEU of the input code against the retrieved code as reference;
/// 0 when the retrieved code is empty.
double lexical_score(const Tokens& input_code, const Tokens& retrieved_code,
                     const BleuConfig& cfg = {});

/// IR iff score >= threshold. Both must lie in [0, 1].
Choice route(double score, double threshold);

/// IR iff bleu_ir > bleu_nmt; ties go to NMT.
Choice oracle_route(double bleu_ir, double bleu_nmt);

struct ExternalScore {
  double score = 0.0;
  bool clamped = false;
};

/// Clamps a backend score into [0, 1], logging a warning when it had to.
ExternalScore clamp_score(const std::string& request_id, double raw);

/// Scores (input, retrieved) pairs through a classifier backend.
std::vector<ExternalScore> classify_external(Backend& backend,
                                             std::span<const ClassifyRequest> requests);
ExternalScore classify_external(Backend& backend, const std::string& request_id,
                                const Tokens& input_code, const Tokens& retrieved_code);

struct SweepSample {
  double score = 0.0;
  Tokens ir_comment;
  Tokens nmt_comment;
  Tokens reference;
};

struct SweepPoint {
  double threshold = 0.0;
  double bleu = 0.0;
};

struct SweepResult {
  double best_threshold = 0.0;
  double best_bleu = 0.0;
  std::vector<SweepPoint> curve;
};

/// start, start + step, ..., end (inclusive), computed without accumulating
/// rounding error.
std::vector<double> threshold_grid(double start = 0.0, double end = 1.0, double step = 0.05);

/// Corpus BLEU of the routed outputs at every grid threshold. The best is the
/// highest BLEU, ties to the smallest threshold.
SweepResult sweep_threshold(const std::vector<SweepSample>& samples, const BleuConfig& cfg = {},
                            const std::vector<double>& grid = threshold_grid());

std::string sweep_to_csv(const SweepResult& result);

/// JSONL with `id`, `score`, `ir`, `nmt`, `reference` (token fields
/// space-joined). Scores outside [0, 1] are rejected.
std::string write_sweep_samples_to_string(const std::vector<std::pair<SampleId, SweepSample>>& samples);
std::vector<SweepSample> read_sweep_samples(const std::filesystem::path& path);

}  // namespace hybridsum
