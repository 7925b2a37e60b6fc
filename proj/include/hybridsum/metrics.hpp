#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridsum/tokens.hpp"

namespace hybridsum {

enum class Smoothing { None, Epsilon };
enum class BleuMode { Sentence, Corpus };

struct BleuConfig {
  int max_n = 4;
  /// Empty means uniform 1/max_n.
  std::vector<double> weights;
  Smoothing smoothing = Smoothing::None;
  double epsilon = 1e-9;
  BleuMode mode = BleuMode::Sentence;

  /// Throws InvalidArgument when max_n < 1 or the weights are malformed.
  void validate() const;
  std::vector<double> resolved_weights() const;

  static BleuConfig epsilon_smoothed(double eps = 1e-9) {
    BleuConfig cfg;
    cfg.smoothing = Smoothing::Epsilon;
    cfg.epsilon = eps;
    return cfg;
  }
};

/// Smoothed-free by default. Candidates shorter than max_n use only the
/// orders they have, with the weights renormalized over those orders.
/// Throws on an empty reference; an empty candidate scores 0.
double sentence_bleu(const Tokens& candidate, const Tokens& reference, const BleuConfig& cfg = {});

struct CorpusBleu {
  double composite = 0.0;
  /// Individual BP * p_n per order (not cumulative).
  std::vector<double> per_n;
};

/// Pooled n-gram counts and a corpus-level brevity penalty. Never smooths.
CorpusBleu corpus_bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs,
                       const BleuConfig& cfg = {});

/// Mean sentence BLEU or corpus BLEU depending on `cfg.mode`.
double bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs, const BleuConfig& cfg = {});

struct MeteorConfig {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

/// Exact-match METEOR. The alignment has the maximum number of matches and,
/// among those, the fewest chunks.
double meteor(const Tokens& candidate, const Tokens& reference, const MeteorConfig& cfg = {});

/// Number of chunks of the best alignment (0 when nothing matches).
std::size_t meteor_min_chunks(const Tokens& candidate, const Tokens& reference);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// LCS F-measure with beta = P/R, as in the original formulation. Both
/// sequences must be nonempty.
double rouge_l(const Tokens& candidate, const Tokens& reference);

/// Per-sample CIDEr (one reference per candidate, orders 1..4, uniform
/// weights, document frequencies over the references).
std::vector<double> cider_per_sample(const std::vector<std::pair<Tokens, Tokens>>& pairs);
double cider(const std::vector<std::pair<Tokens, Tokens>>& pairs);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when some ratio had a zero denominator and was reported as 0.
  bool degenerate = false;
};

ClassificationMetrics classification_metrics(std::size_t tp, std::size_t fp, std::size_t tn,
                                             std::size_t fn);

struct Prediction {
  SampleId id;
  Tokens candidate;
  Tokens reference;
};

struct SampleScores {
  SampleId id;
  double bleu = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

struct MetricReport {
  double bleu = 0.0;
  std::vector<double> bleu_n;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::vector<SampleScores> per_sample;
};

struct MetricOptions {
  BleuConfig bleu;
  MeteorConfig meteor;
  bool per_sample = true;
};

/// Scores a prediction set. Corpus-level METEOR and ROUGE-L are sample
/// means; an empty candidate scores 0 on every per-sample metric.
MetricReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                  const MetricOptions& options = {});

/// JSONL with `id`, `candidate`, `reference`; token fields are space-joined
/// strings (arrays are accepted on read).
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<Prediction>& predictions, const std::filesystem::path& path);

}  // namespace hybridsum
