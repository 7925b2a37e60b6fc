#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hybridsum/backend.hpp"
#include "hybridsum/corpus.hpp"
#include "hybridsum/metrics.hpp"
#include "hybridsum/retrieval.hpp"

namespace hybridsum {

enum class Label { Negative = 0, Positive = 1 };
enum class Subset { Train, Dev };

std::string_view to_string(Subset subset);

struct LabelConfig {
  BleuConfig bleu;
  /// Keep results that both miss the ground truth out of the positives.
  bool exclude_both_poor = true;
  /// A result is "poor" when it hits fewer than this many distinct
  /// ground-truth words.
  std::size_t min_hits = 1;
  /// Fraction of triplets assigned to the classifier training subset.
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
};

struct SampleLabel {
  Label label = Label::Negative;
  double bleu_ir = 0.0;
  double bleu_nmt = 0.0;
};

struct Triplet {
  SampleId input_id;
  SampleId retrieved_id;
  Tokens input_code;
  Tokens retrieved_code;
  Label label = Label::Negative;
  double bleu_ir = 0.0;
  double bleu_nmt = 0.0;
  Subset subset = Subset::Train;

  bool operator==(const Triplet&) const = default;
};

/// Number of distinct ground-truth words that appear in `result`.
std::size_t ground_truth_hits(const Tokens& ground_truth, const Tokens& result);

/// Positive iff the IR result's sentence BLEU is strictly higher than the
/// generated one and the two are not both poor.
SampleLabel label_sample(const Tokens& ground_truth, const Tokens& ir_comment,
                         const Tokens& nmt_comment, const LabelConfig& cfg = {});

/// Everything the threshold sweep needs about one labelled sample.
struct LabelRecord {
  Triplet triplet;
  Tokens ir_comment;
  Tokens nmt_comment;
  Tokens reference;
};

/// Labels every validation sample: retrieve from `index`, generate with
/// `backend`, score both against the reference. Results are ordered by input
/// id; a seeded shuffle marks round(train_fraction * n) of them as train and
/// the rest as dev. Backend failures abort naming the sample.
std::vector<LabelRecord> build_label_records(const Corpus& corpus, const Bm25Index& index,
                                             Backend& backend, const LabelConfig& cfg = {},
                                             Split split = Split::Validation);

std::vector<Triplet> build_triplet_dataset(const Corpus& corpus, const Bm25Index& index,
                                           Backend& backend, const LabelConfig& cfg = {},
                                           Split split = Split::Validation);

/// JSONL: input_id, retrieved_id, input_code, retrieved_code, label (0/1),
/// bleu_ir, bleu_nmt, subset.
std::string write_triplets_to_string(const std::vector<Triplet>& triplets);
void write_triplets(const std::vector<Triplet>& triplets, const std::filesystem::path& path);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);

}  // namespace hybridsum
