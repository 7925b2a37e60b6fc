#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hybridsum/preprocess.hpp"
#include "hybridsum/tokens.hpp"

namespace hybridsum {

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Sample {
  SampleId id;
  std::string project_id;
  Tokens code_tokens;
  std::optional<Tokens> ast_tokens;
  Tokens comment_tokens;

  bool operator==(const Sample&) const = default;
};

/// Counts of records rejected while building a corpus.
struct DropCounts {
  std::size_t empty_comment = 0;
  std::size_t empty_code = 0;
  std::size_t auto_generated = 0;
};

/// Ordered samples plus an optional split assignment. When `split` is
/// non-empty it covers every sample and never spreads one project over two
/// splits.
class Corpus {
public:
  Corpus() = default;
  explicit Corpus(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  bool has_split() const noexcept { return !split_.empty(); }
  const std::map<SampleId, Split>& split_map() const noexcept { return split_; }
  Split split_of(const SampleId& id) const;

  /// Samples of one split, sorted by id.
  std::vector<const Sample*> samples_in(Split split) const;
  const Sample* find(const SampleId& id) const;

  /// Replaces the split assignment after checking totality and project purity.
  void assign_split(std::map<SampleId, Split> split);

  DropCounts drops;

private:
  std::vector<Sample> samples_;
  std::map<SampleId, Split> split_;
  std::map<SampleId, std::size_t> by_id_;
};

struct SplitRatios {
  double train = 0.9;
  double validation = 0.05;
  double test = 0.05;
};

/// Reads the JSONL corpus format. Records whose comment or code preprocess to
/// nothing are dropped and counted in `Corpus::drops`. A `split` field, when
/// present on every record, is kept; a partial split column is an error.
Corpus load_corpus(const std::filesystem::path& path, const PreprocessConfig& cfg = {});
Corpus load_corpus_from_string(const std::string& text, const PreprocessConfig& cfg = {});

/// Writes the JSONL corpus format with tokens space-joined and, if assigned,
/// a `split` field.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string write_corpus_to_string(const Corpus& corpus);

/// Drops samples whose comment contains a configured pattern as a contiguous
/// subsequence. Split assignments of kept samples are preserved.
Corpus filter_auto_generated(const Corpus& corpus, const PreprocessConfig& cfg = {});

bool contains_subsequence(const Tokens& haystack, const Tokens& needle);

/// Assigns whole projects to train/validation/test.
///
/// Projects are ordered by descending sample count; equal-sized projects are
/// ordered by a permutation drawn from `seed`. Each project then goes to the
/// split furthest below its target sample count, except that the last
/// projects are reserved for any split still empty. Requires at least three
/// projects and positive ratios summing to one.
Corpus split_by_project(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace hybridsum
