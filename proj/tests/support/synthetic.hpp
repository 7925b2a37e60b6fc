#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "hybridsum/backend.hpp"
#include "hybridsum/corpus.hpp"

namespace hybridsum::testsupport {

/// Java-like methods with template comments. Some samples are verbatim
/// clones of a sample from another project, which is what makes retrieval
/// useful; the rest share vocabulary but differ.
struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t projects = 12;
  std::size_t min_per_project = 6;
  std::size_t max_per_project = 14;
  double clone_rate = 0.3;
  /// Fraction of samples whose comment looks tool-generated.
  double auto_generated_rate = 0.0;
};

/// Raw corpus JSONL (id, project, code, comment).
std::string synthetic_jsonl(const SyntheticOptions& options);

/// Preprocessed and split by project.
Corpus synthetic_corpus(const SyntheticOptions& options,
                        const SplitRatios& ratios = {0.7, 0.15, 0.15});

/// The scripted "neural" generator: reads the verb and nouns of the method
/// name and fills the matching comment template.
Tokens heuristic_comment(const Tokens& code);

std::unique_ptr<Backend> heuristic_backend();

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

std::string slurp(const std::filesystem::path& path);

}  // namespace hybridsum::testsupport
