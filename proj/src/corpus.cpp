#include "hybridsum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hybridsum/error.hpp"

namespace hybridsum {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  if (text == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

Corpus::Corpus(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!by_id_.emplace(samples_[i].id, i).second) {
      throw InvalidArgument("duplicate sample id '" + samples_[i].id + "'");
    }
  }
}

Split Corpus::split_of(const SampleId& id) const {
  const auto it = split_.find(id);
  if (it == split_.end()) throw InvalidArgument("sample '" + id + "' has no split assignment");
  return it->second;
}

std::vector<const Sample*> Corpus::samples_in(Split split) const {
  std::vector<const Sample*> out;
  for (const auto& [id, s] : split_) {
    if (s == split) out.push_back(&samples_[by_id_.at(id)]);
  }
  return out;  // split_ is keyed by id, so this is already id-ordered
}

const Sample* Corpus::find(const SampleId& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &samples_[it->second];
}

void Corpus::assign_split(std::map<SampleId, Split> split) {
  if (split.size() != samples_.size()) {
    throw InvalidArgument("split assignment covers " + std::to_string(split.size()) + " of " +
                          std::to_string(samples_.size()) + " samples");
  }
  std::map<std::string, Split> project_split;
  for (const auto& sample : samples_) {
    const auto it = split.find(sample.id);
    if (it == split.end()) throw InvalidArgument("sample '" + sample.id + "' has no split");
    const auto [pit, inserted] = project_split.emplace(sample.project_id, it->second);
    if (!inserted && pit->second != it->second) {
      throw InvalidArgument("project '" + sample.project_id + "' spans more than one split");
    }
  }
  split_ = std::move(split);
}

namespace {

const std::string& require_string(const json& record, const char* key, std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end()) throw FormatError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw FormatError(line, std::string("field '") + key + "' is not a string");
  return it->get_ref<const std::string&>();
}

Corpus parse_corpus(std::istream& in, const PreprocessConfig& cfg) {
  std::vector<Sample> samples;
  std::vector<std::optional<Split>> splits;
  std::set<SampleId> seen;
  DropCounts drops;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw FormatError(line, "record is not a JSON object");

    Sample sample;
    sample.id = require_string(record, "id", line);
    sample.project_id = require_string(record, "project", line);
    if (!seen.insert(sample.id).second) {
      throw FormatError(line, "duplicate id '" + sample.id + "'");
    }
    try {
      sample.code_tokens = preprocess(require_string(record, "code", line), cfg);
      sample.comment_tokens = preprocess(require_string(record, "comment", line), cfg);
    } catch (const DecodeError& e) {
      throw FormatError(line, e.what());
    }
    if (const auto ast = record.find("ast"); ast != record.end() && !ast->is_null()) {
      if (!ast->is_string()) throw FormatError(line, "field 'ast' is not a string");
      sample.ast_tokens = split_tokens(ast->get_ref<const std::string&>());
    }
    std::optional<Split> split;
    if (const auto s = record.find("split"); s != record.end()) {
      if (!s->is_string()) throw FormatError(line, "field 'split' is not a string");
      try {
        split = parse_split(s->get_ref<const std::string&>());
      } catch (const InvalidArgument& e) {
        throw FormatError(line, e.what());
      }
    }

    if (sample.comment_tokens.empty()) {
      ++drops.empty_comment;
      continue;
    }
    if (sample.code_tokens.empty()) {
      ++drops.empty_code;
      continue;
    }
    samples.push_back(std::move(sample));
    splits.push_back(split);
  }

  const auto with_split = std::count_if(splits.begin(), splits.end(),
                                        [](const auto& s) { return s.has_value(); });
  std::map<SampleId, Split> split_map;
  if (with_split > 0) {
    if (static_cast<std::size_t>(with_split) != splits.size()) {
      throw InvalidArgument("'split' field present on only some records");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) split_map.emplace(samples[i].id, *splits[i]);
  }

  Corpus corpus(std::move(samples));
  corpus.drops = drops;
  if (!split_map.empty()) corpus.assign_split(std::move(split_map));
  return corpus;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, const PreprocessConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open corpus file '" + path.string() + "'");
  return parse_corpus(in, cfg);
}

Corpus load_corpus_from_string(const std::string& text, const PreprocessConfig& cfg) {
  std::istringstream in(text);
  return parse_corpus(in, cfg);
}

std::string write_corpus_to_string(const Corpus& corpus) {
  std::string out;
  for (const auto& sample : corpus.samples()) {
    ordered_json record;
    record["id"] = sample.id;
    record["project"] = sample.project_id;
    record["code"] = join_tokens(sample.code_tokens);
    if (sample.ast_tokens) record["ast"] = join_tokens(*sample.ast_tokens);
    record["comment"] = join_tokens(sample.comment_tokens);
    if (corpus.has_split()) record["split"] = to_string(corpus.split_of(sample.id));
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write corpus file '" + path.string() + "'");
  out << write_corpus_to_string(corpus);
}

bool contains_subsequence(const Tokens& haystack, const Tokens& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

Corpus filter_auto_generated(const Corpus& corpus, const PreprocessConfig& cfg) {
  std::vector<Sample> kept;
  std::map<SampleId, Split> split;
  std::size_t removed = 0;
  for (const auto& sample : corpus.samples()) {
    const bool generated = std::any_of(
        cfg.auto_generated_patterns.begin(), cfg.auto_generated_patterns.end(),
        [&](const Tokens& pattern) { return contains_subsequence(sample.comment_tokens, pattern); });
    if (generated) {
      ++removed;
      continue;
    }
    if (corpus.has_split()) split.emplace(sample.id, corpus.split_of(sample.id));
    kept.push_back(sample);
  }
  Corpus out(std::move(kept));
  out.drops = corpus.drops;
  out.drops.auto_generated += removed;
  if (!split.empty()) out.assign_split(std::move(split));
  return out;
}

Corpus split_by_project(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> target_ratio{ratios.train, ratios.validation, ratios.test};
  for (double r : target_ratio) {
    if (!(r > 0.0)) throw InvalidArgument("split ratios must be positive");
  }
  if (std::abs(target_ratio[0] + target_ratio[1] + target_ratio[2] - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }

  std::map<std::string, std::size_t> project_sizes;
  for (const auto& sample : corpus.samples()) ++project_sizes[sample.project_id];
  if (project_sizes.size() < 3) {
    throw InvalidArgument("need at least 3 projects to split, got " +
                          std::to_string(project_sizes.size()));
  }

  std::vector<std::pair<std::string, std::size_t>> order(project_sizes.begin(),
                                                         project_sizes.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const auto total = static_cast<double>(corpus.size());
  std::array<double, 3> assigned{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> project_count{0, 0, 0};
  std::map<std::string, Split> project_split;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t remaining = order.size() - k;
    std::size_t empty = 0;
    for (auto c : project_count) empty += (c == 0);

    std::size_t best = 3;
    double best_deficit = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      if (remaining <= empty && project_count[s] != 0) continue;
      const double deficit = target_ratio[s] * total - assigned[s];
      if (best == 3 || deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    assigned[best] += static_cast<double>(order[k].second);
    ++project_count[best];
    project_split.emplace(order[k].first, static_cast<Split>(best));
  }

  std::map<SampleId, Split> split;
  for (const auto& sample : corpus.samples()) {
    split.emplace(sample.id, project_split.at(sample.project_id));
  }
  Corpus out = corpus;
  out.assign_split(std::move(split));
  return out;
}

}  // namespace hybridsum
