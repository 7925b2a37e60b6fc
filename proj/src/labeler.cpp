#include "hybridsum/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hybridsum/error.hpp"

namespace hybridsum {

std::string_view to_string(Subset subset) { return subset == Subset::Train ? "train" : "dev"; }

std::size_t ground_truth_hits(const Tokens& ground_truth, const Tokens& result) {
  const std::set<Token> truth(ground_truth.begin(), ground_truth.end());
  const std::set<Token> got(result.begin(), result.end());
  std::size_t hits = 0;
  for (const auto& t : got) hits += truth.count(t);
  return hits;
}

SampleLabel label_sample(const Tokens& ground_truth, const Tokens& ir_comment,
                         const Tokens& nmt_comment, const LabelConfig& cfg) {
  if (ground_truth.empty()) throw InvalidArgument("label_sample: empty ground truth");
  SampleLabel out;
  out.bleu_ir = sentence_bleu(ir_comment, ground_truth, cfg.bleu);
  out.bleu_nmt = sentence_bleu(nmt_comment, ground_truth, cfg.bleu);
  const bool both_poor = cfg.exclude_both_poor &&
                         ground_truth_hits(ground_truth, ir_comment) < cfg.min_hits &&
                         ground_truth_hits(ground_truth, nmt_comment) < cfg.min_hits;
  out.label = (out.bleu_ir > out.bleu_nmt && !both_poor) ? Label::Positive : Label::Negative;
  return out;
}

std::vector<LabelRecord> build_label_records(const Corpus& corpus, const Bm25Index& index,
                                             Backend& backend, const LabelConfig& cfg,
                                             Split split) {
  if (!(cfg.train_fraction >= 0.0 && cfg.train_fraction <= 1.0)) {
    throw InvalidArgument("train_fraction must lie in [0, 1]");
  }
  const auto samples = corpus.samples_in(split);
  std::vector<GenerateRequest> requests;
  std::vector<RetrievalResult> retrieved;
  for (const Sample* s : samples) {
    retrieved.push_back(index.retrieve_top1(*s));
    requests.push_back({s->id, s->code_tokens, s->ast_tokens});
  }
  const auto generated = backend.generate(requests);

  std::vector<LabelRecord> records;
  records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    const auto lab = label_sample(s.comment_tokens, retrieved[i].retrieved_comment, generated[i], cfg);
    LabelRecord r;
    r.triplet = {s.id,          retrieved[i].retrieved_id, s.code_tokens, retrieved[i].retrieved_code,
                 lab.label,     lab.bleu_ir,               lab.bleu_nmt,  Subset::Dev};
    r.ir_comment = retrieved[i].retrieved_comment;
    r.nmt_comment = generated[i];
    r.reference = s.comment_tokens;
    records.push_back(std::move(r));
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(cfg.train_fraction * static_cast<double>(records.size())));
  for (std::size_t k = 0; k < n_train; ++k) records[order[k]].triplet.subset = Subset::Train;
  return records;
}

std::vector<Triplet> build_triplet_dataset(const Corpus& corpus, const Bm25Index& index,
                                           Backend& backend, const LabelConfig& cfg, Split split) {
  std::vector<Triplet> out;
  for (auto& r : build_label_records(corpus, index, backend, cfg, split)) {
    out.push_back(std::move(r.triplet));
  }
  return out;
}

std::string write_triplets_to_string(const std::vector<Triplet>& triplets) {
  std::string out;
  for (const auto& t : triplets) {
    nlohmann::ordered_json j;
    j["input_id"] = t.input_id;
    j["retrieved_id"] = t.retrieved_id;
    j["input_code"] = join_tokens(t.input_code);
    j["retrieved_code"] = join_tokens(t.retrieved_code);
    j["label"] = static_cast<int>(t.label);
    j["bleu_ir"] = t.bleu_ir;
    j["bleu_nmt"] = t.bleu_nmt;
    j["subset"] = to_string(t.subset);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void write_triplets(const std::vector<Triplet>& triplets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write triplet file '" + path.string() + "'");
  out << write_triplets_to_string(triplets);
}

std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open triplet file '" + path.string() + "'");
  std::vector<Triplet> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      Triplet t;
      t.input_id = j.at("input_id").get<std::string>();
      t.retrieved_id = j.at("retrieved_id").get<std::string>();
      t.input_code = split_tokens(j.at("input_code").get<std::string>());
      t.retrieved_code = split_tokens(j.at("retrieved_code").get<std::string>());
      const int label = j.at("label").get<int>();
      if (label != 0 && label != 1) throw FormatError(line, "label must be 0 or 1");
      t.label = static_cast<Label>(label);
      t.bleu_ir = j.at("bleu_ir").get<double>();
      t.bleu_nmt = j.at("bleu_nmt").get<double>();
      const auto subset = j.at("subset").get<std::string>();
      if (subset != "train" && subset != "dev") throw FormatError(line, "subset must be train or dev");
      t.subset = subset == "train" ? Subset::Train : Subset::Dev;
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(line, e.what());
    }
  }
  return out;
}

}  // namespace hybridsum
