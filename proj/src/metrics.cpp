#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include "json.hpp"

#include "hybridsum/error.hpp"
#include "hybridsum/metrics.hpp"

namespace hybridsum {
namespace {

// Branch-and-bound search for the maximum-match alignment with the most
// "links" (adjacent candidate positions aligned to adjacent reference
// positions). chunks = matches - links.
class ChunkMinimizer {
public:
  ChunkMinimizer(const Tokens& cand, const Tokens& ref) : cand_(cand), ref_(ref) {
    std::map<Token, std::size_t> cc, rc;
    for (const auto& t : cand) ++cc[t];
    for (const auto& t : ref) ++rc[t];
    for (const auto& [t, c] : cc) {
      const auto it = rc.find(t);
      const std::size_t need = it == rc.end() ? 0 : std::min(c, it->second);
      need_[t] = need;
      matches_ += need;
    }
    for (std::size_t j = 0; j < ref.size(); ++j) positions_[ref[j]].push_back(j);
    // remaining_[i][word] is computed on the fly from suffix counts
    suffix_.assign(cand.size() + 1, {});
    for (std::size_t i = cand.size(); i-- > 0;) {
      suffix_[i] = suffix_[i + 1];
      ++suffix_[i][cand[i]];
    }
    used_.assign(ref.size(), false);
  }

  std::size_t matches() const { return matches_; }

  std::size_t min_chunks() {
    if (matches_ == 0) return 0;
    best_links_ = greedy_links();
    auto need = need_;
    search(0, kNone, 0, matches_, need);
    return matches_ - best_links_;
  }

private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kBudget = 2'000'000;

  std::size_t greedy_links() {
    auto need = need_;
    std::vector<bool> used(ref_.size(), false);
    std::size_t prev = kNone;
    std::size_t links = 0;
    for (const auto& word : cand_) {
      std::size_t& n = need[word];
      if (n == 0) {
        prev = kNone;
        continue;
      }
      std::size_t pick = kNone;
      if (prev != kNone && prev + 1 < ref_.size() && !used[prev + 1] && ref_[prev + 1] == word) {
        pick = prev + 1;
        ++links;
      } else {
        for (std::size_t j : positions_.at(word)) {
          if (!used[j]) {
            pick = j;
            break;
          }
        }
      }
      used[pick] = true;
      --n;
      prev = pick;
    }
    return links;
  }

  void search(std::size_t i, std::size_t prev, std::size_t links, std::size_t need_total,
              std::map<Token, std::size_t>& need) {
    if (++nodes_ > kBudget) return;
    if (i == cand_.size()) {
      if (need_total == 0) best_links_ = std::max(best_links_, links);
      return;
    }
    if (links + std::min(cand_.size() - i, need_total) <= best_links_) return;

    const Token& word = cand_[i];
    std::size_t& n = need[word];
    if (n > 0) {
      // Adjacent reference position first: it is the only choice that adds a link.
      if (prev != kNone && prev + 1 < ref_.size() && !used_[prev + 1] && ref_[prev + 1] == word) {
        take(i, prev + 1, links + 1, need_total, need, n);
      }
      for (std::size_t j : positions_.at(word)) {
        if (used_[j] || (prev != kNone && j == prev + 1)) continue;
        take(i, j, links, need_total, need, n);
      }
    }
    // Skipping is only allowed while later occurrences can still cover the need.
    if (suffix_[i + 1].count(word) ? suffix_[i + 1].at(word) >= n : n == 0) {
      search(i + 1, kNone, links, need_total, need);
    }
  }

  void take(std::size_t i, std::size_t j, std::size_t links, std::size_t need_total,
            std::map<Token, std::size_t>& need, std::size_t& n) {
    used_[j] = true;
    --n;
    search(i + 1, j, links, need_total - 1, need);
    ++n;
    used_[j] = false;
  }

  const Tokens& cand_;
  const Tokens& ref_;
  std::map<Token, std::size_t> need_;
  std::map<Token, std::vector<std::size_t>> positions_;
  std::vector<std::map<Token, std::size_t>> suffix_;
  std::vector<bool> used_;
  std::size_t matches_ = 0;
  std::size_t best_links_ = 0;
  std::size_t nodes_ = 0;
};

using NgramVector = std::unordered_map<std::string, double>;

std::unordered_map<std::string, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

Tokens read_token_field(const nlohmann::json& record, const char* key, std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end()) throw FormatError(line, std::string("missing field '") + key + "'");
  if (it->is_string()) {
    Tokens out;
    std::string word;
    for (char c : it->get_ref<const std::string&>()) {
      if (c == ' ' || c == '\t') {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
      } else {
        word.push_back(c);
      }
    }
    if (!word.empty()) out.push_back(std::move(word));
    return out;
  }
  if (it->is_array()) {
    try {
      return it->get<Tokens>();
    } catch (const nlohmann::json::exception&) {
    }
  }
  throw FormatError(line, std::string("field '") + key + "' must be a string or string array");
}

}  // namespace

std::size_t meteor_min_chunks(const Tokens& candidate, const Tokens& reference) {
  ChunkMinimizer search(candidate, reference);
  return search.min_chunks();
}

double meteor(const Tokens& candidate, const Tokens& reference, const MeteorConfig& cfg) {
  if (reference.empty()) throw InvalidArgument("meteor: empty reference");
  if (candidate.empty()) return 0.0;
  ChunkMinimizer search(candidate, reference);
  const std::size_t m = search.matches();
  if (m == 0) return 0.0;
  const std::size_t chunks = search.min_chunks();
  const double md = static_cast<double>(m);
  const double precision = md / static_cast<double>(candidate.size());
  const double recall = md / static_cast<double>(reference.size());
  const double f_mean =
      precision * recall / (cfg.alpha * precision + (1.0 - cfg.alpha) * recall);
  const double frag = static_cast<double>(chunks) / md;
  return (1.0 - cfg.gamma * std::pow(frag, cfg.beta)) * f_mean;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) {
    throw InvalidArgument("rouge_l: candidate and reference must be nonempty");
  }
  const auto lcs = static_cast<double>(lcs_length(reference, candidate));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double beta = p / r;
  const double beta2 = beta * beta;
  return (1.0 + beta2) * p * r / (r + beta2 * p);
}

std::vector<double> cider_per_sample(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("cider: empty pair list");
  constexpr std::size_t kOrders = 4;
  const double log_docs = std::log(static_cast<double>(pairs.size()));
  std::vector<double> scores(pairs.size(), 0.0);
  for (std::size_t n = 1; n <= kOrders; ++n) {
    std::unordered_map<std::string, std::size_t> df;
    std::vector<std::unordered_map<std::string, std::size_t>> ref_counts;
    ref_counts.reserve(pairs.size());
    for (const auto& [cand, ref] : pairs) {
      ref_counts.push_back(ngram_counts(ref, n));
      for (const auto& [gram, count] : ref_counts.back()) ++df[gram];
    }
    auto weigh = [&](const std::unordered_map<std::string, std::size_t>& counts) {
      NgramVector v;
      for (const auto& [gram, tf] : counts) {
        const auto it = df.find(gram);
        const double d = it == df.end() ? 1.0 : static_cast<double>(it->second);
        v.emplace(gram, static_cast<double>(tf) * (log_docs - std::log(d)));
      }
      return v;
    };
    auto norm = [](const NgramVector& v) {
      // Fixed summation order keeps results independent of hash layout.
      std::vector<double> sq;
      sq.reserve(v.size());
      for (const auto& [g, w] : v) sq.push_back(w * w);
      std::sort(sq.begin(), sq.end());
      double total = 0.0;
      for (double x : sq) total += x;
      return std::sqrt(total);
    };
    for (std::size_t s = 0; s < pairs.size(); ++s) {
      const auto vc = weigh(ngram_counts(pairs[s].first, n));
      const auto vr = weigh(ref_counts[s]);
      std::vector<double> products;
      for (const auto& [gram, w] : vc) {
        const auto it = vr.find(gram);
        if (it != vr.end()) products.push_back(w * it->second);
      }
      std::sort(products.begin(), products.end());
      double dot = 0.0;
      for (double x : products) dot += x;
      const double nc = norm(vc);
      const double nr = norm(vr);
      const double cosine = (nc > 0.0 && nr > 0.0) ? dot / (nc * nr) : 0.0;
      scores[s] += cosine / static_cast<double>(kOrders);
    }
  }
  return scores;
}

double cider(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  const auto scores = cider_per_sample(pairs);
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

ClassificationMetrics classification_metrics(std::size_t tp, std::size_t fp, std::size_t tn,
                                             std::size_t fn) {
  const std::size_t total = tp + fp + tn + fn;
  if (total == 0) throw InvalidArgument("classification_metrics: all counts are zero");
  ClassificationMetrics m;
  auto ratio = [&m](std::size_t num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(tp + tn, total);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
    m.f1 = 0.0;
  }
  return m;
}

MetricReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                  const MetricOptions& options) {
  if (predictions.empty()) throw InvalidArgument("no predictions to evaluate");
  std::vector<std::pair<Tokens, Tokens>> pairs;
  pairs.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (p.reference.empty()) throw InvalidArgument("prediction '" + p.id + "' has an empty reference");
    pairs.emplace_back(p.candidate, p.reference);
  }

  MetricReport report;
  const auto corpus = corpus_bleu(pairs, options.bleu);
  report.bleu = corpus.composite;
  report.bleu_n = corpus.per_n;
  const auto cider_scores = cider_per_sample(pairs);

  double meteor_total = 0.0;
  double rouge_total = 0.0;
  double cider_total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    SampleScores s;
    s.id = p.id;
    s.bleu = sentence_bleu(p.candidate, p.reference, options.bleu);
    s.meteor = meteor(p.candidate, p.reference, options.meteor);
    s.rouge_l = p.candidate.empty() ? 0.0 : rouge_l(p.candidate, p.reference);
    s.cider = cider_scores[i];
    meteor_total += s.meteor;
    rouge_total += s.rouge_l;
    cider_total += s.cider;
    if (options.per_sample) report.per_sample.push_back(std::move(s));
  }
  const auto n = static_cast<double>(predictions.size());
  report.meteor = meteor_total / n;
  report.rouge_l = rouge_total / n;
  report.cider = cider_total / n;
  return report;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open predictions file '" + path.string() + "'");
  std::vector<Prediction> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw FormatError(line, "record is not a JSON object");
    const auto id = record.find("id");
    if (id == record.end() || !id->is_string()) throw FormatError(line, "missing string field 'id'");
    Prediction p{id->get<std::string>(), read_token_field(record, "candidate", line),
                 read_token_field(record, "reference", line)};
    if (p.reference.empty()) throw FormatError(line, "empty reference");
    out.push_back(std::move(p));
  }
  return out;
}

void write_predictions(const std::vector<Prediction>& predictions,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write predictions file '" + path.string() + "'");
  for (const auto& p : predictions) {
    nlohmann::ordered_json record;
    record["id"] = p.id;
    record["candidate"] = join_tokens(p.candidate);
    record["reference"] = join_tokens(p.reference);
    out << record.dump() << '\n';
  }
}

}  // namespace hybridsum
