#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "hybridsum/error.hpp"
#include "hybridsum/metrics.hpp"

namespace hybridsum {
namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
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

std::size_t clipped_matches(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  std::size_t matches = 0;
  for (const auto& [gram, count] : cand) {
    const auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

double brevity_penalty(double cand_len, double ref_len) {
  return cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
}

// Weights of the first `orders` orders, rescaled to sum to one.
std::vector<double> truncated_weights(const BleuConfig& cfg, std::size_t orders) {
  auto w = cfg.resolved_weights();
  w.resize(orders);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x = total > 0.0 ? x / total : 0.0;
  return w;
}

}  // namespace

void BleuConfig::validate() const {
  if (max_n < 1) throw InvalidArgument("BLEU max_n must be >= 1");
  if (!weights.empty()) {
    if (weights.size() != static_cast<std::size_t>(max_n)) {
      throw InvalidArgument("BLEU weights must have max_n entries");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvalidArgument("BLEU weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("BLEU weights must sum to 1");
  }
  if (smoothing == Smoothing::Epsilon && !(epsilon > 0.0)) {
    throw InvalidArgument("BLEU epsilon must be positive");
  }
}

std::vector<double> BleuConfig::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(static_cast<std::size_t>(max_n), 1.0 / max_n);
}

double sentence_bleu(const Tokens& candidate, const Tokens& reference, const BleuConfig& cfg) {
  cfg.validate();
  if (reference.empty()) throw InvalidArgument("sentence_bleu: empty reference");
  if (candidate.empty()) return 0.0;

  const std::size_t orders = std::min<std::size_t>(cfg.max_n, candidate.size());
  const auto w = truncated_weights(cfg, orders);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    if (w[n - 1] == 0.0) continue;
    const auto total = static_cast<double>(candidate.size() - n + 1);
    const std::size_t matches = clipped_matches(candidate, reference, n);
    double p;
    if (matches == 0) {
      if (cfg.smoothing == Smoothing::None) return 0.0;
      p = cfg.epsilon / total;
    } else {
      p = static_cast<double>(matches) / total;
    }
    log_sum += w[n - 1] * std::log(p);
  }
  const double bp = brevity_penalty(static_cast<double>(candidate.size()),
                                    static_cast<double>(reference.size()));
  return bp * std::exp(log_sum);
}

CorpusBleu corpus_bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs, const BleuConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw InvalidArgument("corpus_bleu: empty pair list");
  const auto max_n = static_cast<std::size_t>(cfg.max_n);
  std::vector<std::size_t> matches(max_n, 0);
  std::vector<std::size_t> totals(max_n, 0);
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (const auto& [cand, ref] : pairs) {
    if (ref.empty()) throw InvalidArgument("corpus_bleu: empty reference");
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      if (cand.size() < n) break;
      matches[n - 1] += clipped_matches(cand, ref, n);
      totals[n - 1] += cand.size() - n + 1;
    }
  }

  CorpusBleu out;
  out.per_n.assign(max_n, 0.0);
  if (cand_len == 0) return out;
  const double bp = brevity_penalty(static_cast<double>(cand_len), static_cast<double>(ref_len));

  std::size_t orders = 0;
  while (orders < max_n && totals[orders] > 0) ++orders;
  const auto w = truncated_weights(cfg, orders);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= orders; ++n) {
    const double p = static_cast<double>(matches[n - 1]) / static_cast<double>(totals[n - 1]);
    out.per_n[n - 1] = bp * p;
    if (w[n - 1] == 0.0) continue;
    if (matches[n - 1] == 0) {
      zero = true;
      continue;
    }
    log_sum += w[n - 1] * std::log(p);
  }
  out.composite = zero ? 0.0 : bp * std::exp(log_sum);
  return out;
}

double bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs, const BleuConfig& cfg) {
  if (cfg.mode == BleuMode::Corpus) return corpus_bleu(pairs, cfg).composite;
  if (pairs.empty()) throw InvalidArgument("bleu: empty pair list");
  double total = 0.0;
  for (const auto& [cand, ref] : pairs) total += sentence_bleu(cand, ref, cfg);
  return total / static_cast<double>(pairs.size());
}

}  // namespace hybridsum
