#include "hybridsum/router.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "hybridsum/error.hpp"
#include "hybridsum/log.hpp"

namespace hybridsum {

std::string_view to_string(RouterKind kind) {
  switch (kind) {
    case RouterKind::Lexical: return "lexical";
    case RouterKind::External: return "external";
    case RouterKind::Oracle: return "oracle";
    case RouterKind::AlwaysIr: return "always_ir";
    case RouterKind::AlwaysNmt: return "always_nmt";
  }
  return "lexical";
}

RouterKind parse_router_kind(std::string_view text) {
  for (auto k : {RouterKind::Lexical, RouterKind::External, RouterKind::Oracle, RouterKind::AlwaysIr,
                 RouterKind::AlwaysNmt}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument("unknown router kind '" + std::string(text) + "'");
}

std::string_view to_string(Choice choice) { return choice == Choice::IR ? "IR" : "NMT"; }

void RouterConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("router threshold must lie in [0, 1]");
  lexical_bleu.validate();
  oracle_bleu.validate();
}

double lexical_score(const Tokens& input_code, const Tokens& retrieved_code, const BleuConfig& cfg) {
  if (retrieved_code.empty()) return 0.0;
  return sentence_bleu(input_code, retrieved_code, cfg);
}

Choice route(double score, double threshold) {
  if (!(score >= 0.0 && score <= 1.0)) throw InvalidArgument("route: score outside [0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("route: threshold outside [0, 1]");
  return score >= threshold ? Choice::IR : Choice::NMT;
}

Choice oracle_route(double bleu_ir, double bleu_nmt) {
  return bleu_ir > bleu_nmt ? Choice::IR : Choice::NMT;
}

ExternalScore clamp_score(const std::string& request_id, double raw) {
  if (std::isnan(raw)) throw BackendError(request_id, "classifier returned NaN");
  if (raw >= 0.0 && raw <= 1.0) return {raw, false};
  const double clamped = raw < 0.0 ? 0.0 : 1.0;
  logger().warn("classifier score {} for '{}' clamped to {}", raw, request_id, clamped);
  return {clamped, true};
}

std::vector<ExternalScore> classify_external(Backend& backend,
                                             std::span<const ClassifyRequest> requests) {
  const auto raw = backend.classify(requests);
  std::vector<ExternalScore> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back(clamp_score(requests[i].id, raw[i]));
  return out;
}

ExternalScore classify_external(Backend& backend, const std::string& request_id,
                                const Tokens& input_code, const Tokens& retrieved_code) {
  const ClassifyRequest req{request_id, input_code, retrieved_code};
  return classify_external(backend, std::span<const ClassifyRequest>(&req, 1)).front();
}

std::vector<double> threshold_grid(double start, double end, double step) {
  if (!(step > 0.0) || !(end >= start)) throw InvalidArgument("threshold grid: need step > 0 and end >= start");
  const auto intervals = static_cast<std::size_t>(std::llround((end - start) / step));
  std::vector<double> grid;
  grid.reserve(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    grid.push_back(start + (end - start) * static_cast<double>(k) / static_cast<double>(intervals));
  }
  if (intervals == 0) grid.assign(1, start);
  return grid;
}

SweepResult sweep_threshold(const std::vector<SweepSample>& samples, const BleuConfig& cfg,
                            const std::vector<double>& grid) {
  if (samples.empty()) throw InvalidArgument("sweep_threshold: empty dev set");
  if (grid.empty()) throw InvalidArgument("sweep_threshold: empty grid");
  SweepResult result;
  bool first = true;
  for (double t : grid) {
    std::vector<std::pair<Tokens, Tokens>> pairs;
    pairs.reserve(samples.size());
    for (const auto& s : samples) {
      const bool ir = route(s.score, t) == Choice::IR;
      pairs.emplace_back(ir ? s.ir_comment : s.nmt_comment, s.reference);
    }
    const double b = corpus_bleu(pairs, cfg).composite;
    result.curve.push_back({t, b});
    if (first || b > result.best_bleu) {
      result.best_threshold = t;
      result.best_bleu = b;
      first = false;
    }
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out = "threshold,bleu,best\n";
  for (const auto& p : result.curve) {
    out += fmt::format("{:.2f},{:.17g},{}\n", p.threshold, p.bleu,
                       p.threshold == result.best_threshold ? 1 : 0);
  }
  return out;
}

std::string write_sweep_samples_to_string(
    const std::vector<std::pair<SampleId, SweepSample>>& samples) {
  std::string out;
  for (const auto& [id, s] : samples) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["score"] = s.score;
    j["ir"] = join_tokens(s.ir_comment);
    j["nmt"] = join_tokens(s.nmt_comment);
    j["reference"] = join_tokens(s.reference);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SweepSample> read_sweep_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open sweep file '" + path.string() + "'");
  auto tokens = [](const nlohmann::json& v) {
    return v.is_array() ? v.get<Tokens>() : split_tokens(v.get<std::string>());
  };
  std::vector<SweepSample> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      SweepSample s;
      s.score = j.at("score").get<double>();
      if (!(s.score >= 0.0 && s.score <= 1.0)) throw FormatError(line, "score must lie in [0, 1]");
      s.ir_comment = tokens(j.at("ir"));
      s.nmt_comment = tokens(j.at("nmt"));
      s.reference = tokens(j.at("reference"));
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(line, e.what());
    }
  }
  return out;
}

}  // namespace hybridsum
