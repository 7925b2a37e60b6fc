#include "hybridsum/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hybridsum/error.hpp"
#include "hybridsum/preprocess.hpp"

namespace hybridsum {
namespace {

using nlohmann::json;

// A JSON object plus its key path. Every key must be consumed by the time
// finish() runs, so typos surface as errors instead of silently defaulting.
class Node {
public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return value_.at(key);
  }

  std::string child_path(const std::string& key) const { return path_ + "/" + key; }

  Node object(const std::string& key) { return Node(raw(key), child_path(key)); }

  bool get(const std::string& key, bool& out) {
    if (!has(key)) return false;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(child_path(key), "expected a boolean");
    out = v.get<bool>();
    return true;
  }

  bool get(const std::string& key, double& out) {
    if (!has(key)) return false;
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(child_path(key), "expected a number");
    out = v.get<double>();
    return true;
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  bool get(const std::string& key, Int& out) {
    if (!has(key)) return false;
    const auto& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      throw ConfigError(child_path(key), "expected a non-negative integer");
    }
    out = static_cast<Int>(v.get<unsigned long long>());
    return true;
  }

  bool get(const std::string& key, std::string& out) {
    if (!has(key)) return false;
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(child_path(key), "expected a string");
    out = v.get<std::string>();
    return true;
  }

  void finish() const {
    for (const auto& [key, v] : value_.items()) {
      if (!seen_.count(key)) throw ConfigError(child_path(key), "unknown key");
    }
  }

private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::vector<std::string> string_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw ConfigError(path + "/" + std::to_string(i), "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

BleuConfig parse_bleu(Node node, BleuConfig cfg) {
  if (node.get("max_n", cfg.max_n) && cfg.max_n < 1) {
    throw ConfigError(node.child_path("max_n"), "must be at least 1");
  }
  if (node.has("weights")) {
    const auto& w = node.raw("weights");
    if (!w.is_array()) throw ConfigError(node.child_path("weights"), "expected an array of numbers");
    cfg.weights.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number()) {
        throw ConfigError(node.child_path("weights") + "/" + std::to_string(i), "expected a number");
      }
      cfg.weights.push_back(w[i].get<double>());
    }
  }
  std::string text;
  if (node.get("smoothing", text)) {
    if (text == "none") cfg.smoothing = Smoothing::None;
    else if (text == "epsilon") cfg.smoothing = Smoothing::Epsilon;
    else throw ConfigError(node.child_path("smoothing"), "expected \"none\" or \"epsilon\"");
  }
  if (node.get("epsilon", cfg.epsilon) && !(cfg.epsilon > 0.0)) {
    throw ConfigError(node.child_path("epsilon"), "must be positive");
  }
  if (node.get("mode", text)) {
    if (text == "sentence") cfg.mode = BleuMode::Sentence;
    else if (text == "corpus") cfg.mode = BleuMode::Corpus;
    else throw ConfigError(node.child_path("mode"), "expected \"sentence\" or \"corpus\"");
  }
  node.finish();
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(node.child_path("weights"), e.what());
  }
  return cfg;
}

BackendConfig parse_backend(Node node, const std::filesystem::path& base) {
  BackendConfig cfg;
  std::string text;
  if (node.get("transport", text)) {
    if (text == "subprocess") cfg.transport = Transport::Subprocess;
    else if (text == "file_batch") cfg.transport = Transport::FileBatch;
    else throw ConfigError(node.child_path("transport"), "expected \"subprocess\" or \"file_batch\"");
  }
  node.get("command", cfg.command);
  if (node.get("requests", text)) cfg.requests_path = resolve(base, text);
  if (node.get("responses", text)) cfg.responses_path = resolve(base, text);
  std::size_t timeout_ms = 0;
  if (node.get("timeout_ms", timeout_ms)) {
    if (timeout_ms == 0) throw ConfigError(node.child_path("timeout_ms"), "must be positive");
    cfg.timeout = std::chrono::milliseconds(timeout_ms);
  }
  if (node.get("max_in_flight", cfg.max_in_flight) && cfg.max_in_flight == 0) {
    throw ConfigError(node.child_path("max_in_flight"), "must be positive");
  }
  node.finish();
  if (cfg.transport == Transport::Subprocess && cfg.command.empty()) {
    throw ConfigError(node.child_path("command"), "required for the subprocess transport");
  }
  if (cfg.transport == Transport::FileBatch && (cfg.requests_path.empty() || cfg.responses_path.empty())) {
    throw ConfigError(node.child_path("requests"), "file_batch needs requests and responses paths");
  }
  return cfg;
}

void check_unit(const Node& node, const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(node.child_path(key), "must lie in [0, 1]");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  Node root(doc, "");
  std::string str;

  if (root.get("corpus", str)) cfg.corpus_path = resolve(base_dir, str);
  if (root.get("output_dir", str)) cfg.output_dir = resolve(base_dir, str);
  root.get("seed", cfg.seed);
  cfg.label.seed = cfg.seed;
  root.get("filter_auto_generated", cfg.filter_auto_generated);
  root.get("reuse_split", cfg.reuse_split);

  if (root.has("preprocess")) {
    Node n = root.object("preprocess");
    n.get("lowercase", cfg.preprocess.lowercase);
    n.get("split_camel", cfg.preprocess.split_camel);
    n.get("split_underscore", cfg.preprocess.split_underscore);
    n.get("strip_non_alpha", cfg.preprocess.strip_non_alpha);
    if (n.has("auto_generated_patterns")) {
      const std::string path = n.child_path("auto_generated_patterns");
      const auto& v = n.raw("auto_generated_patterns");
      if (!v.is_array()) throw ConfigError(path, "expected an array of patterns");
      cfg.preprocess.auto_generated_patterns.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        // A pattern is either a phrase or an explicit token list.
        auto pattern = v[i].is_string() ? preprocess(v[i].get<std::string>(), cfg.preprocess)
                                        : string_list(v[i], path + "/" + std::to_string(i));
        if (pattern.empty()) throw ConfigError(path + "/" + std::to_string(i), "empty pattern");
        cfg.preprocess.auto_generated_patterns.push_back(std::move(pattern));
      }
    }
    n.finish();
  }

  if (root.has("split")) {
    Node n = root.object("split");
    n.get("train", cfg.ratios.train);
    n.get("validation", cfg.ratios.validation);
    n.get("test", cfg.ratios.test);
    n.finish();
    for (const auto& [key, v] : {std::pair{"train", cfg.ratios.train},
                                 std::pair{"validation", cfg.ratios.validation},
                                 std::pair{"test", cfg.ratios.test}}) {
      if (!(v > 0.0 && v < 1.0)) throw ConfigError(n.child_path(key), "must lie in (0, 1)");
    }
    const double sum = cfg.ratios.train + cfg.ratios.validation + cfg.ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("/split", "ratios must sum to 1");
  }

  if (root.has("bm25")) {
    Node n = root.object("bm25");
    if (n.get("k1", cfg.bm25.k1) && cfg.bm25.k1 < 0.0) throw ConfigError(n.child_path("k1"), "must be >= 0");
    if (n.get("b", cfg.bm25.b)) check_unit(n, "b", cfg.bm25.b);
    n.finish();
  }

  if (root.has("router")) {
    Node n = root.object("router");
    if (n.get("kind", str)) {
      try {
        cfg.router.kind = parse_router_kind(str);
      } catch (const Error& e) {
        throw ConfigError(n.child_path("kind"), e.what());
      }
    }
    if (n.get("threshold", cfg.router.threshold)) check_unit(n, "threshold", cfg.router.threshold);
    if (n.has("lexical_bleu")) cfg.router.lexical_bleu = parse_bleu(n.object("lexical_bleu"), cfg.router.lexical_bleu);
    if (n.has("oracle_bleu")) cfg.router.oracle_bleu = parse_bleu(n.object("oracle_bleu"), cfg.router.oracle_bleu);
    n.finish();
  }

  if (root.has("label")) {
    Node n = root.object("label");
    if (n.has("bleu")) cfg.label.bleu = parse_bleu(n.object("bleu"), cfg.label.bleu);
    n.get("exclude_both_poor", cfg.label.exclude_both_poor);
    n.get("min_hits", cfg.label.min_hits);
    if (n.get("train_fraction", cfg.label.train_fraction)) check_unit(n, "train_fraction", cfg.label.train_fraction);
    n.get("seed", cfg.label.seed);
    n.finish();
  }

  if (root.has("generator")) cfg.generator = parse_backend(root.object("generator"), base_dir);
  if (root.has("classifier")) cfg.classifier = parse_backend(root.object("classifier"), base_dir);

  if (root.has("systems")) {
    cfg.systems = string_list(root.raw("systems"), "/systems");
    if (cfg.systems.empty()) throw ConfigError("/systems", "at least one system is required");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < cfg.systems.size(); ++i) {
      const auto& s = cfg.systems[i];
      if (std::find(known_systems().begin(), known_systems().end(), s) == known_systems().end()) {
        throw ConfigError("/systems/" + std::to_string(i), "unknown system '" + s + "'");
      }
      if (!seen.insert(s).second) throw ConfigError("/systems/" + std::to_string(i), "duplicate system");
    }
  }

  if (root.has("metrics")) {
    Node n = root.object("metrics");
    if (n.has("bleu")) cfg.metrics.bleu = parse_bleu(n.object("bleu"), cfg.metrics.bleu);
    if (n.has("meteor")) {
      Node m = n.object("meteor");
      m.get("alpha", cfg.metrics.meteor.alpha);
      m.get("beta", cfg.metrics.meteor.beta);
      m.get("gamma", cfg.metrics.meteor.gamma);
      m.finish();
      check_unit(m, "alpha", cfg.metrics.meteor.alpha);
      check_unit(m, "gamma", cfg.metrics.meteor.gamma);
      if (cfg.metrics.meteor.beta < 0.0) throw ConfigError(m.child_path("beta"), "must be >= 0");
    }
    n.get("per_sample", cfg.metrics.per_sample);
    n.finish();
  }
  root.finish();

  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("/", "cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

void apply_env_overrides(RunConfig& config) {
  if (const char* cmd = std::getenv("HYBRIDSUM_GENERATOR_CMD"); cmd && *cmd) {
    if (!config.generator) config.generator.emplace();
    config.generator->transport = Transport::Subprocess;
    config.generator->command = cmd;
  }
  if (const char* cmd = std::getenv("HYBRIDSUM_CLASSIFIER_CMD"); cmd && *cmd) {
    if (!config.classifier) config.classifier.emplace();
    config.classifier->transport = Transport::Subprocess;
    config.classifier->command = cmd;
  }
  if (const char* ms = std::getenv("HYBRIDSUM_BACKEND_TIMEOUT_MS"); ms && *ms) {
    char* end = nullptr;
    const long long v = std::strtoll(ms, &end, 10);
    if (*end != '\0' || v <= 0) {
      throw ConfigError("HYBRIDSUM_BACKEND_TIMEOUT_MS", "expected a positive integer");
    }
    if (config.generator) config.generator->timeout = std::chrono::milliseconds(v);
    if (config.classifier) config.classifier->timeout = std::chrono::milliseconds(v);
  }
}

}  // namespace hybridsum
