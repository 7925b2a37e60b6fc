#include "hybridsum/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "hybridsum/error.hpp"
#include "hybridsum/log.hpp"
#include "hybridsum/wilcoxon.hpp"

namespace hybridsum {
namespace {

Backend& require(Backend* backend, const char* what) {
  if (!backend) throw InvalidArgument(std::string("no ") + what + " backend configured");
  return *backend;
}

std::vector<GenerateRequest> generate_requests(const std::vector<const Sample*>& samples) {
  std::vector<GenerateRequest> out;
  out.reserve(samples.size());
  for (const Sample* s : samples) out.push_back({s->id, s->code_tokens, s->ast_tokens});
  return out;
}

void write_decisions(const std::vector<RoutingDecision>& decisions, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  for (const auto& d : decisions) {
    nlohmann::ordered_json j;
    j["id"] = d.sample_id;
    j["score"] = d.score;
    j["choice"] = std::string(to_string(d.choice));
    j["emitted"] = join_tokens(d.emitted_comment);
    out << j.dump() << '\n';
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::vector<RoutingDecision> generate_comments(const std::vector<const Sample*>& samples,
                                               const Bm25Index& index, const RouterConfig& router,
                                               const Backends& backends) {
  router.validate();
  const std::size_t n = samples.size();
  std::vector<RetrievalResult> retrieved;
  retrieved.reserve(n);
  for (const Sample* s : samples) retrieved.push_back(index.retrieve_top1(*s));

  std::vector<RoutingDecision> decisions(n);
  for (std::size_t i = 0; i < n; ++i) decisions[i].sample_id = samples[i]->id;

  switch (router.kind) {
    case RouterKind::Lexical:
      for (std::size_t i = 0; i < n; ++i) {
        decisions[i].score =
            lexical_score(samples[i]->code_tokens, retrieved[i].retrieved_code, router.lexical_bleu);
        decisions[i].choice = route(decisions[i].score, router.threshold);
      }
      break;
    case RouterKind::External: {
      std::vector<ClassifyRequest> requests;
      for (std::size_t i = 0; i < n; ++i) {
        requests.push_back({samples[i]->id, samples[i]->code_tokens, retrieved[i].retrieved_code});
      }
      const auto scores = classify_external(require(backends.classifier, "classifier"), requests);
      for (std::size_t i = 0; i < n; ++i) {
        decisions[i].score = scores[i].score;
        decisions[i].choice = route(scores[i].score, router.threshold);
      }
      break;
    }
    case RouterKind::AlwaysIr:
      for (auto& d : decisions) {
        d.score = 1.0;
        d.choice = Choice::IR;
      }
      break;
    case RouterKind::AlwaysNmt:
      for (auto& d : decisions) {
        d.score = 0.0;
        d.choice = Choice::NMT;
      }
      break;
    case RouterKind::Oracle: {
      // Needs every generated comment to know which side is better.
      const auto generated =
          n ? require(backends.generator, "generator").generate(generate_requests(samples))
            : std::vector<Tokens>{};
      for (std::size_t i = 0; i < n; ++i) {
        const auto& ref = samples[i]->comment_tokens;
        const double ir = sentence_bleu(retrieved[i].retrieved_comment, ref, router.oracle_bleu);
        const double nmt = sentence_bleu(generated[i], ref, router.oracle_bleu);
        decisions[i].choice = oracle_route(ir, nmt);
        decisions[i].score = decisions[i].choice == Choice::IR ? 1.0 : 0.0;
        decisions[i].emitted_comment =
            decisions[i].choice == Choice::IR ? retrieved[i].retrieved_comment : generated[i];
      }
      return decisions;
    }
  }

  std::vector<const Sample*> to_generate;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < n; ++i) {
    if (decisions[i].choice == Choice::IR) {
      decisions[i].emitted_comment = retrieved[i].retrieved_comment;
    } else {
      to_generate.push_back(samples[i]);
      slots.push_back(i);
    }
  }
  if (!to_generate.empty()) {
    const auto generated =
        require(backends.generator, "generator").generate(generate_requests(to_generate));
    for (std::size_t k = 0; k < slots.size(); ++k) decisions[slots[k]].emitted_comment = generated[k];
  }
  return decisions;
}

RoutingDecision generate_comment(const Sample& sample, const Bm25Index& index,
                                 const RouterConfig& router, const Backends& backends) {
  return generate_comments({&sample}, index, router, backends).front();
}

PartitionReport partition_analysis(
    const std::vector<PerSampleOutputs>& outputs,
    const std::map<std::string, std::vector<Tokens>>& system_candidates, const BleuConfig& cfg,
    const BleuConfig& corpus_cfg) {
  for (const auto& [name, cands] : system_candidates) {
    if (cands.size() != outputs.size()) {
      throw InvalidArgument("system '" + name + "' has a different number of outputs");
    }
  }
  std::vector<bool> ir_better(outputs.size());
  PartitionReport report;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& o = outputs[i];
    ir_better[i] = sentence_bleu(o.ir, o.reference, cfg) > sentence_bleu(o.nmt, o.reference, cfg);
    ++(ir_better[i] ? report.ir_better.count : report.nmt_better.count);
  }
  for (const auto& [name, cands] : system_candidates) {
    for (const bool side : {true, false}) {
      std::vector<std::pair<Tokens, Tokens>> pairs;
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (ir_better[i] == side) pairs.emplace_back(cands[i], outputs[i].reference);
      }
      auto& target = side ? report.ir_better : report.nmt_better;
      target.bleu[name] =
          pairs.empty() ? std::nullopt : std::optional<double>(corpus_bleu(pairs, corpus_cfg).composite);
    }
  }
  return report;
}

EffortReport effort_saved(const std::vector<RoutingDecision>& decisions) {
  if (decisions.empty()) throw InvalidArgument("effort_saved: no decisions");
  EffortReport e;
  e.total = decisions.size();
  e.skipped = static_cast<std::size_t>(std::count_if(
      decisions.begin(), decisions.end(), [](const RoutingDecision& d) { return d.choice == Choice::IR; }));
  e.fraction = static_cast<double>(e.skipped) / static_cast<double>(e.total);
  return e;
}

Corpus prepare_corpus(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_path, config.preprocess);
  if (config.filter_auto_generated) corpus = filter_auto_generated(corpus, config.preprocess);
  if (!(config.reuse_split && corpus.has_split())) {
    corpus = split_by_project(corpus, config.ratios, config.seed);
  }
  return corpus;
}

ExperimentResult run_experiment(const Corpus& corpus, const RunConfig& config,
                                const Backends& backends) {
  config.router.validate();
  if (config.systems.empty()) throw ConfigError("/systems", "no systems configured");
  std::set<std::string> wanted;
  for (const auto& s : config.systems) {
    if (std::find(known_systems().begin(), known_systems().end(), s) == known_systems().end()) {
      throw ConfigError("/systems", "unknown system '" + s + "'");
    }
    if (!wanted.insert(s).second) throw ConfigError("/systems", "duplicate system '" + s + "'");
  }

  const Bm25Index index = Bm25Index::build(corpus, Split::Train, config.bm25);
  const auto test = corpus.samples_in(Split::Test);
  if (test.empty()) throw InvalidArgument("test split is empty");
  logger().info("indexed {} training samples; evaluating {} test samples", index.doc_count(), test.size());

  std::vector<Tokens> references;
  std::vector<Tokens> ir_out;
  for (const Sample* s : test) {
    references.push_back(s->comment_tokens);
    ir_out.push_back(index.retrieve_top1(*s).retrieved_comment);
  }

  std::optional<std::vector<Tokens>> nmt_out;
  if (wanted.count("nmt") || wanted.count("oracle")) {
    nmt_out = require(backends.generator, "generator").generate(generate_requests(test));
  }

  ExperimentResult result;
  std::map<std::string, std::vector<Tokens>> candidates;
  if (wanted.count("ir")) candidates["ir"] = ir_out;
  if (wanted.count("nmt")) candidates["nmt"] = *nmt_out;
  std::optional<EffortReport> effort;
  if (wanted.count("combined")) {
    const std::size_t before = backends.generator ? backends.generator->stats().generate_requests : 0;
    result.decisions = generate_comments(test, index, config.router, backends);
    const std::size_t after = backends.generator ? backends.generator->stats().generate_requests : 0;
    effort = effort_saved(result.decisions);
    effort->generator_calls = after - before;
    auto& combined = candidates["combined"];
    for (const auto& d : result.decisions) combined.push_back(d.emitted_comment);
  }
  if (wanted.count("oracle")) {
    auto& oracle = candidates["oracle"];
    for (std::size_t i = 0; i < test.size(); ++i) {
      const double ir = sentence_bleu(ir_out[i], references[i], config.router.oracle_bleu);
      const double nmt = sentence_bleu((*nmt_out)[i], references[i], config.router.oracle_bleu);
      oracle.push_back(oracle_route(ir, nmt) == Choice::IR ? ir_out[i] : (*nmt_out)[i]);
    }
  }

  for (const auto& name : known_systems()) {
    if (!wanted.count(name)) continue;
    auto& preds = result.predictions[name];
    for (std::size_t i = 0; i < test.size(); ++i) {
      preds.push_back({test[i]->id, candidates.at(name)[i], references[i]});
    }
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    for (const auto& [name, preds] : result.predictions) {
      write_predictions(preds, config.output_dir / ("predictions_" + name + ".jsonl"));
    }
    if (!result.decisions.empty()) write_decisions(result.decisions, config.output_dir / "decisions.jsonl");
  }

  EvaluationReport& report = result.report;
  report.test_size = test.size();
  report.router_kind = std::string(to_string(config.router.kind));
  report.threshold = config.router.threshold;
  for (const auto& name : known_systems()) {
    if (!wanted.count(name)) continue;
    report.systems.push_back({name, evaluate_predictions(result.predictions.at(name), config.metrics)});
  }

  if (nmt_out && wanted.count("combined")) {
    ClassifierRow row;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const bool positive =
          label_sample(references[i], ir_out[i], (*nmt_out)[i], config.label).label == Label::Positive;
      const bool predicted = result.decisions[i].choice == Choice::IR;
      if (predicted && positive) ++row.tp;
      else if (predicted) ++row.fp;
      else if (positive) ++row.fn;
      else ++row.tn;
    }
    row.metrics = classification_metrics(row.tp, row.fp, row.tn, row.fn);
    row.combined_bleu = report.system("combined")->metrics.bleu;
    report.classifier = row;
  }

  if (nmt_out) {
    std::vector<PerSampleOutputs> outputs;
    for (std::size_t i = 0; i < test.size(); ++i) {
      outputs.push_back({test[i]->id, references[i], ir_out[i], (*nmt_out)[i]});
    }
    report.partition = partition_analysis(outputs, candidates, config.router.oracle_bleu, config.metrics.bleu);
  }
  report.effort = effort;

  for (std::size_t a = 0; a < report.systems.size(); ++a) {
    for (std::size_t b = a + 1; b < report.systems.size(); ++b) {
      const auto& sa = report.systems[a].metrics.per_sample;
      const auto& sb = report.systems[b].metrics.per_sample;
      SignificanceRow row{report.systems[a].name, report.systems[b].name, std::nullopt, std::nullopt, 0, false};
      if (sa.size() == sb.size() && !sa.empty()) {
        std::vector<std::pair<double, double>> paired;
        for (std::size_t i = 0; i < sa.size(); ++i) paired.emplace_back(sa[i].bleu, sb[i].bleu);
        try {
          const auto w = wilcoxon_signed_rank(paired);
          row.statistic = w.statistic;
          row.p_value = w.p_value;
          row.n = w.n;
          row.exact = w.exact;
        } catch (const InvalidArgument&) {
          // too few non-zero differences: left empty
        }
      }
      report.significance.push_back(row);
    }
  }

  if (!config.output_dir.empty()) {
    write_text(report_to_json(report), config.output_dir / "report.json");
    write_text(render_report(report, {ReportFormat::Text, true}), config.output_dir / "report.txt");
  }
  return result;
}

ExperimentResult run_experiment(const Corpus& corpus, const RunConfig& config) {
  std::unique_ptr<Backend> generator;
  std::unique_ptr<Backend> classifier;
  if (config.generator) generator = open_backend(*config.generator);
  if (config.classifier && config.router.kind == RouterKind::External) {
    classifier = open_backend(*config.classifier);
  }
  return run_experiment(corpus, config, Backends{generator.get(), classifier.get()});
}

}  // namespace hybridsum
