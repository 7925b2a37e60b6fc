#include "hybridsum/cli.hpp"

#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hybridsum/config.hpp"
#include "hybridsum/error.hpp"
#include "hybridsum/labeler.hpp"
#include "hybridsum/log.hpp"
#include "hybridsum/pipeline.hpp"
#include "hybridsum/report.hpp"

namespace hybridsum {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool verbose = false;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = load_run_config(g.config_path);
  apply_env_overrides(cfg);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.label.seed = *g.seed;
  }
  return cfg;
}

std::unique_ptr<Backend> open_generator(const RunConfig& cfg, const std::string& command) {
  if (!command.empty()) {
    BackendConfig b = cfg.generator.value_or(BackendConfig{});
    b.transport = Transport::Subprocess;
    b.command = command;
    return open_backend(b);
  }
  if (!cfg.generator) throw ConfigError("/generator", "no generator backend configured");
  return open_backend(*cfg.generator);
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid retrieval/generation code summarization toolkit", "hybridsum"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for splitting and shuffling");
  app.add_flag("--quiet", g.quiet, "Only log errors");
  app.add_flag("--verbose", g.verbose, "Log debug messages");

  // corpus prepare
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus operations");
  corpus_cmd->require_subcommand(1);
  auto* prepare = corpus_cmd->add_subcommand("prepare", "Preprocess, filter and split a raw corpus");
  std::string prep_in, prep_out;
  bool prep_no_filter = false, prep_resplit = false;
  prepare->add_option("--input", prep_in, "Raw corpus (JSONL)")->required();
  prepare->add_option("--output", prep_out, "Prepared corpus (JSONL)")->required();
  prepare->add_flag("--no-filter", prep_no_filter, "Keep auto-generated samples");
  prepare->add_flag("--resplit", prep_resplit, "Ignore a split column in the input");

  // index build / query
  auto* index_cmd = app.add_subcommand("index", "BM25 index operations");
  index_cmd->require_subcommand(1);
  auto* ibuild = index_cmd->add_subcommand("build", "Index the training split of a prepared corpus");
  std::string ib_corpus, ib_out;
  ibuild->add_option("--corpus", ib_corpus, "Prepared corpus with a split column")->required();
  ibuild->add_option("--output", ib_out, "Index file")->required();
  auto* iquery = index_cmd->add_subcommand("query", "Retrieve the nearest training sample");
  std::string iq_index, iq_code, iq_id = "query";
  iquery->add_option("--index", iq_index, "Index file")->required();
  iquery->add_option("--code", iq_code, "Raw code of the query")->required();
  iquery->add_option("--id", iq_id, "Query id (excluded from results when indexed)");

  // label
  auto* label_cmd = app.add_subcommand("label", "Build labelled triplets from the validation split");
  std::string lb_corpus, lb_out, lb_sweep, lb_generator, lb_split = "validation";
  label_cmd->add_option("--corpus", lb_corpus, "Prepared corpus with a split column")->required();
  label_cmd->add_option("--out", lb_out, "Triplet dataset (JSONL)")->required();
  label_cmd->add_option("--sweep-out", lb_sweep, "Also write router-sweep input (JSONL)");
  label_cmd->add_option("--generator", lb_generator, "Generator command (overrides the config)");
  label_cmd->add_option("--split", lb_split, "Split to label")->check(CLI::IsMember({"train", "validation", "test"}));

  // router sweep
  auto* router_cmd = app.add_subcommand("router", "Router operations");
  router_cmd->require_subcommand(1);
  auto* sweep = router_cmd->add_subcommand("sweep", "Corpus BLEU over the threshold grid (CSV)");
  std::string sw_in;
  double sw_step = 0.05;
  sweep->add_option("--input", sw_in, "Sweep samples (JSONL)")->required();
  sweep->add_option("--step", sw_step, "Grid step")->check(CLI::Range(1e-6, 1.0));

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full experiment described by --config");
  std::string run_out, run_format = "text", run_corpus;
  bool run_percent = false;
  run_cmd->add_option("--output-dir", run_out, "Where predictions and reports are written");
  run_cmd->add_option("--corpus", run_corpus, "Corpus (overrides the config)");
  run_cmd->add_option("--format", run_format, "Report format on stdout")
      ->check(CLI::IsMember({"text", "markdown", "json", "csv"}));
  run_cmd->add_flag("--percent", run_percent, "Scale metrics by 100");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a predictions file");
  std::string ev_pred, ev_format = "text", ev_json, ev_name;
  bool ev_percent = false;
  eval_cmd->add_option("--pred", ev_pred, "Predictions (JSONL: id, candidate, reference)")->required();
  eval_cmd->add_option("--format", ev_format, "Output format")
      ->check(CLI::IsMember({"text", "markdown", "json", "csv"}));
  eval_cmd->add_option("--json-out", ev_json, "Also write the JSON report here");
  eval_cmd->add_option("--name", ev_name, "System name shown in the table");
  eval_cmd->add_flag("--percent", ev_percent, "Scale BLEU, METEOR and ROUGE-L by 100");

  // report render
  auto* report_cmd = app.add_subcommand("report", "Report operations");
  report_cmd->require_subcommand(1);
  auto* render = report_cmd->add_subcommand("render", "Re-render a saved report");
  std::string rr_in, rr_format = "text";
  bool rr_percent = false;
  render->add_option("--input", rr_in, "report.json or report.csv")->required();
  render->add_option("--format", rr_format, "Output format")
      ->check(CLI::IsMember({"text", "markdown", "json", "csv"}));
  render->add_flag("--percent", rr_percent, "Scale metrics by 100");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed_value;

  auto& log = logger();
  log.set_level(g.quiet ? spdlog::level::err : g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (prepare->parsed()) {
      RunConfig cfg = load_config(g);
      cfg.corpus_path = prep_in;
      if (prep_no_filter) cfg.filter_auto_generated = false;
      if (prep_resplit) cfg.reuse_split = false;
      const Corpus corpus = prepare_corpus(cfg);
      write_corpus(corpus, prep_out);
      log.info("kept {} samples (train {}, validation {}, test {})", corpus.size(),
               corpus.samples_in(Split::Train).size(), corpus.samples_in(Split::Validation).size(),
               corpus.samples_in(Split::Test).size());
    } else if (ibuild->parsed()) {
      const RunConfig cfg = load_config(g);
      const Corpus corpus = load_corpus(ib_corpus, cfg.preprocess);
      const Bm25Index index = Bm25Index::build(corpus, Split::Train, cfg.bm25);
      index.save(ib_out);
      log.info("indexed {} documents", index.doc_count());
    } else if (iquery->parsed()) {
      const RunConfig cfg = load_config(g);
      const Bm25Index index = Bm25Index::load(iq_index);
      const auto r = index.retrieve_top1(iq_id, preprocess(iq_code, cfg.preprocess));
      nlohmann::ordered_json j;
      j["query_id"] = r.query_id;
      j["retrieved_id"] = r.retrieved_id;
      j["score"] = r.score;
      j["retrieved_code"] = join_tokens(r.retrieved_code);
      j["retrieved_comment"] = join_tokens(r.retrieved_comment);
      out << j.dump() << '\n';
    } else if (label_cmd->parsed()) {
      const RunConfig cfg = load_config(g);
      const Corpus corpus = load_corpus(lb_corpus, cfg.preprocess);
      const Bm25Index index = Bm25Index::build(corpus, Split::Train, cfg.bm25);
      auto generator = open_generator(cfg, lb_generator);
      const auto records = build_label_records(corpus, index, *generator, cfg.label, parse_split(lb_split));
      std::vector<Triplet> triplets;
      for (const auto& r : records) triplets.push_back(r.triplet);
      write_file(lb_out, write_triplets_to_string(triplets));
      const auto positives = std::count_if(triplets.begin(), triplets.end(),
                                           [](const Triplet& t) { return t.label == Label::Positive; });
      log.info("labelled {} samples, {} positive", triplets.size(), positives);
      if (!lb_sweep.empty()) {
        std::vector<std::pair<SampleId, SweepSample>> samples;
        std::unique_ptr<Backend> classifier;
        if (cfg.router.kind == RouterKind::External) {
          if (!cfg.classifier) throw ConfigError("/classifier", "required by the external router");
          classifier = open_backend(*cfg.classifier);
        }
        for (const auto& r : records) {
          const auto& t = r.triplet;
          const double score =
              classifier ? classify_external(*classifier, t.input_id, t.input_code, t.retrieved_code).score
                         : lexical_score(t.input_code, t.retrieved_code, cfg.router.lexical_bleu);
          samples.push_back({t.input_id, SweepSample{score, r.ir_comment, r.nmt_comment, r.reference}});
        }
        write_file(lb_sweep, write_sweep_samples_to_string(samples));
      }
    } else if (sweep->parsed()) {
      const RunConfig cfg = load_config(g);
      const auto samples = read_sweep_samples(sw_in);
      const auto result = sweep_threshold(samples, cfg.metrics.bleu, threshold_grid(0.0, 1.0, sw_step));
      out << sweep_to_csv(result);
      log.info("best threshold {:.2f} (corpus BLEU {:.4f})", result.best_threshold, result.best_bleu);
    } else if (run_cmd->parsed()) {
      if (g.config_path.empty()) throw ConfigError("/", "run needs --config");
      RunConfig cfg = load_config(g);
      if (!run_corpus.empty()) cfg.corpus_path = run_corpus;
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (cfg.corpus_path.empty()) throw ConfigError("/corpus", "no corpus configured");
      const Corpus corpus = prepare_corpus(cfg);
      const auto result = run_experiment(corpus, cfg);
      out << render_report(result.report, {parse_report_format(run_format), run_percent});
    } else if (eval_cmd->parsed()) {
      const RunConfig cfg = load_config(g);
      const auto predictions = read_predictions(ev_pred);
      const auto report = evaluate_predictions(predictions, cfg.metrics);
      const std::string name = ev_name.empty() ? std::filesystem::path(ev_pred).stem().string() : ev_name;
      out << render_metric_report(name, report, {parse_report_format(ev_format), ev_percent});
      if (!ev_json.empty()) {
        write_file(ev_json, render_metric_report(name, report, {ReportFormat::Json, ev_percent}));
      }
    } else if (render->parsed()) {
      const std::string text = read_file(rr_in);
      const bool csv = text.rfind("section,key,field,value", 0) == 0;
      const EvaluationReport report = csv ? report_from_csv(text) : report_from_json(text);
      out << render_report(report, {parse_report_format(rr_format), rr_percent});
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_dispatch(args, out, err);
}

}  // namespace hybridsum
