#include "hybridsum/report.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "hybridsum/error.hpp"

namespace hybridsum {
namespace {

using nlohmann::ordered_json;

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string fixed(double v, int digits) { return fmt::format("{:.{}f}", v, digits); }
std::string full(double v) { return fmt::format("{:.17g}", v); }
std::string opt_fixed(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : "-";
}

std::string render_text(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  for (std::size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += "  ";
      // first column left-aligned, numbers right-aligned
      out += c == 0 ? fmt::format("{:<{}}", cells[c], width[c]) : fmt::format("{:>{}}", cells[c], width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = t.title + "\n" + line(t.header);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
  out += std::string(total, '-') + "\n";
  for (const auto& row : t.rows) out += line(row);
  return out;
}

std::string render_markdown(const Table& t) {
  std::string out = "### " + t.title + "\n\n";
  auto line = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  };
  out += line(t.header);
  std::string sep = "|";
  for (std::size_t c = 0; c < t.header.size(); ++c) sep += c == 0 ? " --- |" : " ---: |";
  out += sep + "\n";
  for (const auto& row : t.rows) out += line(row);
  return out;
}

std::vector<std::string> metric_header(std::size_t orders) {
  std::vector<std::string> h{"System", "BLEU"};
  for (std::size_t n = 1; n <= orders; ++n) h.push_back("BLEU" + std::to_string(n));
  h.insert(h.end(), {"METEOR", "ROUGE-L", "CIDEr"});
  return h;
}

std::vector<std::string> metric_row(const std::string& name, const MetricReport& m, double scale) {
  std::vector<std::string> r{name, fixed(m.bleu * scale, 2)};
  for (double v : m.bleu_n) r.push_back(fixed(v * scale, 2));
  r.push_back(fixed(m.meteor * scale, 2));
  r.push_back(fixed(m.rouge_l * scale, 2));
  r.push_back(fixed(m.cider, 3));
  return r;
}

std::vector<Table> build_tables(const EvaluationReport& report, bool percent) {
  const double scale = percent ? 100.0 : 1.0;
  std::vector<Table> tables;

  Table systems;
  systems.title = fmt::format("Systems (test samples: {}, router: {}, threshold: {})", report.test_size,
                              report.router_kind, fixed(report.threshold, 2));
  const std::size_t orders = report.systems.empty() ? 4 : report.systems.front().metrics.bleu_n.size();
  systems.header = metric_header(orders);
  for (const auto& s : report.systems) systems.rows.push_back(metric_row(s.name, s.metrics, scale));
  tables.push_back(std::move(systems));

  if (report.classifier) {
    const auto& c = *report.classifier;
    Table t;
    t.title = "Classifier";
    t.header = {"Router", "TP", "FP", "TN", "FN", "Accuracy", "Precision", "Recall", "F1", "Combined BLEU"};
    t.rows.push_back({report.router_kind, std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.tn),
                      std::to_string(c.fn), fixed(c.metrics.accuracy * scale, 2),
                      fixed(c.metrics.precision * scale, 2), fixed(c.metrics.recall * scale, 2),
                      fixed(c.metrics.f1 * scale, 2), fixed(c.combined_bleu * scale, 2)});
    tables.push_back(std::move(t));
  }

  if (report.partition) {
    const auto& p = *report.partition;
    Table t;
    t.title = "Partition";
    t.header = {"Partition", "Count"};
    std::vector<std::string> names;
    for (const auto& [name, v] : p.ir_better.bleu) names.push_back(name);
    // keep the system column order of the main table
    std::vector<std::string> ordered;
    for (const auto& s : report.systems) {
      if (std::find(names.begin(), names.end(), s.name) != names.end()) ordered.push_back(s.name);
    }
    for (const auto& n : names) {
      if (std::find(ordered.begin(), ordered.end(), n) == ordered.end()) ordered.push_back(n);
    }
    for (const auto& n : ordered) t.header.push_back(n + " BLEU");
    auto side_row = [&](const std::string& label, const PartitionSide& side) {
      std::vector<std::string> r{label, std::to_string(side.count)};
      for (const auto& n : ordered) {
        const auto it = side.bleu.find(n);
        std::optional<double> v = it == side.bleu.end() ? std::nullopt : it->second;
        if (v) *v *= scale;
        r.push_back(opt_fixed(v, 2));
      }
      return r;
    };
    t.rows.push_back(side_row("IR better", p.ir_better));
    t.rows.push_back(side_row("NMT better", p.nmt_better));
    std::vector<std::string> total{"Total", std::to_string(p.ir_better.count + p.nmt_better.count)};
    total.resize(t.header.size());
    t.rows.push_back(std::move(total));
    tables.push_back(std::move(t));
  }

  if (report.effort) {
    const auto& e = *report.effort;
    Table t;
    t.title = "Effort";
    t.header = {"Skipped NMT", "Total", "Fraction", "Generator calls"};
    t.rows.push_back({std::to_string(e.skipped), std::to_string(e.total), fixed(e.fraction * scale, 2),
                      std::to_string(e.generator_calls)});
    tables.push_back(std::move(t));
  }

  if (!report.significance.empty()) {
    Table t;
    t.title = "Significance (Wilcoxon signed-rank on sentence BLEU)";
    t.header = {"System A", "System B", "n", "W", "p", "Exact"};
    for (const auto& s : report.significance) {
      t.rows.push_back({s.system_a, s.system_b, std::to_string(s.n), opt_fixed(s.statistic, 1),
                        s.p_value ? fmt::format("{:.4g}", *s.p_value) : "-", s.exact ? "yes" : "no"});
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

std::string render_tables(const std::vector<Table>& tables, ReportFormat format) {
  std::string out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out += "\n";
    out += format == ReportFormat::Markdown ? render_markdown(tables[i]) : render_text(tables[i]);
  }
  return out;
}

void add_metrics(ordered_json& j, const MetricReport& m, double scale) {
  j["bleu"] = m.bleu * scale;
  for (std::size_t n = 0; n < m.bleu_n.size(); ++n) j["bleu_" + std::to_string(n + 1)] = m.bleu_n[n] * scale;
  j["meteor"] = m.meteor * scale;
  j["rouge_l"] = m.rouge_l * scale;
  j["cider"] = m.cider;
}

ordered_json opt_json(const std::optional<double>& v, double scale = 1.0) {
  return v ? ordered_json(*v * scale) : ordered_json(nullptr);
}

// ---- CSV ----

struct CsvWriter {
  std::string out = "section,key,field,value\n";
  void row(const std::string& section, const std::string& key, const std::string& field,
           const std::string& value) {
    out += section + "," + key + "," + field + "," + value + "\n";
  }
};

std::string render_csv(const EvaluationReport& r) {
  CsvWriter w;
  w.row("meta", "", "test_size", std::to_string(r.test_size));
  w.row("meta", "", "router", r.router_kind);
  w.row("meta", "", "threshold", full(r.threshold));
  for (const auto& s : r.systems) {
    const auto& m = s.metrics;
    w.row("system", s.name, "bleu", full(m.bleu));
    for (std::size_t n = 0; n < m.bleu_n.size(); ++n) {
      w.row("system", s.name, "bleu_" + std::to_string(n + 1), full(m.bleu_n[n]));
    }
    w.row("system", s.name, "meteor", full(m.meteor));
    w.row("system", s.name, "rouge_l", full(m.rouge_l));
    w.row("system", s.name, "cider", full(m.cider));
  }
  if (r.classifier) {
    const auto& c = *r.classifier;
    w.row("classifier", "", "tp", std::to_string(c.tp));
    w.row("classifier", "", "fp", std::to_string(c.fp));
    w.row("classifier", "", "tn", std::to_string(c.tn));
    w.row("classifier", "", "fn", std::to_string(c.fn));
    w.row("classifier", "", "accuracy", full(c.metrics.accuracy));
    w.row("classifier", "", "precision", full(c.metrics.precision));
    w.row("classifier", "", "recall", full(c.metrics.recall));
    w.row("classifier", "", "f1", full(c.metrics.f1));
    w.row("classifier", "", "degenerate", c.metrics.degenerate ? "1" : "0");
    w.row("classifier", "", "combined_bleu", full(c.combined_bleu));
  }
  if (r.partition) {
    for (const auto& [key, side] : {std::pair{"ir_better", &r.partition->ir_better},
                                    std::pair{"nmt_better", &r.partition->nmt_better}}) {
      w.row("partition", key, "count", std::to_string(side->count));
      for (const auto& [name, v] : side->bleu) w.row("partition", key, "bleu:" + name, v ? full(*v) : "");
    }
  }
  if (r.effort) {
    w.row("effort", "", "skipped", std::to_string(r.effort->skipped));
    w.row("effort", "", "total", std::to_string(r.effort->total));
    w.row("effort", "", "fraction", full(r.effort->fraction));
    w.row("effort", "", "generator_calls", std::to_string(r.effort->generator_calls));
  }
  for (const auto& s : r.significance) {
    const std::string key = s.system_a + "|" + s.system_b;
    w.row("significance", key, "statistic", s.statistic ? full(*s.statistic) : "");
    w.row("significance", key, "p_value", s.p_value ? full(*s.p_value) : "");
    w.row("significance", key, "n", std::to_string(s.n));
    w.row("significance", key, "exact", s.exact ? "1" : "0");
  }
  return w.out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(line, "expected a number, got '" + s + "'");
  }
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw FormatError(line, "expected a count, got '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

const SystemRow* EvaluationReport::system(const std::string& name) const {
  for (const auto& s : systems) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "text") return ReportFormat::Text;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw InvalidArgument("unknown report format '" + std::string(text) + "'");
}

std::string report_to_json(const EvaluationReport& r, bool percent) {
  const double scale = percent ? 100.0 : 1.0;
  ordered_json j;
  j["percent"] = percent;
  j["test_size"] = r.test_size;
  j["router"] = r.router_kind;
  j["threshold"] = r.threshold;
  ordered_json systems = ordered_json::array();
  for (const auto& s : r.systems) {
    ordered_json row;
    row["name"] = s.name;
    add_metrics(row, s.metrics, scale);
    systems.push_back(row);
  }
  j["systems"] = systems;
  if (r.classifier) {
    const auto& c = *r.classifier;
    j["classifier"] = {{"tp", c.tp},
                       {"fp", c.fp},
                       {"tn", c.tn},
                       {"fn", c.fn},
                       {"accuracy", c.metrics.accuracy * scale},
                       {"precision", c.metrics.precision * scale},
                       {"recall", c.metrics.recall * scale},
                       {"f1", c.metrics.f1 * scale},
                       {"degenerate", c.metrics.degenerate},
                       {"combined_bleu", c.combined_bleu * scale}};
  } else {
    j["classifier"] = nullptr;
  }
  if (r.partition) {
    auto side = [&](const PartitionSide& s) {
      ordered_json b = ordered_json::object();
      for (const auto& [name, v] : s.bleu) b[name] = opt_json(v, scale);
      return ordered_json{{"count", s.count}, {"bleu", b}};
    };
    j["partition"] = {{"ir_better", side(r.partition->ir_better)},
                      {"nmt_better", side(r.partition->nmt_better)}};
  } else {
    j["partition"] = nullptr;
  }
  if (r.effort) {
    j["effort"] = {{"skipped", r.effort->skipped},
                   {"total", r.effort->total},
                   {"fraction", r.effort->fraction},
                   {"generator_calls", r.effort->generator_calls}};
  } else {
    j["effort"] = nullptr;
  }
  ordered_json sig = ordered_json::array();
  for (const auto& s : r.significance) {
    sig.push_back({{"system_a", s.system_a},
                   {"system_b", s.system_b},
                   {"statistic", opt_json(s.statistic)},
                   {"p_value", opt_json(s.p_value)},
                   {"n", s.n},
                   {"exact", s.exact}});
  }
  j["significance"] = sig;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  EvaluationReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    const double scale = j.value("percent", false) ? 100.0 : 1.0;
    r.test_size = j.at("test_size").get<std::size_t>();
    r.router_kind = j.at("router").get<std::string>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& s : j.at("systems")) {
      SystemRow row;
      row.name = s.at("name").get<std::string>();
      row.metrics.bleu = s.at("bleu").get<double>() / scale;
      for (std::size_t n = 1; s.contains("bleu_" + std::to_string(n)); ++n) {
        row.metrics.bleu_n.push_back(s.at("bleu_" + std::to_string(n)).get<double>() / scale);
      }
      row.metrics.meteor = s.at("meteor").get<double>() / scale;
      row.metrics.rouge_l = s.at("rouge_l").get<double>() / scale;
      row.metrics.cider = s.at("cider").get<double>();
      r.systems.push_back(std::move(row));
    }
    if (j.contains("classifier") && !j["classifier"].is_null()) {
      const auto& c = j["classifier"];
      ClassifierRow row;
      row.tp = c.at("tp").get<std::size_t>();
      row.fp = c.at("fp").get<std::size_t>();
      row.tn = c.at("tn").get<std::size_t>();
      row.fn = c.at("fn").get<std::size_t>();
      row.metrics.accuracy = c.at("accuracy").get<double>() / scale;
      row.metrics.precision = c.at("precision").get<double>() / scale;
      row.metrics.recall = c.at("recall").get<double>() / scale;
      row.metrics.f1 = c.at("f1").get<double>() / scale;
      row.metrics.degenerate = c.at("degenerate").get<bool>();
      row.combined_bleu = c.at("combined_bleu").get<double>() / scale;
      r.classifier = row;
    }
    if (j.contains("partition") && !j["partition"].is_null()) {
      auto side = [&](const nlohmann::json& s) {
        PartitionSide out;
        out.count = s.at("count").get<std::size_t>();
        for (const auto& [name, v] : s.at("bleu").items()) {
          out.bleu[name] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>() / scale);
        }
        return out;
      };
      r.partition = PartitionReport{side(j["partition"].at("ir_better")), side(j["partition"].at("nmt_better"))};
    }
    if (j.contains("effort") && !j["effort"].is_null()) {
      const auto& e = j["effort"];
      r.effort = EffortReport{e.at("skipped").get<std::size_t>(), e.at("total").get<std::size_t>(),
                              e.at("fraction").get<double>(), e.value("generator_calls", std::size_t{0})};
    }
    if (j.contains("significance")) {
      for (const auto& s : j["significance"]) {
        SignificanceRow row;
        row.system_a = s.at("system_a").get<std::string>();
        row.system_b = s.at("system_b").get<std::string>();
        if (!s.at("statistic").is_null()) row.statistic = s["statistic"].get<double>();
        if (!s.at("p_value").is_null()) row.p_value = s["p_value"].get<double>();
        row.n = s.at("n").get<std::size_t>();
        row.exact = s.at("exact").get<bool>();
        r.significance.push_back(row);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("format", std::string("report: ") + e.what());
  }
  return r;
}

EvaluationReport report_from_csv(const std::string& text) {
  EvaluationReport r;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> system_slot;
  std::map<std::string, std::size_t> sig_slot;
  auto side_of = [&](const std::string& key, std::size_t ln) -> PartitionSide& {
    if (!r.partition) r.partition.emplace();
    if (key == "ir_better") return r.partition->ir_better;
    if (key == "nmt_better") return r.partition->nmt_better;
    throw FormatError(ln, "unknown partition '" + key + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "section,key,field,value") throw FormatError(1, "unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) throw FormatError(lineno, "expected 4 columns");
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    cells.push_back(line.substr(start));
    const auto& [section, key, field, value] = std::tie(cells[0], cells[1], cells[2], cells[3]);

    if (section == "meta") {
      if (field == "test_size") r.test_size = parse_count(value, lineno);
      else if (field == "router") r.router_kind = value;
      else if (field == "threshold") r.threshold = parse_double(value, lineno);
      else throw FormatError(lineno, "unknown field '" + field + "'");
    } else if (section == "system") {
      auto [it, fresh] = system_slot.emplace(key, r.systems.size());
      if (fresh) r.systems.push_back({key, {}});
      auto& m = r.systems[it->second].metrics;
      if (field == "bleu") m.bleu = parse_double(value, lineno);
      else if (field.rfind("bleu_", 0) == 0) {
        const std::size_t n = parse_count(field.substr(5), lineno);
        if (n == 0) throw FormatError(lineno, "bad order");
        if (m.bleu_n.size() < n) m.bleu_n.resize(n);
        m.bleu_n[n - 1] = parse_double(value, lineno);
      } else if (field == "meteor") m.meteor = parse_double(value, lineno);
      else if (field == "rouge_l") m.rouge_l = parse_double(value, lineno);
      else if (field == "cider") m.cider = parse_double(value, lineno);
      else throw FormatError(lineno, "unknown field '" + field + "'");
    } else if (section == "classifier") {
      if (!r.classifier) r.classifier.emplace();
      auto& c = *r.classifier;
      if (field == "tp") c.tp = parse_count(value, lineno);
      else if (field == "fp") c.fp = parse_count(value, lineno);
      else if (field == "tn") c.tn = parse_count(value, lineno);
      else if (field == "fn") c.fn = parse_count(value, lineno);
      else if (field == "accuracy") c.metrics.accuracy = parse_double(value, lineno);
      else if (field == "precision") c.metrics.precision = parse_double(value, lineno);
      else if (field == "recall") c.metrics.recall = parse_double(value, lineno);
      else if (field == "f1") c.metrics.f1 = parse_double(value, lineno);
      else if (field == "degenerate") c.metrics.degenerate = value == "1";
      else if (field == "combined_bleu") c.combined_bleu = parse_double(value, lineno);
      else throw FormatError(lineno, "unknown field '" + field + "'");
    } else if (section == "partition") {
      auto& side = side_of(key, lineno);
      if (field == "count") side.count = parse_count(value, lineno);
      else if (field.rfind("bleu:", 0) == 0) {
        side.bleu[field.substr(5)] = value.empty() ? std::nullopt : std::optional<double>(parse_double(value, lineno));
      } else throw FormatError(lineno, "unknown field '" + field + "'");
    } else if (section == "effort") {
      if (!r.effort) r.effort.emplace();
      if (field == "skipped") r.effort->skipped = parse_count(value, lineno);
      else if (field == "total") r.effort->total = parse_count(value, lineno);
      else if (field == "fraction") r.effort->fraction = parse_double(value, lineno);
      else if (field == "generator_calls") r.effort->generator_calls = parse_count(value, lineno);
      else throw FormatError(lineno, "unknown field '" + field + "'");
    } else if (section == "significance") {
      const auto bar = key.find('|');
      if (bar == std::string::npos) throw FormatError(lineno, "significance key must be 'a|b'");
      auto [it, fresh] = sig_slot.emplace(key, r.significance.size());
      if (fresh) r.significance.push_back({key.substr(0, bar), key.substr(bar + 1), {}, {}, 0, false});
      auto& s = r.significance[it->second];
      if (field == "statistic") {
        if (!value.empty()) s.statistic = parse_double(value, lineno);
      } else if (field == "p_value") {
        if (!value.empty()) s.p_value = parse_double(value, lineno);
      } else if (field == "n") s.n = parse_count(value, lineno);
      else if (field == "exact") s.exact = value == "1";
      else throw FormatError(lineno, "unknown field '" + field + "'");
    } else {
      throw FormatError(lineno, "unknown section '" + section + "'");
    }
  }
  if (lineno == 0) throw FormatError(1, "empty CSV");
  return r;
}

std::string render_report(const EvaluationReport& report, const ReportRendering& rendering) {
  switch (rendering.format) {
    case ReportFormat::Json:
      return report_to_json(report, rendering.percent);
    case ReportFormat::Csv:
      return render_csv(report);
    case ReportFormat::Text:
    case ReportFormat::Markdown:
      return render_tables(build_tables(report, rendering.percent), rendering.format);
  }
  return {};
}

std::string render_metric_report(const std::string& name, const MetricReport& report,
                                 const ReportRendering& rendering) {
  const double scale = rendering.percent ? 100.0 : 1.0;
  switch (rendering.format) {
    case ReportFormat::Json: {
      ordered_json j;
      j["system"] = name;
      j["percent"] = rendering.percent;
      add_metrics(j, report, scale);
      if (!report.per_sample.empty()) {
        ordered_json rows = ordered_json::array();
        for (const auto& s : report.per_sample) {
          rows.push_back({{"id", s.id},
                          {"bleu", s.bleu * scale},
                          {"meteor", s.meteor * scale},
                          {"rouge_l", s.rouge_l * scale},
                          {"cider", s.cider}});
        }
        j["per_sample"] = rows;
      }
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      CsvWriter w;
      w.row("system", name, "bleu", full(report.bleu));
      for (std::size_t n = 0; n < report.bleu_n.size(); ++n) {
        w.row("system", name, "bleu_" + std::to_string(n + 1), full(report.bleu_n[n]));
      }
      w.row("system", name, "meteor", full(report.meteor));
      w.row("system", name, "rouge_l", full(report.rouge_l));
      w.row("system", name, "cider", full(report.cider));
      return w.out;
    }
    case ReportFormat::Text:
    case ReportFormat::Markdown: {
      Table t;
      t.title = "Metrics";
      t.header = metric_header(report.bleu_n.size());
      t.rows.push_back(metric_row(name, report, scale));
      return render_tables({t}, rendering.format);
    }
  }
  return {};
}

}  // namespace hybridsum
