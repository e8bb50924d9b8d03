#include "docgraph/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "docgraph/csv.hpp"
#include "docgraph/error.hpp"

namespace docgraph::eval {

std::string text_encoding_display(const std::string& encoding) {
  if (encoding == "tfidf") return "TF-IDF";
  if (encoding == "pvdm") return "D2V";
  if (encoding == "external") return "BERT";
  return encoding;
}

std::string encoder_display(gnn::EncoderKind kind) {
  switch (kind) {
    case gnn::EncoderKind::gcn: return "GCN";
    case gnn::EncoderKind::sage: return "SAGE";
    case gnn::EncoderKind::gin: return "GIN";
    case gnn::EncoderKind::gat: return "GAT";
    case gnn::EncoderKind::agnn: return "AGNN";
    case gnn::EncoderKind::graphunet: return "GraphUNet";
  }
  return "?";
}

std::string ablation_label(FeatureBlock block, const std::string& text_encoding) {
  switch (block) {
    case FeatureBlock::first_author: return "First Author";
    case FeatureBlock::affiliation: return "Affiliation";
    case FeatureBlock::subject_area: return "Subject Area";
    case FeatureBlock::topics: return "Topic Distribution";
    case FeatureBlock::year: return "Year";
    case FeatureBlock::citations: return "citations at 1:10";
    case FeatureBlock::text: return text_encoding_display(text_encoding) + " embedding";
  }
  return "?";
}

std::uint64_t run_seed(std::uint64_t seed, int run) { return Rng(seed).substream(static_cast<std::uint64_t>(run)).seed(); }

namespace {

struct Task {
  std::size_t row;
  int run;
};

// Runs `work` for every task on up to `jobs` threads. Results land in
// caller-owned slots, so the outcome does not depend on scheduling.
void run_tasks(std::size_t count, int jobs, const std::function<void(std::size_t)>& work) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Cell {
  std::string group;
  std::string model;
  const Matrix* features;
  gnn::EncoderConfig encoder;
};

MetricsReport run_cells(const CitationGraph& graph, const std::vector<Cell>& cells, const ExperimentConfig& cfg,
                        std::string layout) {
  if (cfg.runs < 1) throw ValidationError("runs must be at least 1");
  std::vector<EdgeSplit> splits;
  for (int r = 0; r < cfg.runs; ++r) splits.push_back(split_edges(graph, cfg.val_frac, cfg.test_frac, run_seed(cfg.seed, r)));

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < cfg.runs; ++r) tasks.push_back({c, r});
  }
  std::vector<std::optional<LinkScores>> scores(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::vector<Matrix> first_embedding(cells.size());
  run_tasks(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    TrainConfig train = cfg.train;
    train.seed = Rng(run_seed(cfg.seed, t.run)).substream("train").seed();
    train.log_every = 0;
    try {
      TrainResult result =
          train_gae(cells[t.row].encoder, *cells[t.row].features, splits[static_cast<std::size_t>(t.run)], train);
      scores[i] = result.test;
      if (t.run == 0) first_embedding[t.row] = std::move(result.embedding);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  MetricsReport report;
  report.layout = std::move(layout);
  report.runs = cfg.runs;
  report.seed = cfg.seed;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    ReportRow row{cells[c].group, cells[c].model, {}, {}, {}, std::nullopt, std::move(first_embedding[c])};
    std::vector<double> aucs, aps;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].row != c) continue;
      if (!scores[i]) {
        if (!row.error) row.error = "run " + std::to_string(tasks[i].run) + ": " + errors[i];
        continue;
      }
      row.runs.push_back(*scores[i]);
      aucs.push_back(scores[i]->auc);
      aps.push_back(scores[i]->ap);
    }
    row.auc = summarize(aucs);
    row.ap = summarize(aps);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace

MetricsReport run_matrix(const CitationGraph& graph, const std::vector<TextFeatures>& encodings,
                         const std::vector<gnn::EncoderConfig>& encoders, const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (const auto& enc : encodings) {
    if (enc.features.rows() != graph.num_nodes()) {
      throw ValidationError("features for " + enc.encoding + " have " + std::to_string(enc.features.rows()) +
                            " rows but the graph has " + std::to_string(graph.num_nodes()) + " nodes");
    }
    for (const auto& e : encoders) cells.push_back({enc.encoding, encoder_display(e.kind), &enc.features, e});
  }
  return run_cells(graph, cells, cfg, "table2");
}

MetricsReport ablation_run(const CitationGraph& graph, const FeatureMatrix& features, const std::string& text_encoding,
                           const gnn::EncoderConfig& encoder, const std::vector<std::optional<FeatureBlock>>& removed,
                           const ExperimentConfig& cfg) {
  std::vector<Matrix> variants;
  variants.reserve(removed.size());
  for (const auto& block : removed) {
    if (block && !features.has(*block)) throw ValidationError("feature block " + to_string(*block) + " is not present");
    variants.push_back(block ? features.without(*block).values() : features.values());
  }
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < removed.size(); ++i) {
    const std::string label = removed[i] ? ablation_label(*removed[i], text_encoding) : "None";
    cells.push_back({label, encoder_display(encoder.kind), &variants[i], encoder});
  }
  return run_cells(graph, cells, cfg, "ablation");
}

std::string format_mean_std(const Summary& s) {
  char buf[64];
  if (s.std) {
    std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.mean, *s.std);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f (-)", s.mean);
  }
  return buf;
}

namespace {

nlohmann::ordered_json summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.std ? nlohmann::ordered_json(*s.std) : nlohmann::ordered_json();
  return j;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  const bool table2 = report.layout == "table2";
  out << (table2 ? "text_encoding,model" : "removed,model")
      << ",auc_mean,auc_std,ap_mean,ap_std,runs_ok,auc,ap,error\n";
  for (const auto& row : report.rows) {
    const std::string group = table2 ? text_encoding_display(row.group) : row.group;
    out << csv_field(group) << ',' << csv_field(row.model) << ',';
    if (row.runs.empty()) {
      out << ",,,,0,";
    } else {
      out << number(row.auc.mean) << ',' << (row.auc.std ? number(*row.auc.std) : "") << ',' << number(row.ap.mean)
          << ',' << (row.ap.std ? number(*row.ap.std) : "") << ',' << row.runs.size() << ',';
    }
    out << csv_field(row.runs.empty() ? "failed" : format_mean_std(row.auc)) << ','
        << csv_field(row.runs.empty() ? "failed" : format_mean_std(row.ap)) << ',' << csv_field(row.error.value_or(""))
        << '\n';
  }
}

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["layout"] = report.layout;
  j["runs"] = report.runs;
  j["seed"] = report.seed;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r[report.layout == "table2" ? "text_encoding" : "removed"] =
        report.layout == "table2" ? text_encoding_display(row.group) : row.group;
    r["model"] = row.model;
    r["auc"] = summary_json(row.auc);
    r["ap"] = summary_json(row.ap);
    auto runs = nlohmann::ordered_json::array();
    for (const auto& s : row.runs) runs.push_back({{"auc", s.auc}, {"ap", s.ap}});
    r["per_run"] = std::move(runs);
    r["error"] = row.error ? nlohmann::ordered_json(*row.error) : nlohmann::ordered_json();
    j["rows"].push_back(std::move(r));
  }
  return j;
}

void render_report(const MetricsReport& report, std::ostream& out) {
  const bool table2 = report.layout == "table2";
  std::vector<std::array<std::string, 4>> lines;
  lines.push_back({table2 ? "Text Encoding" : "Removed", table2 ? "Model" : "", "AUC", "AP"});
  std::string previous;
  for (const auto& row : report.rows) {
    std::string group = table2 ? text_encoding_display(row.group) : row.group;
    if (table2 && group == previous) {
      group.clear();
    } else {
      previous = group;
    }
    const bool ok = !row.runs.empty();
    lines.push_back({group, table2 ? row.model : "", ok ? format_mean_std(row.auc) : "failed",
                     ok ? format_mean_std(row.ap) : "failed"});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& l : lines) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], l[c].size());
  }
  for (const auto& l : lines) {
    std::string text;
    for (std::size_t c = 0; c < 4; ++c) {
      if (!table2 && c == 1) continue;
      text += l[c] + std::string(width[c] - l[c].size() + 2, ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  }
}

}  // namespace docgraph::eval
