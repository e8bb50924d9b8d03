#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "docgraph/features.hpp"
#include "docgraph/linkpred.hpp"
#include "docgraph/metrics.hpp"

namespace docgraph::eval {

// "tfidf" -> "TF-IDF", "pvdm" -> "D2V", "external" -> "BERT"; other names pass through.
std::string text_encoding_display(const std::string& encoding);
// "GCN", "SAGE", "GIN", "GAT", "AGNN", "GraphUNet".
std::string encoder_display(gnn::EncoderKind kind);
// Removed-feature row label: "First Author", ..., "citations at 1:10", "<text> embedding".
std::string ablation_label(FeatureBlock block, const std::string& text_encoding);

struct ExperimentConfig {
  double val_frac = 0.05;
  double test_frac = 0.10;
  int runs = 10;
  std::uint64_t seed = 0;
  TrainConfig train;
  int jobs = 1;
};

// Run r splits the graph with run_seed(seed, r) and trains with a substream
// of it, so every cell of a grid sees the same splits.
std::uint64_t run_seed(std::uint64_t seed, int run);

struct ReportRow {
  std::string group;  // text encoding, or the removed feature
  std::string model;
  std::vector<LinkScores> runs;
  Summary auc;
  Summary ap;
  std::optional<std::string> error;
  // Eval-mode embedding from run 0; empty when that run failed.
  Matrix embedding;
};

struct MetricsReport {
  std::string layout;  // "table2" or "ablation"
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
};

struct TextFeatures {
  std::string encoding;  // tfidf | pvdm | external
  Matrix features;
};

// One row per (encoding, encoder) in the given order. A failing cell keeps
// its row with `error` set.
MetricsReport run_matrix(const CitationGraph& graph, const std::vector<TextFeatures>& encodings,
                         const std::vector<gnn::EncoderConfig>& encoders, const ExperimentConfig& cfg);

// One row per removed block (std::nullopt = nothing removed, label "None").
MetricsReport ablation_run(const CitationGraph& graph, const FeatureMatrix& features, const std::string& text_encoding,
                           const gnn::EncoderConfig& encoder, const std::vector<std::optional<FeatureBlock>>& removed,
                           const ExperimentConfig& cfg);

// "0.91 (0.01)"; a missing std prints as "-".
std::string format_mean_std(const Summary& s);

void write_report_csv(const MetricsReport& report, std::ostream& out);
nlohmann::ordered_json report_to_json(const MetricsReport& report);
// Aligned plain-text table with the Table 2/3 column names.
void render_report(const MetricsReport& report, std::ostream& out);

}  // namespace docgraph::eval
