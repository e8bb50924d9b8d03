#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "docgraph/gnn.hpp"
#include "docgraph/graph.hpp"

namespace docgraph::eval {

using ad::Matrix;

// Unordered node pairs.
class PairSet {
 public:
  explicit PairSet(NodeId n = 0) : n_(n) {}
  PairSet(NodeId n, const std::vector<Edge>& pairs) : n_(n) {
    for (const auto& [u, v] : pairs) insert(u, v);
  }

  bool insert(NodeId u, NodeId v) { return set_.insert(key(u, v)).second; }
  bool contains(NodeId u, NodeId v) const { return set_.count(key(u, v)) != 0; }
  std::size_t size() const { return set_.size(); }

 private:
  std::uint64_t key(NodeId u, NodeId v) const {
    if (u > v) std::swap(u, v);
    return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(v);
  }
  NodeId n_;
  std::unordered_set<std::uint64_t> set_;
};

struct EdgeSplit {
  NodeId n = 0;
  std::vector<Edge> train;
  std::vector<Edge> val;
  std::vector<Edge> test;
  std::vector<Edge> val_negatives;
  std::vector<Edge> test_negatives;
  std::uint64_t seed = 0;
};

// Uniform split of the undirected edges: floor(m * frac) validation and test
// positives, the rest train. Val/test negatives are distinct non-edges, one
// per positive.
EdgeSplit split_edges(const CitationGraph& g, double val_frac, double test_frac, std::uint64_t seed);

// `count` distinct non-edges of `edges` (no self pairs, none in `exclude`).
std::vector<Edge> sample_negatives(NodeId n, const PairSet& edges, std::size_t count, Rng& rng,
                                   const PairSet* exclude = nullptr);
std::vector<Edge> sample_negatives(const CitationGraph& g, std::size_t count, std::uint64_t seed,
                                   const std::vector<Edge>& exclude = {});

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;

  static OptimizerState for_parameters(const std::vector<Matrix>& params, AdamConfig cfg = {});
};

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, OptimizerState& state);

struct LinkScores {
  double auc = 0.0;
  double ap = 0.0;
};

LinkScores score_links(const Matrix& z, const std::vector<Edge>& positives, const std::vector<Edge>& negatives);

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
  // Validation metrics every `log_every` epochs (0 disables).
  int log_every = 10;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<LinkScores> val;
};

struct TrainResult {
  Matrix embedding;
  std::vector<EpochLog> history;
  LinkScores val;
  LinkScores test;
  std::vector<Matrix> parameters;
};

// Full-batch GAE training on the split's train edges. Each epoch samples as
// many fresh non-edge negatives as there are train positives.
TrainResult train_gae(const gnn::EncoderConfig& cfg, const Matrix& features, const EdgeSplit& split,
                      const TrainConfig& train);

}  // namespace docgraph::eval
