#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "docgraph/corpus.hpp"
#include "docgraph/random.hpp"

namespace docgraph {

using NodeId = Eigen::Index;
using Edge = std::pair<NodeId, NodeId>;

// Compressed adjacency rows with sorted neighbor lists.
struct Csr {
  std::vector<NodeId> offsets{0};
  std::vector<NodeId> indices;

  std::span<const NodeId> row(NodeId v) const {
    return {indices.data() + offsets[v], static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
  }
};

// Simple citation graph: directed citing->cited edges plus the symmetrized
// simple view used for statistics and message passing.
class CitationGraph {
 public:
  CitationGraph() = default;

  // Drops self-loops and duplicates.
  static CitationGraph from_directed(NodeId n, std::vector<Edge> edges);
  static CitationGraph from_undirected(NodeId n, std::vector<Edge> edges);

  NodeId num_nodes() const { return n_; }
  std::size_t num_directed_edges() const { return directed_.size(); }
  // Edge count of the symmetrized simple graph.
  std::size_t num_edges() const { return undirected_.size(); }

  const std::vector<Edge>& directed_edges() const { return directed_; }
  // Pairs (u, v) with u < v, sorted.
  const std::vector<Edge>& undirected_edges() const { return undirected_; }

  std::span<const NodeId> neighbors(NodeId v) const { return sym_.row(v); }
  std::span<const NodeId> cited_by(NodeId v) const { return out_.row(v); }
  NodeId degree(NodeId v) const { return sym_.offsets[v + 1] - sym_.offsets[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  // Corpus index of each node; empty when built from a bare edge list.
  const std::vector<std::size_t>& node_article() const { return node_article_; }
  void set_node_article(std::vector<std::size_t> map) { node_article_ = std::move(map); }

 private:
  NodeId n_ = 0;
  std::vector<Edge> directed_;
  std::vector<Edge> undirected_;
  Csr out_;
  Csr sym_;
  std::vector<std::size_t> node_article_;
};

struct CitationGraphBuild {
  CitationGraph graph;
  // Corpus indices of articles with no internal citation link.
  std::vector<std::size_t> excluded;
};

CitationGraphBuild build_citation_graph(const Corpus& corpus);

struct LabeledGraph {
  CitationGraph graph;
  std::vector<std::string> ids;  // node -> id, in first-seen order
};

// `src,dst` CSV (header optional) of citing/cited ids.
LabeledGraph load_edge_csv(const std::filesystem::path& path);

// Uniform simple graph with n nodes and m edges.
CitationGraph random_gnm(NodeId n, std::size_t m, Rng& rng);

}  // namespace docgraph
