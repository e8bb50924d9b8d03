#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "docgraph/graph.hpp"
#include "json.hpp"

namespace docgraph {

struct PathStats {
  double mean_path_length = 0.0;
  NodeId diameter = 0;
  // Number of BFS sources used; equals the giant size when exact.
  std::size_t sources = 0;
  bool exact = true;
};

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t links = 0;
  std::size_t giant_nodes = 0;
  std::size_t giant_links = 0;
  NodeId diameter = 0;
  double average_degree = 0.0;
  NodeId max_degree = 0;
  double clustering = 0.0;
  double mean_path_length = 0.0;
  bool paths_exact = true;
  std::size_t path_sources = 0;
  std::optional<double> er_clustering;
  std::optional<double> er_mean_path_length;
  std::optional<double> power_law_alpha;
};

struct StatsOptions {
  // Exact all-pairs BFS up to this giant size, sampled sources above.
  std::size_t exact_threshold = 5000;
  std::size_t sampled_sources = 500;
};

// Connected components; label per node, components ordered by first node.
std::vector<NodeId> connected_components(const CitationGraph& g, NodeId* count = nullptr);
// Nodes of the largest component (ties: the one holding the lowest node id).
std::vector<NodeId> giant_component(const CitationGraph& g);

std::vector<double> local_clustering(const CitationGraph& g);
// Mean of local coefficients; nodes with degree < 2 contribute 0.
double average_clustering(const CitationGraph& g);

PathStats path_stats(const CitationGraph& g, std::span<const NodeId> component, const StatsOptions& opts, Rng& rng);

GraphStats graph_stats(const CitationGraph& g, std::uint64_t seed, const StatsOptions& opts = {});

struct ErBaseline {
  double clustering = 0.0;
  double mean_path_length = 0.0;
  double clustering_stderr = 0.0;
  double path_stderr = 0.0;
  std::size_t replications = 0;
};

ErBaseline er_baseline(NodeId n, std::size_t m, std::size_t replications, std::uint64_t seed,
                       const StatsOptions& opts = {});

// Continuous MLE 1 + k / sum(ln(x / x_min)) over the k values >= x_min.
double fit_power_law(std::span<const double> values, double x_min = 1.0);

std::vector<double> degree_sequence(const CitationGraph& g);

// Flat report keyed by the network-statistics table row names.
nlohmann::ordered_json stats_to_json(const GraphStats& s);

}  // namespace docgraph
