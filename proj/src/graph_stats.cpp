#include "docgraph/graph_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "docgraph/error.hpp"

namespace docgraph {

std::vector<NodeId> connected_components(const CitationGraph& g, NodeId* count) {
  const NodeId n = g.num_nodes();
  std::vector<NodeId> label(static_cast<std::size_t>(n), -1);
  NodeId next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (NodeId u : g.neighbors(v)) {
        if (label[u] < 0) {
          label[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

std::vector<NodeId> giant_component(const CitationGraph& g) {
  NodeId k = 0;
  const auto label = connected_components(g, &k);
  if (k == 0) return {};
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (NodeId l : label) ++size[l];
  const NodeId best = std::max_element(size.begin(), size.end()) - size.begin();
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (label[v] == best) nodes.push_back(v);
  }
  return nodes;
}

std::vector<double> local_clustering(const CitationGraph& g) {
  const NodeId n = g.num_nodes();
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  std::vector<char> mark(static_cast<std::size_t>(n), 0);
  for (NodeId v = 0; v < n; ++v) {
    const auto nb = g.neighbors(v);
    const double k = static_cast<double>(nb.size());
    if (nb.size() < 2) continue;
    for (NodeId u : nb) mark[u] = 1;
    std::size_t links = 0;
    for (NodeId u : nb) {
      for (NodeId w : g.neighbors(u)) links += mark[w];
    }
    for (NodeId u : nb) mark[u] = 0;
    // Each neighbor-neighbor link was counted from both ends.
    c[v] = static_cast<double>(links) / (k * (k - 1.0));
  }
  return c;
}

double average_clustering(const CitationGraph& g) {
  if (g.num_nodes() == 0) return 0.0;
  const auto c = local_clustering(g);
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

PathStats path_stats(const CitationGraph& g, std::span<const NodeId> component, const StatsOptions& opts, Rng& rng) {
  PathStats out;
  if (component.size() < 2) return out;
  std::vector<NodeId> sources(component.begin(), component.end());
  if (sources.size() > opts.exact_threshold) {
    rng.shuffle(sources.begin(), sources.end());
    sources.resize(opts.sampled_sources);
    std::sort(sources.begin(), sources.end());
    out.exact = false;
  }
  out.sources = sources.size();
  std::vector<NodeId> dist(static_cast<std::size_t>(g.num_nodes()), -1);
  std::vector<NodeId> queue;
  queue.reserve(component.size());
  // Integer accumulation keeps the result independent of visit order.
  std::uint64_t total = 0, pairs = 0;
  for (NodeId s : sources) {
    queue.clear();
    queue.push_back(s);
    dist[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId v = queue[head];
      for (NodeId u : g.neighbors(v)) {
        if (dist[u] < 0) {
          dist[u] = dist[v] + 1;
          queue.push_back(u);
        }
      }
    }
    for (NodeId v : queue) {
      total += static_cast<std::uint64_t>(dist[v]);
      out.diameter = std::max(out.diameter, dist[v]);
      dist[v] = -1;
    }
    pairs += queue.size() - 1;
  }
  out.mean_path_length = pairs ? static_cast<double>(total) / static_cast<double>(pairs) : 0.0;
  return out;
}

GraphStats graph_stats(const CitationGraph& g, std::uint64_t seed, const StatsOptions& opts) {
  if (g.num_nodes() == 0) throw ValidationError("graph_stats: empty graph");
  Rng rng = Rng(seed).substream("paths");
  GraphStats s;
  s.nodes = static_cast<std::size_t>(g.num_nodes());
  s.links = g.num_edges();
  const auto giant = giant_component(g);
  s.giant_nodes = giant.size();
  std::vector<char> in_giant(s.nodes, 0);
  for (NodeId v : giant) in_giant[v] = 1;
  for (const auto& [u, v] : g.undirected_edges()) s.giant_links += in_giant[u] && in_giant[v];
  s.average_degree = 2.0 * static_cast<double>(s.links) / static_cast<double>(s.nodes);
  for (NodeId v = 0; v < g.num_nodes(); ++v) s.max_degree = std::max(s.max_degree, g.degree(v));
  s.clustering = average_clustering(g);
  const PathStats p = path_stats(g, giant, opts, rng);
  s.mean_path_length = p.mean_path_length;
  s.diameter = p.diameter;
  s.paths_exact = p.exact;
  s.path_sources = p.sources;
  return s;
}

ErBaseline er_baseline(NodeId n, std::size_t m, std::size_t replications, std::uint64_t seed, const StatsOptions& opts) {
  if (n < 0 || static_cast<std::uint64_t>(m) > static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2) {
    throw ValidationError("er_baseline: m exceeds n(n-1)/2");
  }
  if (replications == 0) throw ValidationError("er_baseline: need at least one replication");
  const Rng root(seed);
  std::vector<double> cs, ls;
  for (std::size_t r = 0; r < replications; ++r) {
    Rng rng = root.substream(r);
    const CitationGraph g = random_gnm(n, m, rng);
    cs.push_back(average_clustering(g));
    const auto giant = giant_component(g);
    ls.push_back(path_stats(g, giant, opts, rng).mean_path_length);
  }
  auto mean_se = [](const std::vector<double>& v) {
    const double k = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / k;
    if (v.size() < 2) return std::pair{mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(ss / (k - 1.0)) / std::sqrt(k)};
  };
  ErBaseline out;
  std::tie(out.clustering, out.clustering_stderr) = mean_se(cs);
  std::tie(out.mean_path_length, out.path_stderr) = mean_se(ls);
  out.replications = replications;
  return out;
}

double fit_power_law(std::span<const double> values, double x_min) {
  if (!(x_min > 0.0)) throw ValidationError("fit_power_law: x_min must be positive");
  double sum_log = 0.0;
  std::size_t k = 0;
  for (double x : values) {
    if (x >= x_min) {
      sum_log += std::log(x / x_min);
      ++k;
    }
  }
  if (k < 2) throw ValidationError("fit_power_law: need at least two values >= x_min");
  if (sum_log == 0.0) throw ValidationError("fit_power_law: degenerate sample, all values equal x_min");
  return 1.0 + static_cast<double>(k) / sum_log;
}

std::vector<double> degree_sequence(const CitationGraph& g) {
  std::vector<double> d(static_cast<std::size_t>(g.num_nodes()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) d[v] = static_cast<double>(g.degree(v));
  return d;
}

nlohmann::ordered_json stats_to_json(const GraphStats& s) {
  nlohmann::ordered_json j;
  j["Number of nodes"] = s.nodes;
  j["Number of links"] = s.links;
  j["Number of nodes in the giant component"] = s.giant_nodes;
  j["Number of links in the giant component"] = s.giant_links;
  j["Diameter"] = s.diameter;
  j["Average degree"] = s.average_degree;
  j["Max degree"] = s.max_degree;
  j["Cluster Coefficient (C)"] = s.clustering;
  j["Mean path length (L)"] = s.mean_path_length;
  if (s.er_clustering) j["Erdos-Renyi average cluster coefficient (C_r)"] = *s.er_clustering;
  if (s.er_mean_path_length) j["Erdos-Renyi average mean path length (L_r)"] = *s.er_mean_path_length;
  if (s.er_clustering && *s.er_clustering > 0.0) j["C/C_r"] = s.clustering / *s.er_clustering;
  if (s.er_mean_path_length && *s.er_mean_path_length > 0.0) j["L/L_r"] = s.mean_path_length / *s.er_mean_path_length;
  if (s.power_law_alpha) j["Power law exponent"] = *s.power_law_alpha;
  j["Path lengths exact"] = s.paths_exact;
  j["Path length BFS sources"] = s.path_sources;
  return j;
}

}  // namespace docgraph
