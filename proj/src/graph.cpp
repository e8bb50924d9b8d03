#include "docgraph/graph.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "docgraph/csv.hpp"
#include "docgraph/error.hpp"

namespace docgraph {

namespace {

Csr make_csr(NodeId n, const std::vector<Edge>& edges, bool both_directions) {
  Csr csr;
  csr.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : edges) {
    ++csr.offsets[u + 1];
    if (both_directions) ++csr.offsets[v + 1];
  }
  for (NodeId i = 0; i < n; ++i) csr.offsets[i + 1] += csr.offsets[i];
  csr.indices.resize(static_cast<std::size_t>(csr.offsets[n]));
  std::vector<NodeId> fill(csr.offsets.begin(), csr.offsets.end() - 1);
  for (const auto& [u, v] : edges) {
    csr.indices[fill[u]++] = v;
    if (both_directions) csr.indices[fill[v]++] = u;
  }
  for (NodeId i = 0; i < n; ++i) std::sort(csr.indices.begin() + csr.offsets[i], csr.indices.begin() + csr.offsets[i + 1]);
  return csr;
}

void check_range(NodeId n, const std::vector<Edge>& edges) {
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
  }
}

}  // namespace

CitationGraph CitationGraph::from_directed(NodeId n, std::vector<Edge> edges) {
  check_range(n, edges);
  CitationGraph g;
  g.n_ = n;
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.directed_ = std::move(edges);
  for (const auto& [u, v] : g.directed_) g.undirected_.emplace_back(std::min(u, v), std::max(u, v));
  std::sort(g.undirected_.begin(), g.undirected_.end());
  g.undirected_.erase(std::unique(g.undirected_.begin(), g.undirected_.end()), g.undirected_.end());
  g.out_ = make_csr(n, g.directed_, false);
  g.sym_ = make_csr(n, g.undirected_, true);
  return g;
}

CitationGraph CitationGraph::from_undirected(NodeId n, std::vector<Edge> edges) {
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  return from_directed(n, std::move(edges));
}

bool CitationGraph::has_edge(NodeId u, NodeId v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) return false;
  const auto row = sym_.row(u);
  return std::binary_search(row.begin(), row.end(), v);
}

CitationGraphBuild build_citation_graph(const Corpus& corpus) {
  const std::size_t n = corpus.size();
  std::vector<bool> linked(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : corpus.internal_references(i)) {
      if (i == j) continue;
      linked[i] = linked[j] = true;
    }
  }
  CitationGraphBuild out;
  std::vector<NodeId> node_of(n, -1);
  std::vector<std::size_t> node_article;
  for (std::size_t i = 0; i < n; ++i) {
    if (linked[i]) {
      node_of[i] = static_cast<NodeId>(node_article.size());
      node_article.push_back(i);
    } else {
      out.excluded.push_back(i);
    }
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : corpus.internal_references(i)) {
      if (i != j) edges.emplace_back(node_of[i], node_of[j]);
    }
  }
  out.graph = CitationGraph::from_directed(static_cast<NodeId>(node_article.size()), std::move(edges));
  out.graph.set_node_article(std::move(node_article));
  return out;
}

CitationGraph random_gnm(NodeId n, std::size_t m, Rng& rng) {
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  if (n < 0 || m > pairs) throw std::invalid_argument("random_gnm: m exceeds n(n-1)/2");
  std::vector<Edge> edges;
  edges.reserve(m);
  if (m * 2 > pairs) {
    // Dense: partial Fisher-Yates over all pairs.
    std::vector<Edge> all;
    all.reserve(pairs);
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) all.emplace_back(u, v);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
      edges.push_back(all[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (edges.size() < m) {
      NodeId u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      NodeId v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (seen.insert(static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v)).second) {
        edges.emplace_back(u, v);
      }
    }
  }
  return CitationGraph::from_undirected(n, std::move(edges));
}

LabeledGraph load_edge_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list " + path.string());
  LabeledGraph out;
  std::unordered_map<std::string, NodeId> index;
  auto node = [&](const std::string& id) {
    auto [it, added] = index.emplace(id, static_cast<NodeId>(out.ids.size()));
    if (added) out.ids.push_back(id);
    return it->second;
  };
  std::vector<Edge> edges;
  std::vector<std::string> row;
  std::size_t line = 1;
  std::size_t src = 0, dst = 1;
  bool first = true;
  while (true) {
    const std::size_t record_line = line;
    if (!read_csv_record(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (first) {
      first = false;
      const auto s = std::find(row.begin(), row.end(), "src");
      const auto d = std::find(row.begin(), row.end(), "dst");
      if (s != row.end() && d != row.end()) {
        src = static_cast<std::size_t>(s - row.begin());
        dst = static_cast<std::size_t>(d - row.begin());
        continue;
      }
    }
    if (row.size() <= std::max(src, dst) || row[src].empty() || row[dst].empty()) {
      throw ParseError("expected src,dst", record_line);
    }
    const NodeId u = node(row[src]);
    edges.emplace_back(u, node(row[dst]));
  }
  out.graph = CitationGraph::from_directed(static_cast<NodeId>(out.ids.size()), std::move(edges));
  return out;
}

}  // namespace docgraph
