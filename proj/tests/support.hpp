#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "docgraph/corpus.hpp"
#include "docgraph/graph.hpp"
#include "docgraph/random.hpp"
#include "json.hpp"

namespace testing {

using docgraph::Edge;
using docgraph::NodeId;

struct Sbm {
  docgraph::CitationGraph graph;
  std::vector<int> block;
  Eigen::MatrixXd features;
};

// Features are the block one-hot plus N(0, noise) entries.
inline Sbm make_sbm(NodeId n, int blocks, double p_in, double p_out, double noise, std::uint64_t seed) {
  docgraph::Rng rng(seed);
  Sbm s;
  for (NodeId v = 0; v < n; ++v) s.block.push_back(static_cast<int>(v % blocks));
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform() < (s.block[u] == s.block[v] ? p_in : p_out)) edges.emplace_back(u, v);
    }
  }
  s.graph = docgraph::CitationGraph::from_undirected(n, edges);
  s.features = Eigen::MatrixXd::Zero(n, blocks);
  for (NodeId v = 0; v < n; ++v) {
    s.features(v, s.block[v]) = 1.0;
    for (int b = 0; b < blocks; ++b) s.features(v, b) += rng.normal(0.0, noise);
  }
  return s;
}

// Path 0-1-...-(n-1).
inline docgraph::CitationGraph path_graph(NodeId n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return docgraph::CitationGraph::from_undirected(n, e);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, docgraph::Rng& rng, double sd = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, sd);
  }
  return m;
}

// Connected random graph: a random spanning tree plus extra edges.
inline docgraph::CitationGraph random_connected_graph(NodeId n, std::size_t extra, docgraph::Rng& rng) {
  std::vector<Edge> e;
  for (NodeId v = 1; v < n; ++v) e.emplace_back(static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(v))), v);
  for (std::size_t k = 0; k < extra; ++k) {
    const auto u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    const auto v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    if (u != v) e.emplace_back(u, v);
  }
  return docgraph::CitationGraph::from_undirected(n, e);
}

struct PlantedLda {
  std::vector<std::vector<std::string>> docs;
  Eigen::MatrixXd beta;  // K x V over word ids "w00".."wVV"
};

// Each topic owns a disjoint band of V/K words with most of its mass and
// spreads the rest uniformly.
inline PlantedLda planted_lda(int topics, int vocab, int docs, int length, std::uint64_t seed) {
  docgraph::Rng rng(seed);
  PlantedLda p;
  p.beta = Eigen::MatrixXd::Constant(topics, vocab, 0.02 / vocab);
  const int band = vocab / topics;
  for (int k = 0; k < topics; ++k) {
    for (int w = k * band; w < (k + 1) * band; ++w) p.beta(k, w) += 0.98 / band;
  }
  auto word = [](int w) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "w%02d", w);
    return std::string(buf);
  };
  for (int d = 0; d < docs; ++d) {
    // Mostly one topic with a minority share of a second one.
    const int main = static_cast<int>(rng.below(static_cast<std::uint64_t>(topics)));
    const int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(topics)));
    std::vector<std::string> doc;
    for (int i = 0; i < length; ++i) {
      const int k = rng.uniform() < 0.8 ? main : other;
      double u = rng.uniform();
      int w = 0;
      while (w + 1 < vocab && u >= p.beta(k, w)) u -= p.beta(k, w++);
      doc.push_back(word(w));
    }
    p.docs.push_back(std::move(doc));
  }
  return p;
}

// Small citation corpus with three journals that cite mostly within their
// own journal and write about their own topic words.
inline std::vector<nlohmann::json> synthetic_records(int n, std::uint64_t seed) {
  docgraph::Rng rng(seed);
  const std::vector<std::vector<std::string>> words{
      {"network", "graph", "citation", "node", "link", "cluster", "community", "degree"},
      {"protein", "cell", "gene", "molecule", "enzyme", "tissue", "receptor", "membrane"},
      {"market", "price", "trade", "policy", "inflation", "labor", "capital", "growth"}};
  const std::vector<std::string> journals{"J Networks", "J Biology", "J Economics"};
  const std::vector<std::string> fields{"Computer Science", "Medicine", "Economics"};
  const std::vector<std::string> countries{"DE", "FR", "US", "JP"};
  std::vector<nlohmann::json> out;
  for (int i = 0; i < n; ++i) {
    const int g = i % 3;
    auto pick = [&](int topic) { return words[topic][rng.below(words[topic].size())]; };
    std::string title = pick(g) + " " + pick(g) + " analysis";
    std::string abstract;
    for (int w = 0; w < 30; ++w) abstract += pick(rng.uniform() < 0.85 ? g : static_cast<int>(rng.below(3))) + " ";
    abstract += "we study " + std::to_string(i) + " samples.";
    nlohmann::json j;
    j["id"] = "A" + std::to_string(i);
    j["title"] = title;
    j["abstract"] = abstract;
    j["keywords"] = {pick(g)};
    const int authors = 1 + static_cast<int>(rng.below(3));
    j["authors"] = nlohmann::json::array();
    j["affiliations"] = nlohmann::json::array();
    for (int a = 0; a < authors; ++a) {
      j["authors"].push_back("au" + std::to_string(rng.below(12)));
      const auto inst = rng.below(6);
      j["affiliations"].push_back({"inst" + std::to_string(inst), countries[inst % countries.size()]});
    }
    j["journal"] = journals[g];
    j["field_label"] = fields[g];
    const int year = 2005 + i % 10;
    j["year"] = year;
    j["subject_areas"] = {fields[g]};
    nlohmann::json cites = nlohmann::json::object();
    std::int64_t total = 0;
    for (int y = year; y <= 2014; ++y) {
      const auto c = static_cast<std::int64_t>(rng.below(4));
      cites[std::to_string(y)] = c;
      total += c;
    }
    j["citations_per_year"] = cites;
    j["total_citations"] = total;
    j["references"] = nlohmann::json::array();
    for (int r = 0; r < 4 && i > 3; ++r) {
      int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
      if (rng.uniform() < 0.8) target = target - target % 3 + g;
      if (target < i) j["references"].push_back("A" + std::to_string(target));
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
  std::ofstream out(path);
  for (const auto& r : records) out << r.dump() << '\n';
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("docgraph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
