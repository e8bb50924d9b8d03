#include "doctest.h"

#include "docgraph/error.hpp"
#include "docgraph/graph.hpp"
#include "docgraph/graph_stats.hpp"
#include "support.hpp"

using namespace docgraph;

namespace {

Article node(std::string id, std::vector<std::string> refs) {
  Article a;
  a.id = std::move(id);
  a.year = 2010;
  a.references = std::move(refs);
  return a;
}

CitationGraph triangle() { return CitationGraph::from_undirected(3, {{0, 1}, {1, 2}, {0, 2}}); }

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("citation graph from corpus") {
    const Corpus c = Corpus::from_articles({node("A", {"B", "B", "Q"}), node("B", {}), node("C", {})});
    const auto build = build_citation_graph(c);
    CHECK(build.graph.num_nodes() == 2);
    CHECK(build.graph.num_edges() == 1);
    CHECK(build.graph.num_directed_edges() == 1);
    CHECK(build.excluded == std::vector<std::size_t>{2});
    CHECK(build.graph.node_article() == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("mutual citations collapse in the symmetric view") {
    const auto g = CitationGraph::from_directed(3, {{0, 1}, {1, 0}, {1, 2}, {2, 2}});
    CHECK(g.num_directed_edges() == 3);
    CHECK(g.num_edges() == 2);
    CHECK(g.has_edge(1, 0));
    CHECK(g.degree(1) == 2);
  }

  TEST_CASE("edge list csv") {
    const auto dir = testing::temp_dir("edges");
    {
      std::ofstream out(dir / "g.csv");
      out << "src,dst\nx,y\ny,z\nx,z\n";
    }
    const auto lg = load_edge_csv(dir / "g.csv");
    CHECK(lg.ids == std::vector<std::string>{"x", "y", "z"});
    CHECK(lg.graph.num_edges() == 3);
  }

  TEST_CASE("hand cases") {
    const GraphStats t = graph_stats(triangle(), 1);
    CHECK(t.clustering == 1.0);
    CHECK(t.mean_path_length == 1.0);
    CHECK(t.diameter == 1);
    const GraphStats p = graph_stats(testing::path_graph(3), 1);
    CHECK(p.clustering == 0.0);
    CHECK(p.mean_path_length == doctest::Approx(4.0 / 3.0));
    CHECK(p.diameter == 2);
    CHECK(p.average_degree == doctest::Approx(4.0 / 3.0));
    CHECK(p.max_degree == 2);
  }

  TEST_CASE("giant component") {
    const auto g = CitationGraph::from_undirected(7, {{0, 1}, {1, 2}, {2, 3}, {4, 5}});
    NodeId count = 0;
    const auto comp = connected_components(g, &count);
    CHECK(count == 3);
    CHECK(comp[0] == comp[3]);
    CHECK(comp[0] != comp[4]);
    CHECK(giant_component(g).size() == 4);
    const GraphStats s = graph_stats(g, 1);
    CHECK(s.giant_nodes == 4);
    CHECK(s.giant_links == 3);
    CHECK(s.diameter == 3);
  }

  TEST_CASE("sampled path lengths approximate exact ones") {
    Rng rng(4);
    const auto g = random_gnm(300, 900, rng);
    StatsOptions sampled;
    sampled.exact_threshold = 10;
    sampled.sampled_sources = 150;
    const GraphStats exact = graph_stats(g, 2);
    const GraphStats approx = graph_stats(g, 2, sampled);
    CHECK(exact.paths_exact);
    CHECK_FALSE(approx.paths_exact);
    CHECK(approx.path_sources == 150);
    CHECK(approx.mean_path_length == doctest::Approx(exact.mean_path_length).epsilon(0.05));
  }

  TEST_CASE("random graph generator") {
    Rng rng(8);
    const auto g = random_gnm(50, 200, rng);
    CHECK(g.num_nodes() == 50);
    CHECK(g.num_edges() == 200);
    const auto empty = random_gnm(10, 0, rng);
    CHECK(average_clustering(empty) == 0.0);
  }

  TEST_CASE("erdos-renyi baseline") {
    const ErBaseline er = er_baseline(50, 200, 100, 3);
    const double p = 200.0 / 1225.0;
    CHECK(std::abs(er.clustering - p) <= 3.0 * er.clustering_stderr);
    CHECK(er.replications == 100);
    const ErBaseline none = er_baseline(20, 0, 5, 3);
    CHECK(none.clustering == 0.0);
  }

  TEST_CASE("power-law fit") {
    const double d[] = {1, 2, 4};
    CHECK(fit_power_law(d, 1.0) == doctest::Approx(1.0 + 3.0 / std::log(8.0)));
    CHECK(fit_power_law(d, 1.0) == doctest::Approx(2.4427).epsilon(1e-4));
    const double flat[] = {1, 1, 1};
    CHECK_THROWS_AS(fit_power_law(flat, 1.0), ValidationError);
  }

  TEST_CASE("dataset arithmetic") {
    CHECK(2.0 * 68797 / 16578 == doctest::Approx(8.3).epsilon(0.001));
    CHECK(68797.0 / (16578.0 * 16577.0 / 2.0) == doctest::Approx(0.0005).epsilon(0.01));
  }

  TEST_CASE("stats json") {
    GraphStats s = graph_stats(triangle(), 1);
    s.power_law_alpha = 2.5;
    const auto j = stats_to_json(s);
    CHECK(j.at("Number of nodes") == 3);
    CHECK(j.contains("Cluster Coefficient (C)"));
  }
}
