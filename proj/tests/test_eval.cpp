#include "doctest.h"

#include <sstream>

#include "docgraph/error.hpp"
#include "docgraph/experiment.hpp"
#include "docgraph/linkpred.hpp"
#include "docgraph/metrics.hpp"
#include "support.hpp"

using namespace docgraph;
using namespace docgraph::eval;

TEST_SUITE("metrics") {
  TEST_CASE("auc examples") {
    const double pos[] = {0.9, 0.4};
    const double neg[] = {0.5, 0.1};
    CHECK(auc(pos, neg) == 0.75);
    const double hi[] = {3, 4};
    const double lo[] = {1, 2};
    CHECK(auc(hi, lo) == 1.0);
    CHECK(auc(lo, lo) == 0.5);
  }

  TEST_CASE("average precision examples") {
    const int ranked[] = {1, 0, 1};
    CHECK(average_precision(ranked) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    const int perfect[] = {1, 1, 0, 0};
    CHECK(average_precision(perfect) == 1.0);
    const double scores[] = {0.1, 0.9, 0.5};
    const int labels[] = {1, 1, 0};
    CHECK(average_precision(scores, labels) == doctest::Approx(5.0 / 6.0));
  }

  TEST_CASE("confusion metrics") {
    // tp=3, fp=1, fn=1, tn=5
    const double s[] = {0.9, 0.8, 0.7, 0.6, 0.2, 0.6, 0.1, 0.1, 0.1, 0.1};
    const int y[] = {1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
    const Confusion c = confusion_metrics(s, y, 0.65);
    CHECK(c.tp == 3);
    CHECK(c.fp == 0);
    const Confusion d = confusion_metrics(s, y, 0.6);
    CHECK(d.tp == 3);
    CHECK(d.fp == 2);
    const double s2[] = {0.9, 0.8, 0.7, 0.6, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1};
    const Confusion e = confusion_metrics(s2, y, 0.5);
    CHECK(e.tp == 3);
    CHECK(e.fp == 1);
    CHECK(e.fn == 1);
    CHECK(e.tn == 5);
    CHECK(*e.precision == 0.75);
    CHECK(*e.recall == 0.75);
    CHECK(*e.fpr == doctest::Approx(1.0 / 6.0));
    CHECK(*confusion_metrics(s2, y, -1.0).recall == 1.0);
    CHECK_FALSE(confusion_metrics(s2, y, 2.0).precision);
  }

  TEST_CASE("roc trapezoid equals mann-whitney") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const auto n = 2 + rng.below(40);
      std::vector<double> scores;
      std::vector<int> labels;
      std::vector<double> pos, neg;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(rng.below(8)) / 8.0;
        const int y = i == 0 ? 1 : (i == 1 ? 0 : static_cast<int>(rng.below(2)));
        scores.push_back(s);
        labels.push_back(y);
        (y ? pos : neg).push_back(s);
      }
      CHECK(trapezoid_area(roc_curve(scores, labels)) == doctest::Approx(auc(pos, neg)).epsilon(1e-12));
    }
  }

  TEST_CASE("summary") {
    const double v[] = {1.0, 3.0};
    const Summary s = summarize(v);
    CHECK(s.mean == 2.0);
    CHECK(*s.std == doctest::Approx(std::sqrt(2.0)));
    const double same[] = {0.7, 0.7, 0.7};
    CHECK(*summarize(same).std == 0.0);
    const double one[] = {0.4};
    CHECK_FALSE(summarize(one).std);
  }
}

TEST_SUITE("linkpred") {
  TEST_CASE("split sizes") {
    Rng rng(1);
    const auto big = random_gnm(16578, 68797, rng);
    const EdgeSplit s = split_edges(big, 0.05, 0.10, 3);
    CHECK(s.val.size() == 3439);
    CHECK(s.test.size() == 6879);
    CHECK(s.train.size() == 68797 - 3439 - 6879);
    CHECK(s.val_negatives.size() == s.val.size());
    CHECK(s.test_negatives.size() == s.test.size());

    const auto small = random_gnm(8, 10, rng);
    const EdgeSplit t = split_edges(small, 0.05, 0.10, 3);
    CHECK(t.val.empty());
    CHECK(t.test.size() == 1);
    CHECK(t.train.size() == 9);
  }

  TEST_CASE("splits are seeded and disjoint") {
    const auto sbm = testing::make_sbm(120, 3, 0.15, 0.01, 0.1, 5);
    const EdgeSplit a = split_edges(sbm.graph, 0.05, 0.10, 42);
    const EdgeSplit b = split_edges(sbm.graph, 0.05, 0.10, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(a.test_negatives == b.test_negatives);
    const PairSet train(a.n, a.train);
    for (const auto& [u, v] : a.test) CHECK_FALSE(train.contains(u, v));
    for (const auto& [u, v] : a.val) CHECK_FALSE(train.contains(u, v));
    for (const auto& [u, v] : a.test_negatives) CHECK_FALSE(sbm.graph.has_edge(u, v));
  }

  TEST_CASE("negative sampling") {
    const auto tri = CitationGraph::from_undirected(3, {{0, 1}, {1, 2}, {0, 2}});
    CHECK_THROWS_AS(sample_negatives(tri, 1, 1), ValidationError);
    const auto path = testing::path_graph(4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto neg = sample_negatives(path, 2, seed);
      REQUIRE(neg.size() == 2);
      CHECK(PairSet(4, neg).size() == 2);
      for (const auto& [u, v] : neg) {
        CHECK(u != v);
        CHECK_FALSE(path.has_edge(u, v));
      }
    }
  }

  TEST_CASE("adam first step") {
    std::vector<Matrix> params{Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    auto state = OptimizerState::for_parameters(params);
    adam_step(params, {Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.5)}, state);
    CHECK(params[0](0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(params[0] == params[1]);
    std::vector<Matrix> still{Matrix::Constant(2, 2, 3.0)};
    auto s2 = OptimizerState::for_parameters(still);
    adam_step(still, {Matrix::Zero(2, 2)}, s2);
    CHECK(still[0] == Matrix::Constant(2, 2, 3.0));
  }

  TEST_CASE("training edge cases") {
    const auto sbm = testing::make_sbm(60, 3, 0.3, 0.02, 0.1, 2);
    const EdgeSplit split = split_edges(sbm.graph, 0.05, 0.10, 1);
    const auto cfg = gnn::EncoderConfig::defaults(gnn::EncoderKind::gcn);
    TrainConfig t;
    t.epochs = 0;
    t.seed = 9;
    const TrainResult zero = train_gae(cfg, sbm.features, split, t);
    CHECK(zero.history.empty());
    gnn::Encoder init(cfg, sbm.features.cols(), Rng(9).substream("init").seed());
    CHECK(zero.embedding == init.embed(gnn::MessageGraph::build(split.n, split.train), sbm.features));

    t.epochs = 5;
    t.lr = 0.0;
    const TrainResult frozen = train_gae(cfg, sbm.features, split, t);
    REQUIRE(frozen.parameters.size() == init.parameters().size());
    for (std::size_t i = 0; i < frozen.parameters.size(); ++i) CHECK(frozen.parameters[i] == init.parameters()[i]);

    t.lr = 0.01;
    t.epochs = 20;
    t.log_every = 5;
    const TrainResult a = train_gae(cfg, sbm.features, split, t);
    const TrainResult b = train_gae(cfg, sbm.features, split, t);
    CHECK(a.embedding == b.embedding);
    CHECK(a.history.size() == 20);
    CHECK(a.history.back().loss < a.history.front().loss);
  }

  TEST_CASE("score_links on a perfect embedding") {
    Matrix z(4, 2);
    z << 1, 0, 1, 0, 0, 1, 0, 1;
    const LinkScores s = score_links(z, {{0, 1}, {2, 3}}, {{0, 2}, {1, 3}});
    CHECK(s.auc == 1.0);
    CHECK(s.ap == 1.0);
  }
}

TEST_SUITE("experiment") {
  TEST_CASE("minimal grid") {
    const auto sbm = testing::make_sbm(60, 3, 0.3, 0.02, 0.1, 2);
    ExperimentConfig cfg;
    cfg.runs = 2;
    cfg.train.epochs = 10;
    const auto report = run_matrix(sbm.graph, {{"tfidf", sbm.features}},
                                   {gnn::EncoderConfig::defaults(gnn::EncoderKind::gcn)}, cfg);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].runs.size() == 2);
    CHECK(report.rows[0].auc.std.has_value());
    CHECK(report.rows[0].model == "GCN");
    CHECK(report.rows[0].embedding.rows() == 60);

    cfg.jobs = 3;
    const auto parallel = run_matrix(sbm.graph, {{"tfidf", sbm.features}},
                                     {gnn::EncoderConfig::defaults(gnn::EncoderKind::gcn)}, cfg);
    CHECK(parallel.rows[0].auc.mean == report.rows[0].auc.mean);
    CHECK(parallel.rows[0].embedding == report.rows[0].embedding);

    std::ostringstream csv;
    write_report_csv(report, csv);
    CHECK(csv.str().rfind("text_encoding,model,auc_mean", 0) == 0);
    std::ostringstream txt;
    render_report(report, txt);
    CHECK(txt.str().find("TF-IDF") != std::string::npos);
    CHECK(report_to_json(report)["rows"].size() == 1);
  }

  TEST_CASE("ablation rows") {
    const auto sbm = testing::make_sbm(45, 3, 0.3, 0.02, 0.1, 6);
    Eigen::MatrixXd values(45, 5);
    values << sbm.features, Eigen::MatrixXd::Ones(45, 2);
    const FeatureMatrix f(values, {{FeatureBlock::topics, 0, 3}, {FeatureBlock::year, 3, 1}, {FeatureBlock::text, 4, 1}});
    ExperimentConfig cfg;
    cfg.runs = 1;
    cfg.train.epochs = 5;
    const auto enc = gnn::EncoderConfig::defaults(gnn::EncoderKind::sage);
    const auto base = run_matrix(sbm.graph, {{"pvdm", values}}, {enc}, cfg);
    const auto abl = ablation_run(sbm.graph, f, "pvdm", enc, {std::nullopt, FeatureBlock::topics, FeatureBlock::text}, cfg);
    REQUIRE(abl.rows.size() == 3);
    CHECK(abl.rows[0].group == "None");
    CHECK(abl.rows[1].group == "Topic Distribution");
    CHECK(abl.rows[2].group == "D2V embedding");
    CHECK(abl.rows[0].auc.mean == base.rows[0].auc.mean);
    CHECK(f.without(FeatureBlock::topics).cols() == f.cols() - 3);
    CHECK_THROWS_AS(ablation_run(sbm.graph, f, "pvdm", enc, {FeatureBlock::citations}, cfg), ValidationError);
  }

  TEST_CASE("report formatting") {
    CHECK(format_mean_std({0.912, 0.0149}) == "0.91 (0.01)");
    CHECK(format_mean_std({0.5, std::nullopt}) == "0.50 (-)");
    CHECK(ablation_label(FeatureBlock::text, "external") == "BERT embedding");
    CHECK(ablation_label(FeatureBlock::citations, "tfidf") == "citations at 1:10");
  }
}
