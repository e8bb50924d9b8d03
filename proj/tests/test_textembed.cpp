#include "doctest.h"

#include <sstream>

#include "docgraph/error.hpp"
#include "docgraph/text.hpp"
#include "docgraph/textembed.hpp"
#include "support.hpp"

using namespace docgraph;

namespace {

std::vector<TokenList> toy_docs() { return {{"a", "b", "a"}, {"b", "c"}, {"c", "c", "d"}}; }

Vocabulary toy_vocab() { return build_vocabulary(toy_docs(), 1, 1.0); }

}  // namespace

TEST_SUITE("textembed") {
  TEST_CASE("document-term weightings") {
    const auto docs = toy_docs();
    const Vocabulary v = toy_vocab();
    const Eigen::MatrixXd count = build_dtm(docs, v, Weighting::count).matrix;
    CHECK(count(0, *v.id("a")) == 2.0);
    CHECK(count(2, *v.id("c")) == 2.0);
    const Eigen::MatrixXd binary = build_dtm(docs, v, Weighting::binary).matrix;
    CHECK(binary(0, *v.id("b")) == 1.0);
    CHECK(binary(0, *v.id("a")) == 1.0);
    const Eigen::MatrixXd tfidf = build_dtm(docs, v, Weighting::tfidf).matrix;
    CHECK(tfidf(0, *v.id("a")) == doctest::Approx(2.0 * std::log(3.0 / 1.0)));
    CHECK(tfidf(1, *v.id("b")) == doctest::Approx(std::log(3.0 / 2.0)));
    CHECK(weighting_from_name(to_string(Weighting::tfidf)) == Weighting::tfidf);
  }

  TEST_CASE("dense top columns keep the most frequent terms") {
    const auto dtm = build_dtm(toy_docs(), toy_vocab(), Weighting::count);
    const Eigen::MatrixXd top = dense_top_columns(dtm, 2);
    CHECK(top.cols() == 2);
    // b and c both occur in two documents.
    CHECK(top.col(0) == Eigen::MatrixXd(dtm.matrix).col(1));
    CHECK(top.col(1) == Eigen::MatrixXd(dtm.matrix).col(2));
    CHECK(dense_top_columns(dtm, 100).cols() == 4);
  }

  TEST_CASE("lda conditional") {
    const double doc[] = {1, 0};
    const double word[] = {1, 0};
    const double total[] = {2, 0};
    const Eigen::VectorXd p = lda_conditional(doc, word, total, 0.1, 0.1, 2);
    CHECK(p(0) == doctest::Approx(0.55));
    CHECK(p(1) == doctest::Approx(0.05));
    CHECK(p(0) / p.sum() == doctest::Approx(0.9167).epsilon(1e-4));
  }

  TEST_CASE("lda with no sweeps is uniform") {
    const auto dtm = build_dtm(toy_docs(), toy_vocab(), Weighting::count);
    LdaConfig cfg;
    cfg.topics = 4;
    cfg.iterations = 0;
    const TopicModel m = lda_fit(dtm, cfg);
    CHECK(m.theta.isApprox(Eigen::MatrixXd::Constant(3, 4, 0.25)));
    CHECK(m.beta.isApprox(Eigen::MatrixXd::Constant(4, 4, 0.25)));
  }

  TEST_CASE("lda rows are distributions") {
    const auto p = testing::planted_lda(3, 30, 60, 40, 2);
    const Vocabulary v = build_vocabulary(p.docs, 1, 1.0);
    LdaConfig cfg;
    cfg.topics = 20;
    cfg.iterations = 30;
    cfg.burn_in = 10;
    std::vector<std::string> warnings;
    const TopicModel m = lda_fit(build_dtm(p.docs, v, Weighting::count), cfg, &warnings);
    CHECK(m.theta.rows() == 60);
    CHECK(m.theta.cols() == 20);
    CHECK(m.theta.rowwise().sum().isApprox(Eigen::VectorXd::Ones(60)));
    CHECK(m.beta.rowwise().sum().isApprox(Eigen::VectorXd::Ones(20)));
    CHECK(m.alpha == doctest::Approx(2.5));
    CHECK(warnings.empty());
    CHECK_THROWS_AS(lda_fit(build_dtm(p.docs, v, Weighting::tfidf), cfg), ValidationError);
  }

  TEST_CASE("single-topic corpus gives one dominant topic") {
    TokenList words;
    for (int i = 0; i < 60; ++i) words.push_back("w" + std::to_string(i % 30));
    std::vector<TokenList> docs(10, words);
    const Vocabulary v = build_vocabulary(docs, 1, 1.0);
    LdaConfig cfg;
    cfg.topics = 3;
    cfg.alpha = 0.1;
    cfg.iterations = 100;
    cfg.burn_in = 50;
    cfg.seed = 4;
    const TopicModel m = lda_fit(build_dtm(docs, v, Weighting::count), cfg);
    Eigen::Index first = 0;
    m.theta.row(0).maxCoeff(&first);
    for (Eigen::Index d = 0; d < m.theta.rows(); ++d) {
      Eigen::Index k = 0;
      m.theta.row(d).maxCoeff(&k);
      CHECK(k == first);
    }
  }

  TEST_CASE("lda is seed deterministic") {
    const auto p = testing::planted_lda(3, 30, 30, 30, 9);
    const Vocabulary v = build_vocabulary(p.docs, 1, 1.0);
    LdaConfig cfg;
    cfg.topics = 3;
    cfg.iterations = 20;
    cfg.burn_in = 5;
    cfg.seed = 12;
    const auto dtm = build_dtm(p.docs, v, Weighting::count);
    CHECK(lda_fit(dtm, cfg).theta == lda_fit(dtm, cfg).theta);
  }

  TEST_CASE("topic relative importance") {
    Eigen::MatrixXd theta(4, 2);
    theta << 0.2, 0.8, 0.2, 0.8, 0.0, 1.0, 0.0, 1.0;
    const auto imp = topic_relative_importance(theta, {"g", "g", "h", "h"});
    // Group share 0.2 against a corpus share of 0.1.
    CHECK(imp.values(0, 0) == doctest::Approx(2.0));
    const auto one = topic_relative_importance(theta, {"all", "all", "all", "all"});
    CHECK(one.values.isApprox(Eigen::MatrixXd::Ones(1, 2)));

    Rng rng(3);
    Eigen::MatrixXd t = testing::random_matrix(30, 5, rng).array().abs();
    t = t.array().colwise() / t.rowwise().sum().array();
    std::vector<std::string> labels;
    for (int i = 0; i < 30; ++i) labels.push_back("g" + std::to_string(i % 4));
    const auto r = topic_relative_importance(t, labels);
    for (Eigen::Index k = 0; k < 5; ++k) {
      double weighted = 0.0;
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        const double size = static_cast<double>(std::count(labels.begin(), labels.end(), r.groups[g]));
        weighted += size * r.values(static_cast<Eigen::Index>(g), k);
      }
      CHECK(weighted / 30.0 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("pvdm basics") {
    const double zero[] = {0.0, 0.0, 0.0};
    CHECK(negative_sampling_loss(0.0, zero) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));

    std::vector<std::vector<int>> docs{{0, 1, 2, 3}, {3, 2, 1}};
    PvdmConfig cfg;
    cfg.epochs = 0;
    cfg.dim = 8;
    cfg.seed = 5;
    const Eigen::MatrixXd init = pvdm_fit(docs, 4, cfg);
    CHECK(init.rows() == 2);
    CHECK(init.cols() == 8);
    CHECK(init.cwiseAbs().maxCoeff() <= 0.5 / 8);
    CHECK(pvdm_fit(docs, 4, cfg) == init);
    cfg.epochs = 2;
    CHECK(pvdm_fit(docs, 4, cfg) != init);
  }

  TEST_CASE("pvdm pulls duplicate documents together") {
    Rng rng(21);
    std::vector<std::vector<int>> docs;
    for (int d = 0; d < 24; ++d) {
      std::vector<int> doc;
      const int base = (d % 6) * 10;
      for (int i = 0; i < 60; ++i) doc.push_back(base + static_cast<int>(rng.below(10)));
      docs.push_back(doc);
    }
    docs.push_back(docs[0]);
    PvdmConfig cfg;
    cfg.dim = 16;
    cfg.window = 3;
    cfg.epochs = 40;
    cfg.seed = 2;
    const Eigen::MatrixXd v = pvdm_fit(docs, 60, cfg);
    const Eigen::MatrixXd u = v.rowwise().normalized();
    const Eigen::MatrixXd cos = u * u.transpose();
    const Eigen::Index n = cos.rows();
    const double off_mean = (cos.sum() - cos.trace()) / static_cast<double>(n * (n - 1));
    CHECK(cos(0, n - 1) > off_mean);
  }

  TEST_CASE("embedding io") {
    const auto dir = testing::temp_dir("emb");
    {
      std::ofstream out(dir / "e.tsv");
      out << "A1\t1\t2\t3\t4\nA2\t0.5\t0.25\t-1\t2\nA3\t0\t0\t0\t1e-3\n";
    }
    const EmbeddingMatrix e = read_embedding(dir / "e.tsv");
    CHECK(e.values.rows() == 3);
    CHECK(e.values.cols() == 4);
    CHECK(e.ids[1] == "A2");
    CHECK(e.values(1, 1) == 0.25);

    const auto aligned = load_external_embeddings(dir / "e.tsv", {"A3", "A1"});
    CHECK(aligned.ids == std::vector<std::string>{"A3", "A1"});
    CHECK(aligned.values.row(1) == e.values.row(0));
    try {
      load_external_embeddings(dir / "e.tsv", {"A1", "A2", "A9"});
      FAIL("expected missing id error");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("A9") != std::string::npos);
    }

    export_embedding(e, dir / "e.emb", EmbeddingFormat::binary);
    export_embedding(e, dir / "e2.tsv", EmbeddingFormat::tsv);
    const auto b = read_embedding(dir / "e.emb");
    const auto t = read_embedding(dir / "e2.tsv");
    CHECK(b.values == t.values);
    CHECK(b.ids == t.ids);
    CHECK(testing::read_file(dir / "e.emb").substr(0, 4) == "EMB1");
  }

  TEST_CASE("embedding validation") {
    EmbeddingMatrix e{Eigen::MatrixXd::Ones(2, 3), {"a", "a"}, EmbeddingKind::gnn};
    CHECK_THROWS_AS(e.validate(), ValidationError);
    e.ids = {"a"};
    CHECK_THROWS_AS(e.validate(), ValidationError);
    e.ids = {"a", "b"};
    e.values(0, 0) = std::nan("");
    CHECK_THROWS_AS(e.validate(), ValidationError);
    std::istringstream junk("A\t1\t2\nB\t1\n");
    CHECK_THROWS_AS(read_embedding(junk), ValidationError);
  }
}
