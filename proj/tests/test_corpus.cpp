#include "doctest.h"

#include <sstream>

#include "docgraph/corpus.hpp"
#include "docgraph/error.hpp"
#include "docgraph/features.hpp"
#include "docgraph/text.hpp"
#include "support.hpp"

using namespace docgraph;

namespace {

Article article(std::string id, std::string title, std::vector<std::string> keywords, std::string abstract) {
  Article a;
  a.id = std::move(id);
  a.year = 2010;
  a.title = std::move(title);
  a.keywords = std::move(keywords);
  a.abstract = std::move(abstract);
  return a;
}

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus_jsonl(in);
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("jsonl with cross references") {
    const Corpus c = parse(
        R"({"id":"A","year":2010,"title":"t","abstract":"a","total_citations":0,"references":["B","X"]})"
        "\n"
        R"({"id":"B","year":2011,"title":"t","abstract":"a","total_citations":0,"references":["C"]})"
        "\n"
        R"({"id":"C","year":2012,"title":"t","abstract":"a","total_citations":0})"
        "\n");
    CHECK(c.size() == 3);
    CHECK(c.internal_reference_total() == 2);
    CHECK(c.external_reference_total() == 1);
    CHECK(c.index_of("B") == 1u);
    CHECK_FALSE(c.index_of("X"));
  }

  TEST_CASE("missing abstract is a warning") {
    const Corpus c = parse(R"({"id":"A","year":2010,"title":"t","journal":"J","total_citations":0})"
                           "\n");
    CHECK(c[0].abstract.empty());
    REQUIRE(c.warnings().size() == 1);
    CHECK(c.warnings()[0].find("abstract") != std::string::npos);
  }

  TEST_CASE("duplicate ids name both lines") {
    std::string text;
    for (int i = 1; i <= 9; ++i) {
      const std::string id = (i == 4 || i == 9) ? "A1" : "X" + std::to_string(i);
      text += R"({"id":")" + id + R"(","year":2010,"title":"t","abstract":"a","total_citations":0})" + "\n";
    }
    try {
      parse(text);
      FAIL("expected a duplicate-id error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("A1") != std::string::npos);
      CHECK(msg.find("4") != std::string::npos);
      CHECK(msg.find("9") != std::string::npos);
    }
  }

  TEST_CASE("malformed line reports its number") {
    try {
      parse(R"({"id":"A","year":2010})"
            "\n{oops\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("jsonl round trip") {
    const auto records = testing::synthetic_records(12, 3);
    std::string text;
    for (const auto& r : records) text += r.dump() + "\n";
    const Corpus c = parse(text);
    std::ostringstream out;
    write_corpus_jsonl(c, out);
    const Corpus back = parse(out.str());
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(back[i].id == c[i].id);
      CHECK(back[i].references == c[i].references);
      CHECK(back[i].citations_per_year == c[i].citations_per_year);
      CHECK(back[i].affiliations.size() == c[i].affiliations.size());
      CHECK(back[i].field == c[i].field);
    }
  }

  TEST_CASE("csv pair format") {
    const auto dir = testing::temp_dir("csvpair");
    {
      std::ofstream a(dir / "articles.csv");
      a << "id,year,title,abstract,keywords,authors,affiliations,journal,field_label,subject_areas,"
           "citations_per_year,total_citations\n";
      a << "P1,2010,\"Graphs, citations\",An abstract,graph;citation,au1;au2,i1|DE;i2|FR,J,Physics,Phys,"
           "2010:1;2011:2,3\n";
      a << "P2,2011,Second,,kw,au3,i3|US,J,Physics,Phys,,0\n";
      std::ofstream e(dir / "edges.csv");
      e << "src,dst\nP2,P1\nP2,Z9\n";
    }
    const Corpus c = load_corpus(dir / "articles.csv", CorpusFormat::csv_pair);
    REQUIRE(c.size() == 2);
    CHECK(c[0].title == "Graphs, citations");
    CHECK(c[0].affiliations[1].country == "FR");
    CHECK(c[0].citations_per_year.at(2011) == 2);
    CHECK(c[1].references.size() == 2);
    CHECK(c.internal_reference_total() == 1);
  }
}

TEST_SUITE("text") {
  TEST_CASE("porter stemmer") {
    CHECK(porter_stem("journals") == "journal");
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("hopping") == "hop");
    CHECK(porter_stem("generalization") == "gener");
    CHECK(porter_stem("as") == "as");
  }

  TEST_CASE("tokenizer") {
    CHECK(tokenize("We study 5 Journals.") == std::vector<std::string>{"we", "study", "5", "journals"});
    CHECK(tokenize("naïve-model") == std::vector<std::string>{"naïve", "model"});
  }

  TEST_CASE("token layout and stem mapping") {
    std::vector<Article> arts{article("a", "Citation Analysis", {"science"}, "We study 5 journals."),
                              article("b", "", {}, "journal journal"), article("c", "", {}, "journal")};
    const Corpus c = Corpus::from_articles(arts);
    const auto docs = preprocess_corpus(c, {});
    const std::vector<std::string> expected{"citation", "analysis", "citation", "analysis", "citation", "analysis",
                                            "science",  "science",  "science",  "study",    "num",      "journal"};
    CHECK(docs[0] == expected);

    std::vector<Article> flipped{article("a", "Citation Analysis", {"science"}, "We study 5 journals."),
                                 article("b", "", {}, "journals journals"), article("c", "", {}, "journal")};
    const auto docs2 = preprocess_corpus(Corpus::from_articles(flipped), {});
    CHECK(docs2[0].back() == "journals");
  }

  TEST_CASE("all-stopword abstract keeps title and keywords") {
    const Corpus c = Corpus::from_articles({article("a", "Graphs", {"nodes"}, "the and of it is")});
    const auto docs = preprocess_corpus(c, {});
    CHECK(docs[0].size() == 6);
  }

  TEST_CASE("removal phrases") {
    const Corpus c = Corpus::from_articles({article("a", "", {}, "Results hold. (c) 2019 Elsevier Ltd. All rights reserved.")});
    PreprocessConfig cfg;
    cfg.removal_phrases = {"(C) 2019 Elsevier Ltd. All rights reserved."};
    const auto docs = preprocess_corpus(c, cfg);
    CHECK(docs[0] == std::vector<std::string>{"results", "hold"});
  }

  TEST_CASE("vocabulary bounds") {
    std::vector<TokenList> docs(100);
    for (int i = 0; i < 100; ++i) {
      docs[i].push_back("filler");
      if (i < 4) docs[i].push_back("rare");
      if (i < 70) docs[i].push_back("common");
      if (i < 30) docs[i].push_back("mid");
    }
    const Vocabulary v = build_vocabulary(docs, 5, 0.65);
    CHECK_FALSE(v.id("rare"));
    CHECK_FALSE(v.id("common"));
    CHECK_FALSE(v.id("filler"));
    CHECK(v.id("mid") == 0u);
    const Vocabulary all = build_vocabulary(docs, 1, 1.0);
    CHECK(all.tokens() == std::vector<std::string>{"common", "filler", "mid", "rare"});
    CHECK(all.document_frequency(*all.id("rare")) == 4);
    CHECK_THROWS_AS(build_vocabulary(docs, 200, 1.0), ValidationError);
  }
}

TEST_SUITE("features") {
  TEST_CASE("cumulative citations and imputation") {
    Article a;
    a.id = "x";
    a.year = 2000;
    for (int y = 2000; y < 2010; ++y) a.citations_per_year[y] = 1;
    a.total_citations = 10;
    CohortRatios none;
    const auto full = impute_cumulative_citations(a, 2009, none);
    for (int t = 1; t <= 10; ++t) CHECK(full[static_cast<std::size_t>(t - 1)] == t);
    CHECK(full[10] == 10);

    Article b;
    b.id = "y";
    b.year = 2010;
    b.citations_per_year = {{2010, 1}, {2011, 1}, {2012, 2}};
    b.total_citations = 4;
    CohortRatios r;
    for (int t = 2; t <= 10; ++t) r.ratio[static_cast<std::size_t>(t)] = 1.0;
    r.ratio[4] = 1.5;
    const auto imp = impute_cumulative_citations(b, 2012, r);
    CHECK(imp[2] == 4);
    CHECK(imp[3] == 6);

    Article fresh;
    fresh.id = "z";
    fresh.year = 2014;
    std::vector<std::string> warnings;
    const auto zero = impute_cumulative_citations(fresh, 2014, CohortRatios{}, &warnings);
    for (auto v : zero) CHECK(v == 0);
    CHECK(!warnings.empty());
  }

  TEST_CASE("cohort ratios") {
    std::vector<Article> arts;
    for (int i = 0; i < 2; ++i) {
      Article a;
      a.id = "a" + std::to_string(i);
      a.year = 2000;
      a.citations_per_year = {{2000, 2}, {2001, i == 0 ? 2 : 6}};
      a.total_citations = i == 0 ? 4 : 8;
      arts.push_back(a);
    }
    const auto r = compute_cohort_ratios(Corpus::from_articles(arts), 2001);
    REQUIRE(r.ratio[2]);
    CHECK(*r.ratio[2] == doctest::Approx((2.0 + 4.0) / 2.0));
    CHECK_FALSE(r.ratio[3]);
  }

  TEST_CASE("block widths") {
    std::vector<Article> arts;
    const std::vector<std::string> insts{"i1", "i1", "i1", "i2", "i2", "i3", "i4", "i5", "i5", "i6"};
    const std::vector<std::string> authors{"u1", "u1", "u2", "u2", "u3", "u3", "u4", "u5", "u6", "u1"};
    for (int i = 0; i < 10; ++i) {
      Article a;
      a.id = "p" + std::to_string(i);
      a.year = 2000 + i;
      a.authors = {authors[static_cast<std::size_t>(i)]};
      a.affiliations = {{insts[static_cast<std::size_t>(i)], "DE"}};
      a.subject_areas = {"s" + std::to_string(i % 5)};
      arts.push_back(a);
    }
    const Corpus c = Corpus::from_articles(arts);
    Rng rng(1);
    const Eigen::MatrixXd text = testing::random_matrix(10, 16, rng);
    const Eigen::MatrixXd topics = Eigen::MatrixXd::Constant(10, 20, 0.05);
    FeatureConfig cfg;
    cfg.top_affiliations = 3;
    cfg.top_authors = 3;
    const FeatureMatrix f = assemble_features(c, text, topics, cfg);
    CHECK(f.cols() == 61);
    CHECK(f.width(FeatureBlock::affiliation) == 4);
    CHECK(f.width(FeatureBlock::first_author) == 4);
    CHECK(f.width(FeatureBlock::subject_area) == 5);
    CHECK(f.width(FeatureBlock::citations) == 11);
    CHECK(f.values().block(0, 0, 10, 4).rowwise().sum().isApprox(Eigen::VectorXd::Ones(10)));

    cfg.drop = {FeatureBlock::citations};
    CHECK(assemble_features(c, text, topics, cfg).cols() == 50);
    const FeatureMatrix no_text = f.without(FeatureBlock::text);
    CHECK_FALSE(no_text.has(FeatureBlock::text));
    CHECK(no_text.cols() == 45);
    for (auto b : all_feature_blocks) {
      if (b != FeatureBlock::text) CHECK(no_text.has(b));
    }
    const FeatureMatrix rows = f.select_rows({3, 1});
    CHECK(rows.values().row(0) == f.values().row(3));
  }

  TEST_CASE("block names") {
    for (auto b : all_feature_blocks) CHECK(feature_block_from_name(to_string(b)) == b);
    CHECK(feature_block_from_name("author") == FeatureBlock::first_author);
    CHECK_THROWS_AS(feature_block_from_name("colour"), ValidationError);
  }
}
