#include "doctest.h"

#include <numeric>

#include "docgraph/gnn.hpp"
#include "support.hpp"

using namespace docgraph;
using ad::Matrix;
using ad::Tape;
using ad::Tensor;
using gnn::MessageGraph;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("normalized adjacency of a path") {
    const auto a = gnn::normalize_adjacency(testing::path_graph(3));
    const Matrix d = Matrix(*a);
    CHECK(d(0, 0) == doctest::Approx(0.5));
    CHECK(d(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(d(0, 1) == doctest::Approx(0.4082).epsilon(1e-4));
    CHECK(d(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(d(0, 2) == 0.0);
    CHECK(d.isApprox(d.transpose()));
    const Matrix single = Matrix(*gnn::normalize_adjacency(1, {}));
    CHECK(single(0, 0) == 1.0);
  }

  TEST_CASE("gcn layer") {
    const auto a = gnn::normalize_adjacency(testing::path_graph(3));
    Tape tape;
    const Tensor h = tape.constant(Matrix::Identity(3, 3));
    const Matrix out = gnn::gcn_layer(a, h, tape.constant(Matrix::Identity(3, 3))).value();
    CHECK(out(0, 0) == doctest::Approx(0.5));
    CHECK(out(0, 1) == doctest::Approx(0.4082).epsilon(1e-4));
    CHECK(out(0, 2) == 0.0);
    CHECK(gnn::gcn_layer(a, h, tape.constant(Matrix::Zero(3, 2))).value().isZero(0.0));
  }

  TEST_CASE("sage mean aggregation") {
    const MessageGraph g = MessageGraph::build(testing::path_graph(3));
    Tape tape;
    const Matrix out =
        gnn::sage_layer(g, tape.constant(col({1, 2, 3})), tape.constant(col({1, 1}))).value();
    CHECK(out(0, 0) == doctest::Approx(3.0));
    CHECK(out(1, 0) == doctest::Approx(4.0));
    CHECK(out(2, 0) == doctest::Approx(5.0));

    const MessageGraph lone = MessageGraph::build(1, {});
    const Matrix iso = gnn::sage_layer(lone, tape.constant(col({5})), tape.constant(Matrix::Identity(2, 2))).value();
    CHECK(iso(0, 0) == 5.0);
    CHECK(iso(0, 1) == 0.0);

    Rng rng(2);
    const MessageGraph r = MessageGraph::build(testing::random_connected_graph(7, 4, rng));
    Matrix x = testing::random_matrix(7, 3, rng);
    x.row(2).setZero();
    x.row(1).setZero();
    const Matrix w = testing::random_matrix(6, 4, rng);
    const Matrix n = gnn::sage_layer(r, tape.constant(x), tape.constant(w), gnn::Activation::relu, true).value();
    for (Eigen::Index i = 0; i < n.rows(); ++i) {
      const double norm = n.row(i).norm();
      CHECK((norm == 0.0 || norm == doctest::Approx(1.0)));
    }
  }

  TEST_CASE("gin aggregation") {
    const MessageGraph g = MessageGraph::build(testing::path_graph(3));
    Tape tape;
    const Tensor h = tape.constant(col({1, 2, 3}));
    const Matrix out = gnn::gin_aggregate(g, h, 0.0).value();
    CHECK(out(0, 0) == 3.0);
    CHECK(out(1, 0) == 6.0);
    CHECK(out(2, 0) == 5.0);
    CHECK(gnn::gin_aggregate(g, h, -1.0).value()(1, 0) == 4.0);
    const MessageGraph empty = MessageGraph::build(3, {});
    CHECK(gnn::gin_aggregate(empty, h, 0.0).value() == h.value());
  }

  TEST_CASE("gat attention") {
    // Star: node 0 with neighbors 1 and 2.
    const MessageGraph g = MessageGraph::build(3, {{0, 1}, {0, 2}});
    Tape tape;
    Rng rng(1);
    const Tensor wh = tape.constant(Matrix::Identity(3, 3));
    const auto res = gnn::gat_head(g, wh, tape.constant(Matrix::Zero(3, 1)), tape.constant(Matrix::Zero(3, 1)), 0.0,
                                   rng, ad::Mode::eval);
    const Matrix& w = res.weights.value();
    for (std::size_t e = 0; e < g.att_dst.size(); ++e) {
      if (g.att_dst[e] == 0) CHECK(w(static_cast<Eigen::Index>(e), 0) == doctest::Approx(1.0 / 3.0));
    }
    // Uniform attention with W = I is the mean over N(v) + {v}.
    const Matrix& out = res.out.value();
    CHECK(out.row(0).isApprox(Eigen::RowVector3d::Constant(1.0 / 3.0)));
    CHECK(out(1, 0) == doctest::Approx(0.5));
    CHECK(out(1, 1) == doctest::Approx(0.5));

    const MessageGraph r = MessageGraph::build(testing::random_connected_graph(9, 8, rng));
    const auto rr = gnn::gat_head(r, tape.constant(testing::random_matrix(9, 4, rng)),
                                  tape.constant(testing::random_matrix(4, 1, rng)),
                                  tape.constant(testing::random_matrix(4, 1, rng)), 0.0, rng, ad::Mode::eval);
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(9);
    for (std::size_t e = 0; e < r.att_dst.size(); ++e) sums(r.att_dst[e]) += rr.weights.value()(static_cast<Eigen::Index>(e), 0);
    CHECK(sums.isApprox(Eigen::VectorXd::Ones(9)));
  }

  TEST_CASE("agnn propagation") {
    const MessageGraph g = MessageGraph::build(4, {{0, 1}, {0, 2}, {0, 3}});
    Tape tape;
    Matrix h(4, 2);
    h << 1, 0, 2, 0, 0, 1, 0, 3;
    const auto flat = gnn::agnn_propagate(g, tape.constant(h), tape.constant(Matrix::Zero(1, 1)));
    CHECK(flat.out.value().row(0).isApprox(h.colwise().mean()));
    const auto sharp = gnn::agnn_propagate(g, tape.constant(h), tape.constant(Matrix::Constant(1, 1, 10.0)));
    // Dense oracle for node 0.
    Eigen::Vector4d score;
    for (int u = 0; u < 4; ++u) score(u) = 10.0 * h.row(0).normalized().dot(h.row(u).normalized());
    const Eigen::Vector4d p = score.array().exp() / score.array().exp().sum();
    Eigen::Vector4d got = Eigen::Vector4d::Zero();
    for (std::size_t e = 0; e < g.att_dst.size(); ++e) {
      if (g.att_dst[e] == 0) got(g.att_src[e]) = sharp.weights.value()(static_cast<Eigen::Index>(e), 0);
    }
    CHECK(got.isApprox(p, 1e-12));
    CHECK(got(0) + got(1) >= 0.95);
  }

  TEST_CASE("gpool selection") {
    Tape tape;
    const auto r = gnn::gpool(tape.constant(col({0.2, 0.9, -0.5})), {{0, 1}, {1, 2}}, tape.constant(Matrix::Ones(1, 1)),
                              1.0 / 3.0);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0] == 1);
    CHECK(r.features.value()(0, 0) == doctest::Approx(0.9 * std::tanh(0.9)));

    Rng rng(4);
    const auto graph = testing::random_connected_graph(10, 6, rng);
    const Matrix x = testing::random_matrix(10, 3, rng);
    const Matrix p = testing::random_matrix(3, 1, rng);
    const auto full = gnn::gpool(tape.constant(x), graph.undirected_edges(), tape.constant(p), 1.0);
    CHECK(full.kept.size() == 10);
    const Eigen::VectorXd y = x * p / p.norm();
    for (std::size_t i = 0; i < full.kept.size(); ++i) {
      const auto v = full.kept[i];
      CHECK(full.features.value().row(static_cast<Eigen::Index>(i)).isApprox(x.row(v) * std::tanh(y(v))));
    }
    const auto half = gnn::gpool(tape.constant(x), graph.undirected_edges(), tape.constant(p), 0.5);
    CHECK(half.kept.size() == 5);
    const Matrix back = ad::scatter_rows(half.features, half.kept, 10).value();
    std::vector<bool> kept(10, false);
    for (auto v : half.kept) kept[static_cast<std::size_t>(v)] = true;
    for (Eigen::Index v = 0; v < 10; ++v) {
      if (!kept[static_cast<std::size_t>(v)]) {
        CHECK(back.row(v).isZero(0.0));
      } else {
        CHECK(!back.row(v).isZero(0.0));
      }
    }
    for (const auto& [a, b] : half.edges) {
      CHECK(a < half.n);
      CHECK(b < half.n);
    }
  }

  TEST_CASE("inner product decoder and loss") {
    Matrix z(3, 2);
    z << 1, 0, 0, 1, 1, 0;
    const Eigen::VectorXd d = gnn::inner_product_decode(z, {{0, 1}, {0, 2}, {2, 0}});
    CHECK(d(0) == 0.5);
    CHECK(d(1) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(d(1) == d(2));
    Tape tape;
    const Tensor zero = tape.constant(Matrix::Zero(4, 3));
    const double loss = gnn::reconstruction_loss(zero, {{0, 1}, {1, 2}}, {{0, 3}, {2, 3}}).value()(0, 0);
    CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    Matrix big(3, 1);
    big << 30, 30, -30;
    CHECK(gnn::reconstruction_loss(tape.constant(big), {{0, 1}}, {{0, 2}}).value()(0, 0) < 1e-12);
  }

  TEST_CASE("one gradient step lowers the loss") {
    Rng rng(8);
    const auto graph = testing::random_connected_graph(6, 3, rng);
    const MessageGraph g = MessageGraph::build(graph);
    const Matrix x = testing::random_matrix(6, 4, rng);
    const std::vector<Edge> pos = graph.undirected_edges();
    std::vector<Edge> neg;
    for (NodeId u = 0; u < 6; ++u) {
      for (NodeId v = u + 1; v < 6; ++v) {
        if (!graph.has_edge(u, v)) neg.emplace_back(u, v);
      }
    }
    for (auto kind : gnn::all_encoders) {
      CAPTURE(gnn::to_string(kind));
      gnn::Encoder enc(gnn::EncoderConfig::defaults(kind), 4, 11);
      auto loss_and_grads = [&](std::vector<Matrix>* grads) {
        Tape tape;
        const Tensor xt = tape.constant(x);
        const auto params = enc.bind(tape);
        const Tensor z = enc.forward(tape, g, xt, params, {});
        const Tensor loss = gnn::reconstruction_loss(z, pos, neg);
        if (grads) {
          const auto gr = tape.backward(loss);
          for (const auto& p : params) grads->push_back(gr.of(p));
        }
        return loss.value()(0, 0);
      };
      std::vector<Matrix> grads;
      const double before = loss_and_grads(&grads);
      for (std::size_t i = 0; i < grads.size(); ++i) enc.parameters()[i] -= 1e-3 * grads[i];
      CHECK(loss_and_grads(nullptr) < before);
    }
  }

  TEST_CASE("eval forward is deterministic") {
    Rng rng(9);
    const auto graph = testing::random_connected_graph(12, 10, rng);
    const MessageGraph g = MessageGraph::build(graph);
    const Matrix x = testing::random_matrix(12, 5, rng);
    for (auto kind : gnn::all_encoders) {
      gnn::Encoder enc(gnn::EncoderConfig::defaults(kind), 5, 3);
      const Matrix a = enc.embed(g, x);
      const Matrix b = enc.embed(g, x);
      CHECK(a == b);
      CHECK(a.rows() == 12);
      CHECK(a.cols() == gnn::EncoderConfig::defaults(kind).out);
    }
  }

  TEST_CASE("encoder configs round-trip through json") {
    for (auto kind : gnn::all_encoders) {
      auto cfg = gnn::EncoderConfig::defaults(kind);
      cfg.dropout = 0.125;
      const auto back = gnn::encoder_config_from_json(gnn::to_json(cfg));
      CHECK(back.kind == kind);
      CHECK(back.dropout == 0.125);
      CHECK(back.out == cfg.out);
      CHECK(gnn::encoder_from_name(gnn::to_string(kind)) == kind);
    }
    CHECK_THROWS(gnn::encoder_from_name("transformer"));
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = testing::temp_dir("ckpt");
    gnn::Encoder enc(gnn::EncoderConfig::defaults(gnn::EncoderKind::gin), 3, 5);
    gnn::save_checkpoint(enc, dir / "gin.ckpt");
    const gnn::Encoder back = gnn::load_checkpoint(dir / "gin.ckpt");
    REQUIRE(back.parameters().size() == enc.parameters().size());
    for (std::size_t i = 0; i < back.parameters().size(); ++i) CHECK(back.parameters()[i] == enc.parameters()[i]);
  }
}
