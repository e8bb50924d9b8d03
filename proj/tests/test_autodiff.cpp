#include "doctest.h"

#include "docgraph/autodiff.hpp"
#include "support.hpp"

using namespace docgraph;
using ad::Matrix;
using ad::Tape;
using ad::Tensor;

TEST_SUITE("autodiff") {
  TEST_CASE("primitive values") {
    Tape tape;
    Matrix x(1, 2);
    x << -1, 2;
    const Tensor r = ad::relu(tape.constant(x));
    CHECK(r.value()(0, 0) == 0.0);
    CHECK(r.value()(0, 1) == 2.0);
    CHECK(ad::sigmoid(tape.constant(Matrix::Zero(1, 1))).value()(0, 0) == 0.5);
    const Tensor bce = ad::bce_with_logits(tape.constant(Matrix::Zero(1, 1)), Matrix::Ones(1, 1));
    CHECK(bce.value()(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("bce is stable for large logits") {
    Tape tape;
    Matrix z(1, 2);
    z << 800, -800;
    Matrix y(1, 2);
    y << 1, 0;
    const Tensor l = ad::bce_with_logits(tape.constant(z), y);
    CHECK(l.value().allFinite());
    CHECK(l.value().maxCoeff() < 1e-300);
  }

  TEST_CASE("mean of a 2x2 matrix") {
    Tape tape;
    const Tensor w = tape.variable(Matrix::Random(2, 2));
    const auto g = tape.backward(ad::reduce_mean(w));
    CHECK(g.of(w).isApprox(Matrix::Constant(2, 2, 0.25)));
  }

  TEST_CASE("unreachable parameter has zero gradient") {
    Tape tape;
    const Tensor w = tape.variable(Matrix::Ones(2, 3));
    const Tensor x = tape.variable(Matrix::Ones(2, 2));
    const auto g = tape.backward(ad::reduce_sum(x));
    CHECK(g.of(w).rows() == 2);
    CHECK(g.of(w).cols() == 3);
    CHECK(g.of(w).isZero(0.0));
  }

  TEST_CASE("relu subgradient") {
    Tape tape;
    Matrix v(1, 2);
    v << -1, 2;
    const Tensor w = tape.variable(v);
    const auto g = tape.backward(ad::reduce_sum(ad::relu(w)));
    CHECK(g.of(w)(0, 0) == 0.0);
    CHECK(g.of(w)(0, 1) == 1.0);
  }

  TEST_CASE("fan-out accumulates") {
    Tape tape;
    const Tensor x = tape.variable(Matrix::Constant(1, 1, 3.0));
    const Tensor y = ad::mul(x, x);
    const auto g = tape.backward(ad::reduce_sum(ad::add(y, x)));
    CHECK(g.of(x)(0, 0) == doctest::Approx(7.0));
  }

  TEST_CASE("gradient check of x'x") {
    Matrix x(3, 1);
    x << 1, 2, 3;
    const auto r = ad::gradient_check(
        [](Tape&, const Tensor& t) { return ad::reduce_sum(ad::mul(t, t)); }, x);
    CHECK(r.max_relative_error < 1e-7);
    CHECK(r.checked == 3);
    CHECK(r.skipped.empty());
  }

  TEST_CASE("kink coordinates are skipped") {
    Matrix x(1, 3);
    x << 0.0, 1.0, -2.0;
    const auto r = ad::gradient_check([](Tape&, const Tensor& t) { return ad::reduce_sum(ad::relu(t)); }, x);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].col == 0);
    CHECK(r.checked == 2);
    CHECK(r.max_relative_error < 1e-7);
  }

  TEST_CASE("primitive catalog passes gradient checks") {
    Rng rng(3);
    const Matrix a = testing::random_matrix(4, 3, rng);
    const Matrix b = testing::random_matrix(3, 2, rng);
    const Matrix row = testing::random_matrix(1, 3, rng);
    const Matrix col = testing::random_matrix(4, 1, rng);
    const std::vector<std::pair<const char*, ad::ScalarFunction>> cases{
        {"matmul", [](Tape&, std::span<const Tensor> in) { return ad::reduce_sum(ad::tanh(ad::matmul(in[0], in[1]))); }},
        {"add row", [](Tape&, std::span<const Tensor> in) { return ad::reduce_sum(ad::sigmoid(ad::add(in[0], in[2]))); }},
        {"mul col", [](Tape&, std::span<const Tensor> in) { return ad::reduce_sum(ad::tanh(ad::mul(in[0], in[3]))); }},
        {"sub transpose",
         [](Tape&, std::span<const Tensor> in) {
           return ad::reduce_mean(ad::elu(ad::sub(in[1], ad::slice_cols(ad::transpose(in[0]), 0, 2))));
         }},
        {"normalize",
         [](Tape&, std::span<const Tensor> in) { return ad::reduce_sum(ad::mul(ad::row_l2_normalize(in[0]), in[0])); }},
        {"concat",
         [](Tape&, std::span<const Tensor> in) {
           const Tensor parts[] = {in[0], in[3]};
           return ad::reduce_sum(ad::leaky_relu(ad::row_sum(ad::tanh(ad::concat_cols(parts)))));
         }},
        {"segments",
         [](Tape&, std::span<const Tensor> in) {
           const ad::IndexList seg{0, 1, 0, 2};
           const Tensor s = ad::segment_softmax(in[3], seg, 3);
           return ad::reduce_sum(ad::tanh(ad::add(ad::segment_sum(ad::mul(in[0], s), seg, 3),
                                                  ad::segment_mean(in[0], seg, 3))));
         }},
        {"gather scatter",
         [](Tape&, std::span<const Tensor> in) {
           const Tensor g = ad::gather_rows(in[0], {2, 0});
           return ad::reduce_sum(ad::tanh(ad::scatter_rows(ad::scale(g, 1.5), {1, 3}, 4)));
         }},
        {"bce",
         [](Tape&, std::span<const Tensor> in) {
           return ad::reduce_mean(ad::bce_with_logits(ad::matmul(in[0], in[1]), Matrix::Constant(4, 2, 1.0)));
         }},
    };
    const std::vector<Matrix> inputs{a, b, row, col};
    for (const auto& [name, f] : cases) {
      CAPTURE(name);
      const auto r = ad::gradient_check(f, inputs);
      CHECK(r.max_relative_error < 1e-6);
    }
  }

  TEST_CASE("sparse product and batch norm gradients") {
    Rng rng(5);
    auto s = std::make_shared<ad::SparseMatrix>(3, 4);
    s->insert(0, 1) = 0.5;
    s->insert(1, 0) = -1.0;
    s->insert(2, 3) = 2.0;
    s->insert(2, 1) = 0.25;
    s->makeCompressed();
    ad::SparseHandle handle = s;
    const std::vector<Matrix> inputs{testing::random_matrix(4, 2, rng), testing::random_matrix(1, 2, rng),
                                     testing::random_matrix(1, 2, rng)};
    const auto r = ad::gradient_check(
        [&](Tape&, std::span<const Tensor> in) {
          ad::BatchNormState st(2);
          const Tensor y = ad::spmm(handle, in[0]);
          return ad::reduce_sum(ad::tanh(ad::batch_norm(y, in[1], in[2], st, ad::Mode::train)));
        },
        inputs);
    CHECK(r.max_relative_error < 1e-6);
  }

  TEST_CASE("op dispatch by name") {
    Tape tape;
    const Tensor a = tape.constant(Matrix::Constant(1, 1, -2.0));
    const Tensor in[] = {a};
    CHECK(ad::apply(ad::op_from_name("relu"), in).value()(0, 0) == 0.0);
    CHECK_THROWS(ad::op_from_name("nope"));
  }

  TEST_CASE("dropout is the identity in eval mode") {
    Tape tape;
    Rng rng(1);
    const Matrix x = Matrix::Random(5, 5);
    CHECK(ad::dropout(tape.constant(x), 0.5, rng, ad::Mode::eval).value() == x);
    const Matrix y = ad::dropout(tape.constant(x), 0.5, rng, ad::Mode::train).value();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      CHECK((y(i) == 0.0 || y(i) == doctest::Approx(2.0 * x(i))));
    }
  }
}
