#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "docgraph/random.hpp"

// Reverse-mode automatic differentiation over dense rank-2 values with
// read-only sparse operands. A Tape records every primitive in execution
// order; backward() walks it in reverse.
namespace docgraph::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseHandle = std::shared_ptr<const SparseMatrix>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

enum class Mode { train, eval };

class Tape;
class Gradients;

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Backward = std::function<void(const Matrix& grad_out, Gradients& grads)>;

class Gradients {
 public:
  explicit Gradients(const Tape& tape);

  // Gradient of the loss w.r.t. t; zero-filled when t was not reached.
  Matrix of(const Tensor& t) const;

  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    if (!needs_[id]) return;
    if (grads_[id].size() == 0) {
      grads_[id] = g;
    } else {
      grads_[id] += g;
    }
  }

 private:
  friend class Tape;
  const Tape* tape_;
  std::vector<Matrix> grads_;
  std::vector<bool> needs_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);

  // Appends a node. `backward` receives the gradient w.r.t. `value`.
  Tensor record(Matrix value, std::span<const Tensor> inputs, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  Gradients backward(const Tensor& loss) const;

  // Hash of every branch decision taken by piecewise primitives (ReLU sign,
  // zero-row normalization, top-k selection). Two evaluations with equal
  // signatures lie on the same smooth piece.
  std::uint64_t branch_signature() const { return branch_hash_; }
  void note_branch(std::uint64_t bits) {
    branch_hash_ ^= bits + 0x9e3779b97f4a7c15ULL + (branch_hash_ << 6) + (branch_hash_ >> 2);
  }

 private:
  struct Node {
    Matrix value;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
  std::uint64_t branch_hash_ = 0;
};

// ---- primitive catalog ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor spmm(const SparseHandle& s, const Tensor& x);
Tensor transpose(const Tensor& a);

// Broadcasting: b may match a, be a 1xc row, an nx1 column (mul only) or 1x1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, Index start, Index count);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor elu(const Tensor& a, double alpha = 1.0);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Zero rows map to zero rows.
Tensor row_l2_normalize(const Tensor& a);
Tensor row_sum(const Tensor& a);
Tensor reduce_sum(const Tensor& a);
Tensor reduce_mean(const Tensor& a);

struct BatchNormState {
  Eigen::RowVectorXd running_mean;
  Eigen::RowVectorXd running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  explicit BatchNormState(Index features = 0)
      : running_mean(Eigen::RowVectorXd::Zero(features)), running_var(Eigen::RowVectorXd::Ones(features)) {}
};

// Per-feature normalization; gamma and beta are 1xc. Train mode uses batch
// statistics and updates the running averages.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode);

Tensor dropout(const Tensor& x, double p, Rng& rng, Mode mode);

Tensor gather_rows(const Tensor& a, const IndexList& rows);
// Inverse of gather: row i of `a` lands at rows[i] of an n-row zero matrix.
Tensor scatter_rows(const Tensor& a, const IndexList& rows, Index n);

// Per-column softmax over rows sharing a segment id.
Tensor segment_softmax(const Tensor& scores, const IndexList& segment, Index segments);
Tensor segment_sum(const Tensor& x, const IndexList& segment, Index segments);
// Empty segments yield zero rows.
Tensor segment_mean(const Tensor& x, const IndexList& segment, Index segments);

// Indices of the k largest entries of a column vector, in descending score
// order (ties broken by lower index). Not differentiable; the selection is
// folded into the tape's branch signature.
IndexList top_k_by_score(const Tensor& scores, Index k);

// Elementwise -[y ln s(x) + (1-y) ln(1-s(x))], computed stably.
Tensor bce_with_logits(const Tensor& logits, const Matrix& labels);

// Name-based dispatch for the attribute-free primitives.
enum class Op {
  matmul, add, sub, mul, transpose, concat_cols, relu, leaky_relu, elu, tanh,
  sigmoid, row_l2_normalize, row_sum, reduce_sum, reduce_mean
};
Op op_from_name(std::string_view name);
Tensor apply(Op op, std::span<const Tensor> inputs);

// ---- finite-difference check ----

struct SkippedCoordinate {
  std::size_t input;
  Index row;
  Index col;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::vector<SkippedCoordinate> skipped;
};

using ScalarFunction = std::function<Tensor(Tape&, std::span<const Tensor>)>;

// Central differences against backward(). Per coordinate the error is
// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|). Coordinates whose +/-eps
// perturbation crosses a kink are skipped and reported.
GradientCheckResult gradient_check(const ScalarFunction& f, std::span<const Matrix> inputs, double eps = 1e-5);
GradientCheckResult gradient_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Matrix& x,
                                   double eps = 1e-5);

}  // namespace docgraph::ad
