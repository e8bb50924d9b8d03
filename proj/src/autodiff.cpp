#include "docgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace docgraph::ad {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

Tape& tape_of(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (t->tape() == nullptr) throw std::invalid_argument("tensor is not bound to a tape");
    if (tape != nullptr && tape != t->tape()) throw std::invalid_argument("tensors from different tapes");
    tape = t->tape();
  }
  return *tape;
}

enum class Broadcast { same, row, col, scalar };

Broadcast broadcast_kind(const char* op, const Matrix& a, const Matrix& b, bool allow_col) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  if (allow_col && b.cols() == 1 && b.rows() == a.rows()) return Broadcast::col;
  shape_error(op, a, b);
}

// Reduce a gradient of a's shape back onto b's shape.
Matrix reduce_to(const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::same: return g;
    case Broadcast::row: return g.colwise().sum();
    case Broadcast::col: return g.rowwise().sum();
    case Broadcast::scalar: return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

Matrix expand(const Matrix& b, Broadcast kind, Index rows, Index cols) {
  switch (kind) {
    case Broadcast::same: return b;
    case Broadcast::row: return b.replicate(rows, 1);
    case Broadcast::col: return b.replicate(1, cols);
    case Broadcast::scalar: return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

std::uint64_t sign_bits(const Matrix& x) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index i = 0; i < x.size(); ++i) {
    h = (h ^ static_cast<std::uint64_t>(x.data()[i] > 0.0)) * 1099511628211ULL;
  }
  return h;
}

void check_segments(const char* op, const Matrix& x, const IndexList& segment, Index segments) {
  if (static_cast<Index>(segment.size()) != x.rows()) {
    throw std::invalid_argument(std::string(op) + ": segment list length " + std::to_string(segment.size()) +
                                " != rows " + std::to_string(x.rows()));
  }
  for (Index s : segment) {
    if (s < 0 || s >= segments) throw std::out_of_range(std::string(op) + ": segment id out of range");
  }
}

}  // namespace

// ---- Tensor / Tape ----

const Matrix& Tensor::value() const {
  if (tape_ == nullptr) throw std::logic_error("unbound tensor");
  return tape_->value(id_);
}

bool Tensor::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(id_); }

Gradients::Gradients(const Tape& tape) : tape_(&tape), grads_(tape.size()), needs_(tape.size()) {
  for (std::size_t i = 0; i < tape.size(); ++i) needs_[i] = tape.requires_grad(i);
}

Matrix Gradients::of(const Tensor& t) const {
  if (t.tape() != tape_) throw std::invalid_argument("tensor is not on the differentiated tape");
  if (t.id() < grads_.size() && grads_[t.id()].size() != 0) return grads_[t.id()];
  return Matrix::Zero(t.rows(), t.cols());
}

Tensor Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), false, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), true, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::span<const Tensor> inputs, Backward backward) {
  if (!value.allFinite()) throw std::domain_error("non-finite value produced on tape");
  bool needs = false;
  for (const Tensor& t : inputs) {
    if (t.tape() != this) throw std::invalid_argument("input tensor belongs to another tape");
    needs = needs || requires_grad(t.id());
  }
  nodes_.push_back(Node{std::move(value), needs, needs ? std::move(backward) : Backward{}});
  return Tensor(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.tape() != this) throw std::invalid_argument("loss was not produced on this tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward: loss must be scalar, got " + shape(loss.value()));
  Gradients grads(*this);
  if (!requires_grad(loss.id())) return grads;
  grads.grads_[loss.id()] = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || grads.grads_[i].size() == 0) continue;
    node.backward(grads.grads_[i], grads);
  }
  return grads;
}

// ---- primitives ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = tape_of({&a, &b});
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  const Tensor in[] = {a, b};
  return tape.record(a.value() * b.value(), in, [&tape, ia, ib](const Matrix& g, Gradients& grads) {
    grads.accumulate(ia, g * tape.value(ib).transpose());
    grads.accumulate(ib, tape.value(ia).transpose() * g);
  });
}

Tensor spmm(const SparseHandle& s, const Tensor& x) {
  Tape& tape = tape_of({&x});
  if (!s) throw std::invalid_argument("spmm: null sparse operand");
  if (s->cols() != x.rows()) {
    throw std::invalid_argument("spmm: shape mismatch " + std::to_string(s->rows()) + "x" + std::to_string(s->cols()) +
                                " vs " + shape(x.value()));
  }
  const std::size_t ix = x.id();
  const Tensor in[] = {x};
  Matrix out = (*s) * x.value();
  return tape.record(std::move(out), in, [s, ix](const Matrix& g, Gradients& grads) {
    grads.accumulate(ix, s->transpose() * g);
  });
}

Tensor transpose(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const std::size_t ia = a.id();
  const Tensor in[] = {a};
  return tape.record(a.value().transpose(), in,
                     [ia](const Matrix& g, Gradients& grads) { grads.accumulate(ia, g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& tape = tape_of({&a, &b});
  const Broadcast kind = broadcast_kind("add", a.value(), b.value(), false);
  const std::size_t ia = a.id(), ib = b.id();
  const Tensor in[] = {a, b};
  return tape.record(a.value() + expand(b.value(), kind, a.rows(), a.cols()), in,
                     [ia, ib, kind](const Matrix& g, Gradients& grads) {
                       grads.accumulate(ia, g);
                       grads.accumulate(ib, reduce_to(g, kind));
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& tape = tape_of({&a, &b});
  const Broadcast kind = broadcast_kind("sub", a.value(), b.value(), false);
  const std::size_t ia = a.id(), ib = b.id();
  const Tensor in[] = {a, b};
  return tape.record(a.value() - expand(b.value(), kind, a.rows(), a.cols()), in,
                     [ia, ib, kind](const Matrix& g, Gradients& grads) {
                       grads.accumulate(ia, g);
                       grads.accumulate(ib, -reduce_to(g, kind));
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape& tape = tape_of({&a, &b});
  const Broadcast kind = broadcast_kind("mul", a.value(), b.value(), true);
  const std::size_t ia = a.id(), ib = b.id();
  const Tensor in[] = {a, b};
  Matrix bx = expand(b.value(), kind, a.rows(), a.cols());
  Matrix out = a.value().cwiseProduct(bx);
  return tape.record(std::move(out), in, [&tape, ia, ib, kind, bx = std::move(bx)](const Matrix& g, Gradients& grads) {
    grads.accumulate(ia, g.cwiseProduct(bx));
    grads.accumulate(ib, reduce_to(g.cwiseProduct(tape.value(ia)), kind));
  });
}

Tensor scale(const Tensor& a, double c) {
  Tape& tape = tape_of({&a});
  const std::size_t ia = a.id();
  const Tensor in[] = {a};
  return tape.record(a.value() * c, in, [ia, c](const Matrix& g, Gradients& grads) { grads.accumulate(ia, g * c); });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& tape = tape_of({&parts[0]});
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const Tensor& p : parts) {
    if (p.tape() != &tape) throw std::invalid_argument("concat_cols: tensors from different tapes");
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, Index>> blocks;
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    blocks.emplace_back(p.id(), p.cols());
    offset += p.cols();
  }
  return tape.record(std::move(out), parts, [blocks](const Matrix& g, Gradients& grads) {
    Index off = 0;
    for (const auto& [id, width] : blocks) {
      grads.accumulate(id, g.middleCols(off, width));
      off += width;
    }
  });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  Tape& tape = tape_of({&a});
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols: column range out of bounds");
  const std::size_t ia = a.id();
  const Index rows = a.rows(), cols = a.cols();
  const Tensor in[] = {a};
  return tape.record(a.value().middleCols(start, count), in,
                     [ia, rows, cols, start, count](const Matrix& g, Gradients& grads) {
                       Matrix full = Matrix::Zero(rows, cols);
                       full.middleCols(start, count) = g;
                       grads.accumulate(ia, full);
                     });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor leaky_relu(const Tensor& a, double slope) {
  Tape& tape = tape_of({&a});
  tape.note_branch(sign_bits(a.value()));
  const std::size_t ia = a.id();
  const Tensor in[] = {a};
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return tape.record(std::move(out), in, [&tape, ia, slope](const Matrix& g, Gradients& grads) {
    const Matrix& x = tape.value(ia);
    grads.accumulate(ia, g.cwiseProduct(x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; })));
  });
}

Tensor elu(const Tensor& a, double alpha) {
  Tape& tape = tape_of({&a});
  const std::size_t ia = a.id();
  const Tensor in[] = {a};
  Matrix out = a.value().unaryExpr([alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); });
  return tape.record(std::move(out), in, [&tape, ia, alpha](const Matrix& g, Gradients& grads) {
    const Matrix& x = tape.value(ia);
    grads.accumulate(ia, g.cwiseProduct(x.unaryExpr([alpha](double v) { return v > 0.0 ? 1.0 : alpha * std::exp(v); })));
  });
}

Tensor tanh(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const Tensor in[] = {a};
  Matrix out = a.value().array().tanh().matrix();
  const std::size_t ia = a.id();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [&tape, ia, self](const Matrix& g, Gradients& grads) {
    const Matrix& y = tape.value(self);
    grads.accumulate(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Tensor sigmoid(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const Tensor in[] = {a};
  Matrix out = a.value().unaryExpr([](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  });
  const std::size_t ia = a.id();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), in, [&tape, ia, self](const Matrix& g, Gradients& grads) {
    const Matrix& y = tape.value(self);
    grads.accumulate(ia, g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Tensor row_l2_normalize(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const Matrix& x = a.value();
  Eigen::VectorXd norms = x.rowwise().norm();
  std::uint64_t zero_rows = 0;
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    if (norms(i) > 0.0) {
      out.row(i) = x.row(i) / norms(i);
    } else {
      zero_rows = zero_rows * 31 + static_cast<std::uint64_t>(i + 1);
    }
  }
  tape.note_branch(zero_rows);
  const std::size_t ia = a.id();
  const std::size_t self = tape.size();
  const Tensor in[] = {a};
  return tape.record(std::move(out), in, [&tape, ia, self, norms](const Matrix& g, Gradients& grads) {
    const Matrix& y = tape.value(self);
    Matrix dx = Matrix::Zero(y.rows(), y.cols());
    for (Index i = 0; i < y.rows(); ++i) {
      if (norms(i) > 0.0) {
        dx.row(i) = (g.row(i) - y.row(i) * g.row(i).dot(y.row(i))) / norms(i);
      }
    }
    grads.accumulate(ia, dx);
  });
}

Tensor row_sum(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const std::size_t ia = a.id();
  const Index cols = a.cols();
  const Tensor in[] = {a};
  return tape.record(a.value().rowwise().sum(), in,
                     [ia, cols](const Matrix& g, Gradients& grads) { grads.accumulate(ia, g.replicate(1, cols)); });
}

Tensor reduce_sum(const Tensor& a) {
  Tape& tape = tape_of({&a});
  const std::size_t ia = a.id();
  const Index rows = a.rows(), cols = a.cols();
  const Tensor in[] = {a};
  return tape.record(Matrix::Constant(1, 1, a.value().sum()), in, [ia, rows, cols](const Matrix& g, Gradients& grads) {
    grads.accumulate(ia, Matrix::Constant(rows, cols, g(0, 0)));
  });
}

Tensor reduce_mean(const Tensor& a) {
  Tape& tape = tape_of({&a});
  if (a.value().size() == 0) throw std::invalid_argument("reduce_mean: empty tensor");
  const std::size_t ia = a.id();
  const Index rows = a.rows(), cols = a.cols();
  const double inv = 1.0 / static_cast<double>(a.value().size());
  const Tensor in[] = {a};
  return tape.record(Matrix::Constant(1, 1, a.value().mean()), in,
                     [ia, rows, cols, inv](const Matrix& g, Gradients& grads) {
                       grads.accumulate(ia, Matrix::Constant(rows, cols, g(0, 0) * inv));
                     });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode) {
  Tape& tape = tape_of({&x, &gamma, &beta});
  const Index n = x.rows(), c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c) shape_error("batch_norm", x.value(), gamma.value());
  if (beta.rows() != 1 || beta.cols() != c) shape_error("batch_norm", x.value(), beta.value());
  if (state.running_mean.size() != c) throw std::invalid_argument("batch_norm: state has wrong feature count");
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  const Tensor in[] = {x, gamma, beta};

  if (mode == Mode::eval) {
    const Eigen::RowVectorXd inv_std = (state.running_var.array() + state.eps).rsqrt().matrix();
    Matrix xhat = (x.value().rowwise() - state.running_mean).array().rowwise() * inv_std.array();
    Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
    return tape.record(std::move(out), in, [&tape, ix, ig, ib, inv_std, xhat](const Matrix& g, Gradients& grads) {
      const Eigen::RowVectorXd gam = tape.value(ig).row(0);
      grads.accumulate(ix, (g.array().rowwise() * (gam.array() * inv_std.array())).matrix());
      grads.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
      grads.accumulate(ib, g.colwise().sum());
    });
  }

  if (n < 2) throw std::invalid_argument("batch_norm: training mode needs at least 2 rows");
  const Eigen::RowVectorXd mean = x.value().colwise().mean();
  const Matrix centered = x.value().rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().mean().matrix();
  const Eigen::RowVectorXd inv_std = (var.array() + state.eps).rsqrt().matrix();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();

  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mean;
  state.running_var = state.momentum * state.running_var + (1.0 - state.momentum) * unbias * var;

  return tape.record(std::move(out), in, [&tape, ix, ig, ib, inv_std, xhat, n](const Matrix& g, Gradients& grads) {
    const Eigen::RowVectorXd gam = tape.value(ig).row(0);
    const Matrix dxhat = g.array().rowwise() * gam.array();
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
    const double nn = static_cast<double>(n);
    Matrix dx = ((dxhat * nn).rowwise() - sum_d).matrix() - (xhat.array().rowwise() * sum_dx.array()).matrix();
    dx = (dx.array().rowwise() * (inv_std.array() / nn)).matrix();
    grads.accumulate(ix, dx);
    grads.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
    grads.accumulate(ib, g.colwise().sum());
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng, Mode mode) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (mode == Mode::eval || p == 0.0) return x;
  Tape& tape = tape_of({&x});
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? 0.0 : keep;
  const std::size_t ix = x.id();
  const Tensor in[] = {x};
  Matrix out = x.value().cwiseProduct(mask);
  return tape.record(std::move(out), in, [ix, mask = std::move(mask)](const Matrix& g, Gradients& grads) {
    grads.accumulate(ix, g.cwiseProduct(mask));
  });
}

Tensor gather_rows(const Tensor& a, const IndexList& rows) {
  Tape& tape = tape_of({&a});
  const Index n = a.rows();
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n) throw std::out_of_range("gather_rows: row index out of range");
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  const std::size_t ia = a.id();
  const Index cols = a.cols();
  const Tensor in[] = {a};
  return tape.record(std::move(out), in, [ia, rows, n, cols](const Matrix& g, Gradients& grads) {
    Matrix dx = Matrix::Zero(n, cols);
    for (std::size_t i = 0; i < rows.size(); ++i) dx.row(rows[i]) += g.row(static_cast<Index>(i));
    grads.accumulate(ia, dx);
  });
}

Tensor scatter_rows(const Tensor& a, const IndexList& rows, Index n) {
  Tape& tape = tape_of({&a});
  if (static_cast<Index>(rows.size()) != a.rows()) throw std::invalid_argument("scatter_rows: index count != rows");
  Matrix out = Matrix::Zero(n, a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n) throw std::out_of_range("scatter_rows: row index out of range");
    out.row(rows[i]) += a.value().row(static_cast<Index>(i));
  }
  const std::size_t ia = a.id();
  const Tensor in[] = {a};
  return tape.record(std::move(out), in, [ia, rows](const Matrix& g, Gradients& grads) {
    Matrix dx(static_cast<Index>(rows.size()), g.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) dx.row(static_cast<Index>(i)) = g.row(rows[i]);
    grads.accumulate(ia, dx);
  });
}

Tensor segment_softmax(const Tensor& scores, const IndexList& segment, Index segments) {
  Tape& tape = tape_of({&scores});
  const Matrix& s = scores.value();
  check_segments("segment_softmax", s, segment, segments);
  const Index e = s.rows(), h = s.cols();
  Matrix seg_max = Matrix::Constant(segments, h, -std::numeric_limits<double>::infinity());
  for (Index i = 0; i < e; ++i) seg_max.row(segment[i]) = seg_max.row(segment[i]).cwiseMax(s.row(i));
  Matrix out(e, h);
  Matrix seg_sum = Matrix::Zero(segments, h);
  for (Index i = 0; i < e; ++i) {
    out.row(i) = (s.row(i) - seg_max.row(segment[i])).array().exp().matrix();
    seg_sum.row(segment[i]) += out.row(i);
  }
  for (Index i = 0; i < e; ++i) out.row(i) = out.row(i).cwiseQuotient(seg_sum.row(segment[i]));

  const std::size_t is = scores.id();
  const std::size_t self = tape.size();
  const Tensor in[] = {scores};
  return tape.record(std::move(out), in, [&tape, is, self, segment, segments](const Matrix& g, Gradients& grads) {
    const Matrix& y = tape.value(self);
    Matrix dot = Matrix::Zero(segments, y.cols());
    for (Index i = 0; i < y.rows(); ++i) dot.row(segment[i]) += g.row(i).cwiseProduct(y.row(i));
    Matrix dx(y.rows(), y.cols());
    for (Index i = 0; i < y.rows(); ++i) dx.row(i) = y.row(i).cwiseProduct(g.row(i) - dot.row(segment[i]));
    grads.accumulate(is, dx);
  });
}

Tensor segment_sum(const Tensor& x, const IndexList& segment, Index segments) {
  Tape& tape = tape_of({&x});
  check_segments("segment_sum", x.value(), segment, segments);
  Matrix out = Matrix::Zero(segments, x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(segment[i]) += x.value().row(i);
  const std::size_t ix = x.id();
  const Tensor in[] = {x};
  return tape.record(std::move(out), in, [ix, segment](const Matrix& g, Gradients& grads) {
    Matrix dx(static_cast<Index>(segment.size()), g.cols());
    for (std::size_t i = 0; i < segment.size(); ++i) dx.row(static_cast<Index>(i)) = g.row(segment[i]);
    grads.accumulate(ix, dx);
  });
}

Tensor segment_mean(const Tensor& x, const IndexList& segment, Index segments) {
  Tape& tape = tape_of({&x});
  check_segments("segment_mean", x.value(), segment, segments);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(segments);
  for (Index s : segment) count(s) += 1.0;
  Matrix out = Matrix::Zero(segments, x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(segment[i]) += x.value().row(i) / count(segment[i]);
  const std::size_t ix = x.id();
  const Tensor in[] = {x};
  return tape.record(std::move(out), in, [ix, segment, count](const Matrix& g, Gradients& grads) {
    Matrix dx(static_cast<Index>(segment.size()), g.cols());
    for (std::size_t i = 0; i < segment.size(); ++i) {
      dx.row(static_cast<Index>(i)) = g.row(segment[i]) / count(segment[i]);
    }
    grads.accumulate(ix, dx);
  });
}

IndexList top_k_by_score(const Tensor& scores, Index k) {
  const Matrix& s = scores.value();
  if (s.cols() != 1) throw std::invalid_argument("top_k_by_score: scores must be a column vector");
  const Index n = s.rows();
  k = std::clamp<Index>(k, 0, n);
  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&s](Index a, Index b) { return s(a, 0) > s(b, 0); });
  order.resize(static_cast<std::size_t>(k));
  std::uint64_t h = 0;
  for (Index i : order) h = h * 1315423911ULL + static_cast<std::uint64_t>(i + 1);
  if (scores.tape() != nullptr) scores.tape()->note_branch(h);
  return order;
}

Tensor bce_with_logits(const Tensor& logits, const Matrix& labels) {
  Tape& tape = tape_of({&logits});
  const Matrix& x = logits.value();
  if (labels.rows() != x.rows() || labels.cols() != x.cols()) shape_error("bce_with_logits", x, labels);
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i], y = labels.data()[i];
    out.data()[i] = std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v)));
  }
  const std::size_t ix = logits.id();
  const Tensor in[] = {logits};
  return tape.record(std::move(out), in, [&tape, ix, labels](const Matrix& g, Gradients& grads) {
    const Matrix& v = tape.value(ix);
    Matrix sig = v.unaryExpr([](double z) {
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    });
    grads.accumulate(ix, g.cwiseProduct(sig - labels));
  });
}

Op op_from_name(std::string_view name) {
  static constexpr std::pair<std::string_view, Op> table[] = {
      {"matmul", Op::matmul},
      {"add", Op::add},
      {"sub", Op::sub},
      {"mul", Op::mul},
      {"transpose", Op::transpose},
      {"concat-columns", Op::concat_cols},
      {"relu", Op::relu},
      {"leaky-relu", Op::leaky_relu},
      {"elu", Op::elu},
      {"tanh", Op::tanh},
      {"sigmoid", Op::sigmoid},
      {"row-l2-normalize", Op::row_l2_normalize},
      {"row-sum", Op::row_sum},
      {"reduce-sum", Op::reduce_sum},
      {"reduce-mean", Op::reduce_mean},
  };
  for (const auto& [n, op] : table) {
    if (n == name) return op;
  }
  throw std::invalid_argument("unknown op: " + std::string(name));
}

Tensor apply(Op op, std::span<const Tensor> inputs) {
  auto arity = [&](std::size_t k) {
    if (inputs.size() != k) throw std::invalid_argument("apply: wrong number of inputs");
  };
  switch (op) {
    case Op::matmul: arity(2); return matmul(inputs[0], inputs[1]);
    case Op::add: arity(2); return add(inputs[0], inputs[1]);
    case Op::sub: arity(2); return sub(inputs[0], inputs[1]);
    case Op::mul: arity(2); return mul(inputs[0], inputs[1]);
    case Op::concat_cols: return concat_cols(inputs);
    case Op::transpose: arity(1); return transpose(inputs[0]);
    case Op::relu: arity(1); return relu(inputs[0]);
    case Op::leaky_relu: arity(1); return leaky_relu(inputs[0]);
    case Op::elu: arity(1); return elu(inputs[0]);
    case Op::tanh: arity(1); return tanh(inputs[0]);
    case Op::sigmoid: arity(1); return sigmoid(inputs[0]);
    case Op::row_l2_normalize: arity(1); return row_l2_normalize(inputs[0]);
    case Op::row_sum: arity(1); return row_sum(inputs[0]);
    case Op::reduce_sum: arity(1); return reduce_sum(inputs[0]);
    case Op::reduce_mean: arity(1); return reduce_mean(inputs[0]);
  }
  throw std::invalid_argument("apply: unknown op");
}

// ---- gradient check ----

GradientCheckResult gradient_check(const ScalarFunction& f, std::span<const Matrix> inputs, double eps) {
  std::vector<Matrix> xs(inputs.begin(), inputs.end());

  auto evaluate = [&f](const std::vector<Matrix>& at) -> std::pair<double, std::uint64_t> {
    Tape tape;
    std::vector<Tensor> vars;
    vars.reserve(at.size());
    for (const Matrix& m : at) vars.push_back(tape.variable(m));
    const Tensor out = f(tape, vars);
    if (out.rows() != 1 || out.cols() != 1) throw std::invalid_argument("gradient_check: function must be scalar");
    return {out.value()(0, 0), tape.branch_signature()};
  };

  Tape tape;
  std::vector<Tensor> vars;
  for (const Matrix& m : xs) vars.push_back(tape.variable(m));
  const Tensor loss = f(tape, vars);
  const std::uint64_t base_signature = tape.branch_signature();
  const Gradients grads = tape.backward(loss);

  GradientCheckResult result;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Matrix analytic = grads.of(vars[k]);
    for (Index j = 0; j < xs[k].cols(); ++j) {
      for (Index i = 0; i < xs[k].rows(); ++i) {
        const double orig = xs[k](i, j);
        xs[k](i, j) = orig + eps;
        const auto [fp, sp] = evaluate(xs);
        xs[k](i, j) = orig - eps;
        const auto [fm, sm] = evaluate(xs);
        xs[k](i, j) = orig;
        if (sp != base_signature || sm != base_signature) {
          result.skipped.push_back({k, i, j});
          continue;
        }
        const double fd = (fp - fm) / (2.0 * eps);
        const double ad = analytic(i, j);
        const double err = std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd));
        result.max_relative_error = std::max(result.max_relative_error, err);
        ++result.checked;
      }
    }
  }
  return result;
}

GradientCheckResult gradient_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Matrix& x, double eps) {
  const Matrix in[] = {x};
  return gradient_check([&f](Tape& tape, std::span<const Tensor> v) { return f(tape, v[0]); }, in, eps);
}

}  // namespace docgraph::ad
