#include "docgraph/linkpred.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "docgraph/error.hpp"
#include "docgraph/metrics.hpp"

namespace docgraph::eval {

std::vector<Edge> sample_negatives(NodeId n, const PairSet& edges, std::size_t count, Rng& rng, const PairSet* exclude) {
  const std::uint64_t pairs = n < 2 ? 0 : static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  const std::uint64_t blocked = edges.size() + (exclude ? exclude->size() : 0);
  auto usable = [&](NodeId u, NodeId v) { return !edges.contains(u, v) && !(exclude && exclude->contains(u, v)); };

  std::vector<Edge> out;
  out.reserve(count);
  // Rejection sampling is fast while non-edges dominate; otherwise enumerate.
  if (pairs > 4 * (blocked + count)) {
    PairSet taken(n);
    while (out.size() < count) {
      NodeId u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      NodeId v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (usable(u, v) && taken.insert(u, v)) out.emplace_back(u, v);
    }
    return out;
  }
  std::vector<Edge> pool;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (usable(u, v)) pool.emplace_back(u, v);
    }
  }
  if (count > pool.size()) {
    throw ValidationError("sample_negatives: requested " + std::to_string(count) + " negatives but only " +
                          std::to_string(pool.size()) + " non-edges are available");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    out.push_back(pool[i]);
  }
  return out;
}

std::vector<Edge> sample_negatives(const CitationGraph& g, std::size_t count, std::uint64_t seed,
                                   const std::vector<Edge>& exclude) {
  Rng rng(seed);
  const PairSet edges(g.num_nodes(), g.undirected_edges());
  const PairSet ex(g.num_nodes(), exclude);
  return sample_negatives(g.num_nodes(), edges, count, rng, &ex);
}

EdgeSplit split_edges(const CitationGraph& g, double val_frac, double test_frac, std::uint64_t seed) {
  if (!(val_frac > 0.0 && val_frac < 1.0) || !(test_frac > 0.0 && test_frac < 1.0) || val_frac + test_frac >= 1.0) {
    throw ValidationError("split fractions must lie in (0, 1) and sum below 1");
  }
  EdgeSplit s;
  s.n = g.num_nodes();
  s.seed = seed;
  const Rng root(seed);
  Rng rng = root.substream("split");
  std::vector<Edge> edges = g.undirected_edges();
  rng.shuffle(edges.begin(), edges.end());
  const auto m = static_cast<double>(edges.size());
  const auto n_val = static_cast<std::size_t>(std::floor(m * val_frac));
  const auto n_test = static_cast<std::size_t>(std::floor(m * test_frac));
  s.val.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val),
                edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), edges.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());

  const PairSet all(s.n, g.undirected_edges());
  Rng neg = root.substream("eval-negatives");
  auto both = sample_negatives(s.n, all, n_val + n_test, neg);
  s.val_negatives.assign(both.begin(), both.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test_negatives.assign(both.begin() + static_cast<std::ptrdiff_t>(n_val), both.end());
  return s;
}

OptimizerState OptimizerState::for_parameters(const std::vector<Matrix>& params, AdamConfig cfg) {
  OptimizerState s;
  s.config = cfg;
  for (const Matrix& p : params) {
    s.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i].cwiseAbs2();
    const Matrix m_hat = state.m[i] / bc1;
    const Matrix v_hat = state.v[i] / bc2;
    params[i].array() -= c.lr * m_hat.array() / (v_hat.array().sqrt() + c.eps);
  }
}

LinkScores score_links(const Matrix& z, const std::vector<Edge>& positives, const std::vector<Edge>& negatives) {
  const Eigen::VectorXd p = gnn::inner_product_decode(z, positives);
  const Eigen::VectorXd q = gnn::inner_product_decode(z, negatives);
  std::vector<double> scores(p.data(), p.data() + p.size());
  scores.insert(scores.end(), q.data(), q.data() + q.size());
  std::vector<int> labels(static_cast<std::size_t>(p.size()), 1);
  labels.resize(scores.size(), 0);
  LinkScores s;
  s.auc = auc({p.data(), static_cast<std::size_t>(p.size())}, {q.data(), static_cast<std::size_t>(q.size())});
  s.ap = average_precision(scores, labels);
  return s;
}

TrainResult train_gae(const gnn::EncoderConfig& cfg, const Matrix& features, const EdgeSplit& split,
                      const TrainConfig& train) {
  if (features.rows() != split.n) {
    throw ValidationError("features have " + std::to_string(features.rows()) + " rows but the graph has " +
                          std::to_string(split.n) + " nodes");
  }
  if (split.train.empty()) throw ValidationError("train_gae: no train edges");
  const PairSet train_set(split.n, split.train);
  for (const auto* held : {&split.val, &split.test}) {
    for (const auto& [u, v] : *held) {
      if (train_set.contains(u, v)) throw std::logic_error("held-out edge present in the message-passing graph");
    }
  }

  const Rng root(train.seed);
  const gnn::MessageGraph graph = gnn::MessageGraph::build(split.n, split.train);
  gnn::Encoder encoder(cfg, features.cols(), root.substream("init").seed());
  OptimizerState opt = OptimizerState::for_parameters(encoder.parameters(), AdamConfig{.lr = train.lr});
  Rng negatives = root.substream("negatives");
  Rng dropout = root.substream("dropout");

  TrainResult result;
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    ad::Tape tape;
    const auto params = encoder.bind(tape);
    const ad::Tensor x = tape.constant(features);
    const auto neg = sample_negatives(split.n, train_set, split.train.size(), negatives);
    ad::Tensor loss;
    try {
      const ad::Tensor z =
          encoder.forward(tape, graph, x, params, {.mode = ad::Mode::train, .seed = dropout.next()});
      loss = gnn::reconstruction_loss(z, split.train, neg);
    } catch (const std::domain_error&) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    }
    const double loss_value = loss.value()(0, 0);
    const ad::Gradients grads = tape.backward(loss);
    std::vector<Matrix> g;
    g.reserve(params.size());
    for (const auto& p : params) g.push_back(grads.of(p));
    adam_step(encoder.parameters(), g, opt);

    EpochLog log{epoch, loss_value, std::nullopt};
    if (train.log_every > 0 && epoch % train.log_every == 0 && !split.val.empty()) {
      log.val = score_links(encoder.embed(graph, features), split.val, split.val_negatives);
    }
    result.history.push_back(log);
  }

  result.embedding = encoder.embed(graph, features);
  if (!result.embedding.allFinite()) throw std::runtime_error("training produced non-finite embeddings");
  if (!split.val.empty()) result.val = score_links(result.embedding, split.val, split.val_negatives);
  if (!split.test.empty()) result.test = score_links(result.embedding, split.test, split.test_negatives);
  result.parameters = encoder.parameters();
  return result;
}

}  // namespace docgraph::eval
