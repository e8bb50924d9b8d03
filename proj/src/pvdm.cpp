#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "docgraph/error.hpp"
#include "docgraph/random.hpp"
#include "docgraph/textembed.hpp"

namespace docgraph {

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Cumulative unigram^0.75 distribution.
std::vector<double> noise_distribution(const std::vector<std::vector<int>>& docs, std::size_t vocab_size) {
  std::vector<double> counts(vocab_size, 0.0);
  for (const auto& d : docs) {
    for (int w : d) counts[static_cast<std::size_t>(w)] += 1.0;
  }
  std::vector<double> cdf(vocab_size);
  double sum = 0.0;
  for (std::size_t w = 0; w < vocab_size; ++w) {
    sum += std::pow(counts[w], 0.75);
    cdf[w] = sum;
  }
  for (auto& c : cdf) c /= sum;
  return cdf;
}

}  // namespace

std::vector<std::vector<int>> encode_documents(const std::vector<TokenList>& docs, const Vocabulary& vocab) {
  std::vector<std::vector<int>> out(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& t : docs[i]) {
      if (auto id = vocab.id(t)) out[i].push_back(static_cast<int>(*id));
    }
  }
  return out;
}

double negative_sampling_loss(double positive_logit, std::span<const double> negative_logits) {
  double loss = -log_sigmoid(positive_logit);
  for (double s : negative_logits) loss -= log_sigmoid(-s);
  return loss;
}

DenseMatrix pvdm_fit(const std::vector<std::vector<int>>& docs, std::size_t vocab_size, const PvdmConfig& cfg) {
  if (cfg.dim < 1) throw ValidationError("pvdm: dim must be at least 1");
  if (cfg.window < 1) throw ValidationError("pvdm: window must be at least 1");
  if (cfg.negatives < 0 || cfg.epochs < 0) throw ValidationError("pvdm: negatives and epochs must be >= 0");
  for (const auto& d : docs) {
    for (int w : d) {
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) throw ValidationError("pvdm: token id out of range");
    }
  }
  const Eigen::Index dim = cfg.dim;
  const auto n = static_cast<Eigen::Index>(docs.size());
  const auto V = static_cast<Eigen::Index>(vocab_size);
  const Eigen::Index span_len = 2 * cfg.window;
  const Eigen::Index input = dim * (1 + span_len);
  const Eigen::Index pad = V;

  const Rng root(cfg.seed);
  Rng init = root.substream("init");
  // One vector per column.
  DenseMatrix doc_vec(dim, n), word_vec(dim, V + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) doc_vec(i, j) = (init.uniform() - 0.5) / static_cast<double>(dim);
  }
  for (Eigen::Index j = 0; j <= V; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) word_vec(i, j) = (init.uniform() - 0.5) / static_cast<double>(dim);
  }
  if (cfg.epochs == 0 || V == 0) return doc_vec.transpose();

  DenseMatrix out_vec = DenseMatrix::Zero(input, V);
  const std::vector<double> cdf = noise_distribution(docs, vocab_size);
  Rng rng = root.substream("train");
  auto draw = [&] {
    const double u = rng.uniform();
    return static_cast<Eigen::Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  std::size_t total_words = 0;
  for (const auto& d : docs) total_words += d.size();
  const double total_steps = static_cast<double>(total_words) * cfg.epochs;
  double step = 0.0;

  Eigen::VectorXd h(input), grad(input);
  std::vector<Eigen::Index> context(static_cast<std::size_t>(span_len));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index d = 0; d < n; ++d) {
      const auto& words = docs[static_cast<std::size_t>(d)];
      const auto len = static_cast<Eigen::Index>(words.size());
      for (Eigen::Index pos = 0; pos < len; ++pos) {
        const double lr = std::max(cfg.min_learning_rate, cfg.learning_rate * (1.0 - step / total_steps));
        step += 1.0;
        std::size_t c = 0;
        for (Eigen::Index off = -cfg.window; off <= cfg.window; ++off) {
          if (off == 0) continue;
          const Eigen::Index p = pos + off;
          context[c++] = (p < 0 || p >= len) ? pad : words[static_cast<std::size_t>(p)];
        }
        h.head(dim) = doc_vec.col(d);
        for (std::size_t s = 0; s < context.size(); ++s) {
          h.segment(dim * static_cast<Eigen::Index>(s + 1), dim) = word_vec.col(context[s]);
        }
        grad.setZero();
        const Eigen::Index center = words[static_cast<std::size_t>(pos)];
        for (int s = 0; s <= cfg.negatives; ++s) {
          Eigen::Index target = center;
          double label = 1.0;
          if (s > 0) {
            target = draw();
            if (target == center) continue;
            label = 0.0;
          }
          const double g = lr * (label - sigmoid(out_vec.col(target).dot(h)));
          grad += g * out_vec.col(target);
          out_vec.col(target) += g * h;
        }
        doc_vec.col(d) += grad.head(dim);
        for (std::size_t s = 0; s < context.size(); ++s) {
          word_vec.col(context[s]) += grad.segment(dim * static_cast<Eigen::Index>(s + 1), dim);
        }
      }
    }
  }
  DenseMatrix result = doc_vec.transpose();
  if (!result.allFinite()) throw std::runtime_error("pvdm: training produced non-finite vectors");
  return result;
}

}  // namespace docgraph
