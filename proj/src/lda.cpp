#include <cassert>
#include <cmath>
#include <map>
#include <numeric>

#include "docgraph/error.hpp"
#include "docgraph/random.hpp"
#include "docgraph/textembed.hpp"

namespace docgraph {

Eigen::VectorXd lda_conditional(std::span<const double> doc_topic, std::span<const double> topic_word,
                                std::span<const double> topic_total, double alpha, double eta,
                                std::size_t vocab_size) {
  const auto k = static_cast<Eigen::Index>(doc_topic.size());
  Eigen::VectorXd p(k);
  const double v_eta = static_cast<double>(vocab_size) * eta;
  for (Eigen::Index t = 0; t < k; ++t) {
    const auto i = static_cast<std::size_t>(t);
    p(t) = (doc_topic[i] + alpha) * (topic_word[i] + eta) / (topic_total[i] + v_eta);
  }
  return p;
}

TopicModel lda_fit(const DocumentTermMatrix& dtm, const LdaConfig& cfg, std::vector<std::string>* warnings) {
  if (dtm.weighting != Weighting::count) throw ValidationError("lda_fit needs a count-weighted document-term matrix");
  if (cfg.topics < 2) throw ValidationError("lda_fit: topics must be at least 2");
  if (cfg.iterations < 0 || cfg.burn_in < 0) throw ValidationError("lda_fit: iterations and burn-in must be >= 0");
  const int K = cfg.topics;
  const auto n = static_cast<std::size_t>(dtm.matrix.rows());
  const auto V = static_cast<std::size_t>(dtm.matrix.cols());
  if (V == 0) throw ValidationError("lda_fit: empty vocabulary");
  if (static_cast<std::size_t>(K) > V && warnings) {
    warnings->push_back("lda: " + std::to_string(K) + " topics exceed the vocabulary size " + std::to_string(V));
  }

  TopicModel model;
  model.topics = K;
  model.alpha = cfg.alpha.value_or(50.0 / K);
  model.eta = cfg.eta;
  const double alpha = model.alpha, eta = model.eta;
  if (!(alpha > 0.0) || !(eta > 0.0)) throw ValidationError("lda_fit: alpha and eta must be positive");

  model.theta = DenseMatrix::Constant(static_cast<Eigen::Index>(n), K, 1.0 / K);
  model.beta = DenseMatrix::Constant(K, static_cast<Eigen::Index>(V), 1.0 / static_cast<double>(V));
  if (cfg.iterations == 0) return model;

  // Expand the counts into word-id sequences.
  std::vector<std::vector<int>> words(n);
  for (Eigen::Index r = 0; r < dtm.matrix.outerSize(); ++r) {
    for (SparseRowMatrix::InnerIterator it(dtm.matrix, r); it; ++it) {
      const auto c = static_cast<long>(std::llround(it.value()));
      if (c < 0 || static_cast<double>(c) != it.value()) throw ValidationError("lda_fit: counts must be integers");
      words[static_cast<std::size_t>(r)].insert(words[static_cast<std::size_t>(r)].end(), static_cast<std::size_t>(c),
                                                static_cast<int>(it.col()));
    }
  }

  Rng rng(cfg.seed);
  const auto k = static_cast<std::size_t>(K);
  std::vector<double> ndk(n * k, 0.0), nkw(k * V, 0.0), nk(k, 0.0);
  std::vector<std::vector<int>> z(n);
  std::size_t total_tokens = 0;
  std::vector<double> cumulative(k);
  const double v_eta = static_cast<double>(V) * eta;
  auto draw = [&](std::size_t d, std::size_t w) {
    const double* doc = &ndk[d * k];
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sum += (doc[j] + alpha) * (nkw[j * V + w] + eta) / (nk[j] + v_eta);
      cumulative[j] = sum;
    }
    const double u = rng.uniform() * sum;
    std::size_t t = 0;
    while (t + 1 < k && cumulative[t] <= u) ++t;
    return t;
  };
  for (std::size_t d = 0; d < n; ++d) {
    z[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const auto w = static_cast<std::size_t>(words[d][i]);
      const auto t = static_cast<std::size_t>(rng.below(k));
      z[d][i] = static_cast<int>(t);
      ndk[d * k + t] += 1;
      nkw[t * V + w] += 1;
      nk[t] += 1;
    }
    total_tokens += words[d].size();
  }

  DenseMatrix theta_acc = DenseMatrix::Zero(static_cast<Eigen::Index>(n), K);
  DenseMatrix beta_acc = DenseMatrix::Zero(K, static_cast<Eigen::Index>(V));
  int samples = 0;
  auto accumulate = [&] {
    for (std::size_t d = 0; d < n; ++d) {
      const double nd = static_cast<double>(words[d].size());
      for (std::size_t t = 0; t < k; ++t) {
        theta_acc(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) +=
            (ndk[d * k + t] + alpha) / (nd + K * alpha);
      }
    }
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t w = 0; w < V; ++w) {
        beta_acc(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(w)) +=
            (nkw[t * V + w] + eta) / (nk[t] + static_cast<double>(V) * eta);
      }
    }
    ++samples;
  };

  for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
    for (std::size_t d = 0; d < n; ++d) {
      double* doc = &ndk[d * k];
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const auto w = static_cast<std::size_t>(words[d][i]);
        auto t = static_cast<std::size_t>(z[d][i]);
        doc[t] -= 1;
        nkw[t * V + w] -= 1;
        nk[t] -= 1;
        t = draw(d, w);
        z[d][i] = static_cast<int>(t);
        doc[t] += 1;
        nkw[t * V + w] += 1;
        nk[t] += 1;
      }
    }
#ifndef NDEBUG
    assert(static_cast<std::size_t>(std::accumulate(nk.begin(), nk.end(), 0.0)) == total_tokens);
    assert(static_cast<std::size_t>(std::accumulate(ndk.begin(), ndk.end(), 0.0)) == total_tokens);
#endif
    if (sweep > cfg.burn_in) accumulate();
  }
  (void)total_tokens;
  if (samples == 0) accumulate();

  model.theta = theta_acc / samples;
  model.beta = beta_acc / samples;
  // Renormalize away accumulated rounding.
  for (Eigen::Index r = 0; r < model.theta.rows(); ++r) model.theta.row(r) /= model.theta.row(r).sum();
  for (Eigen::Index r = 0; r < model.beta.rows(); ++r) model.beta.row(r) /= model.beta.row(r).sum();
  return model;
}

EmbeddingMatrix lda_doc_topics(const TopicModel& model, std::vector<std::string> ids) {
  EmbeddingMatrix e{model.theta, std::move(ids), EmbeddingKind::lda_theta};
  e.validate();
  return e;
}

TopicImportance topic_relative_importance(const DenseMatrix& theta, const std::vector<std::string>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != theta.rows()) {
    throw ValidationError("topic_relative_importance: labels must cover every row");
  }
  if (theta.rows() == 0) throw ValidationError("topic_relative_importance: empty theta");
  std::map<std::string, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  const Eigen::RowVectorXd overall = theta.colwise().mean();
  TopicImportance out;
  out.values.resize(static_cast<Eigen::Index>(members.size()), theta.cols());
  Eigen::Index g = 0;
  for (const auto& [label, rows] : members) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(theta.cols());
    for (Eigen::Index r : rows) mean += theta.row(r);
    mean /= static_cast<double>(rows.size());
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      if (overall(c) == 0.0) throw ValidationError("topic_relative_importance: topic " + std::to_string(c) + " has zero mass");
      out.values(g, c) = mean(c) / overall(c);
    }
    out.groups.push_back(label);
    ++g;
  }
  return out;
}

}  // namespace docgraph
