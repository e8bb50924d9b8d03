#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "docgraph/text.hpp"

namespace docgraph {

using DenseMatrix = Eigen::MatrixXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---- document-term matrices ----

enum class Weighting { binary, count, tfidf };

std::string to_string(Weighting w);
Weighting weighting_from_name(const std::string& name);

struct DocumentTermMatrix {
  SparseRowMatrix matrix;
  Weighting weighting = Weighting::count;
};

// Tokens outside the vocabulary are ignored. tfidf = tf * ln(n / df) with the
// document frequencies recomputed over `docs`.
DocumentTermMatrix build_dtm(const std::vector<TokenList>& docs, const Vocabulary& vocab, Weighting weighting);

// Dense copy keeping the `max_features` columns with the highest document
// frequency (ties by column id), in column order.
DenseMatrix dense_top_columns(const DocumentTermMatrix& dtm, std::size_t max_features);

// ---- embeddings ----

enum class EmbeddingKind { lda_theta, pvdm, external, gnn, tfidf };

std::string to_string(EmbeddingKind k);
EmbeddingKind embedding_kind_from_name(const std::string& name);

struct EmbeddingMatrix {
  DenseMatrix values;
  std::vector<std::string> ids;
  EmbeddingKind kind = EmbeddingKind::external;

  // Throws ValidationError on id/row mismatch, duplicate ids, d == 0 or
  // non-finite values.
  void validate() const;
};

enum class EmbeddingFormat { tsv, binary };

// `id<TAB>f1...fd`, values printed as shortest round-tripping float32.
void write_embedding_tsv(const EmbeddingMatrix& e, std::ostream& out);
// "EMB1", u32 n, u32 d, n*d little-endian f32 row-major, newline-joined ids.
void write_embedding_binary(const EmbeddingMatrix& e, std::ostream& out);
void export_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path, EmbeddingFormat format);

// Detects the format from the magic bytes.
EmbeddingMatrix read_embedding(const std::filesystem::path& path);
EmbeddingMatrix read_embedding(std::istream& in);

// Reorders rows to `expected_ids`. Extra ids are ignored; missing ids throw
// ValidationError listing them.
EmbeddingMatrix load_external_embeddings(const std::filesystem::path& path, const std::vector<std::string>& expected_ids);
EmbeddingMatrix align_embedding(const EmbeddingMatrix& e, const std::vector<std::string>& expected_ids);

// ---- LDA ----

struct LdaConfig {
  int topics = 20;
  // Defaults to 50 / topics.
  std::optional<double> alpha;
  double eta = 0.01;
  int iterations = 500;
  int burn_in = 200;
  std::uint64_t seed = 0;
};

struct TopicModel {
  DenseMatrix beta;   // K x V
  DenseMatrix theta;  // n x K
  double alpha = 0.0;
  double eta = 0.0;
  int topics = 0;
};

// Unnormalized p(z_i = k | rest) with token i already removed from the counts.
Eigen::VectorXd lda_conditional(std::span<const double> doc_topic, std::span<const double> topic_word,
                                std::span<const double> topic_total, double alpha, double eta, std::size_t vocab_size);

// Collapsed Gibbs sampling. theta and beta are the averages of the posterior
// mean estimates over sweeps after burn-in (the final sweep when
// iterations <= burn_in). iterations == 0 yields uniform rows.
TopicModel lda_fit(const DocumentTermMatrix& dtm, const LdaConfig& cfg, std::vector<std::string>* warnings = nullptr);

EmbeddingMatrix lda_doc_topics(const TopicModel& model, std::vector<std::string> ids);

struct TopicImportance {
  std::vector<std::string> groups;  // sorted
  DenseMatrix values;               // groups x K
};

// entry(g, k) = mean_{i in g} theta(i, k) / mean_i theta(i, k).
TopicImportance topic_relative_importance(const DenseMatrix& theta, const std::vector<std::string>& labels);

// ---- PV-DM ----

struct PvdmConfig {
  int dim = 20;
  int window = 10;
  int negatives = 5;
  int epochs = 20;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  std::uint64_t seed = 0;
};

// Token ids per document; tokens outside the vocabulary are dropped.
std::vector<std::vector<int>> encode_documents(const std::vector<TokenList>& docs, const Vocabulary& vocab);

// -ln sigma(s+) - sum ln sigma(-s-) for one target and its sampled negatives.
double negative_sampling_loss(double positive_logit, std::span<const double> negative_logits);

// Document vectors: the document vector concatenated with 2*window context
// word vectors (padded at the edges) predicts the centre word through
// negative sampling. epochs == 0 returns the seeded initialization.
DenseMatrix pvdm_fit(const std::vector<std::vector<int>>& docs, std::size_t vocab_size, const PvdmConfig& cfg);

}  // namespace docgraph
