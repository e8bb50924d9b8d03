#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "docgraph/autodiff.hpp"
#include "docgraph/graph.hpp"
#include "json.hpp"

namespace docgraph::gnn {

using ad::Index;
using ad::Matrix;
using ad::Tensor;

enum class EncoderKind { gcn, sage, gin, gat, agnn, graphunet };

std::string_view to_string(EncoderKind kind);
EncoderKind encoder_from_name(std::string_view name);
inline constexpr EncoderKind all_encoders[] = {EncoderKind::gat, EncoderKind::graphunet, EncoderKind::agnn,
                                               EncoderKind::sage, EncoderKind::gin, EncoderKind::gcn};

enum class Activation { identity, relu, elu };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::gcn;
  Index hidden = 32;
  Index out = 32;
  double dropout = 0.0;
  // GAT: heads of the first layer; the final layer averages `out_heads`.
  Index heads = 8;
  Index out_heads = 1;
  // GIN convolution count, GraphUNet pooling depth.
  Index depth = 2;
  double pool_ratio = 0.5;
  double gin_eps = 0.0;
  bool sage_normalize = true;

  static EncoderConfig defaults(EncoderKind kind);
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// Sparse operators and edge lists derived from one symmetrized graph.
struct MessageGraph {
  Index n = 0;
  ad::SparseHandle gcn_norm;
  ad::SparseHandle adjacency;
  ad::SparseHandle mean_adjacency;
  // Attention edges u -> v over N(v) plus the self loop, grouped by target.
  ad::IndexList att_src;
  ad::IndexList att_dst;
  std::vector<Edge> edges;

  static MessageGraph build(const CitationGraph& g);
  static MessageGraph build(Index n, const std::vector<Edge>& undirected);
};

// D^-1/2 (A + I) D^-1/2 with D the degree of A + I.
ad::SparseHandle normalize_adjacency(Index n, const std::vector<Edge>& undirected);
ad::SparseHandle normalize_adjacency(const CitationGraph& g);

Tensor activate(const Tensor& x, Activation act);

// act(normAdj H W)
Tensor gcn_layer(const ad::SparseHandle& norm_adj, const Tensor& h, const Tensor& w,
                 Activation act = Activation::identity);
// act(concat(H_v, mean_{u in N(v)} H_u) W), optionally row-L2 normalized.
Tensor sage_layer(const MessageGraph& g, const Tensor& h, const Tensor& w, Activation act = Activation::identity,
                  bool normalize = false);
// (1 + eps) H_v + sum_{u in N(v)} H_u; the caller applies the MLP.
Tensor gin_aggregate(const MessageGraph& g, const Tensor& h, double eps);

struct AttentionResult {
  Tensor out;
  // Per attention edge (MessageGraph::att_src/att_dst order), one column per head.
  Tensor weights;
};

// One GAT head on already projected features wh = W H:
// e_uv = leaky_relu(a_src . wh_u + a_dst . wh_v), softmax over N(v) + {v}.
AttentionResult gat_head(const MessageGraph& g, const Tensor& wh, const Tensor& a_src, const Tensor& a_dst,
                         double attention_dropout, Rng& rng, ad::Mode mode);
// P_uv = softmax_u(beta cos(H_v, H_u)) over N(v) + {v}; H'_v = sum_u P_uv H_u.
AttentionResult agnn_propagate(const MessageGraph& g, const Tensor& h, const Tensor& beta);

struct PoolResult {
  Tensor features;
  ad::IndexList kept;
  std::vector<Edge> edges;
  Index n = 0;
};

// gPool: scores y = H p / |p|, keep the top ceil(ratio n) nodes (at least 1)
// in descending score order, gate kept rows by tanh(y), induce the subgraph.
PoolResult gpool(const Tensor& h, const std::vector<Edge>& edges, const Tensor& p, double ratio);

struct ForwardOptions {
  ad::Mode mode = ad::Mode::eval;
  std::uint64_t seed = 0;
};

struct ParameterSpec {
  std::string name;
  Index rows;
  Index cols;
};

class Encoder {
 public:
  // Parameters drawn by seeded Glorot-uniform; biases and shifts zero, scales one.
  Encoder(EncoderConfig cfg, Index in_features, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  Index in_features() const { return in_features_; }
  const std::vector<ParameterSpec>& specs() const { return specs_; }
  std::vector<Matrix>& parameters() { return params_; }
  const std::vector<Matrix>& parameters() const { return params_; }
  std::vector<ad::BatchNormState>& norm_states() { return norms_; }
  const std::vector<ad::BatchNormState>& norm_states() const { return norms_; }

  // Full encoder on the tape with externally bound parameter tensors
  // (same order as specs()).
  Tensor forward(ad::Tape& tape, const MessageGraph& g, const Tensor& x, std::span<const Tensor> params,
                 const ForwardOptions& opts);

  std::vector<Tensor> bind(ad::Tape& tape) const;

  // Convenience forward with the encoder's own parameters.
  Matrix embed(const MessageGraph& g, const Matrix& x, const ForwardOptions& opts = {});

 private:
  Index add(std::string name, Index rows, Index cols);

  EncoderConfig cfg_;
  Index in_features_;
  std::vector<ParameterSpec> specs_;
  std::vector<Matrix> params_;
  std::vector<ad::BatchNormState> norms_;
};

// Logits z_u . z_v per pair.
Tensor inner_product_logits(const Tensor& z, const std::vector<Edge>& pairs);
// sigma(z_u . z_v) per pair.
Eigen::VectorXd inner_product_decode(const Matrix& z, const std::vector<Edge>& pairs);
// Mean BCE over positives (label 1) plus mean BCE over negatives (label 0).
Tensor reconstruction_loss(const Tensor& z, const std::vector<Edge>& positives, const std::vector<Edge>& negatives);

void save_checkpoint(const Encoder& enc, const std::filesystem::path& path);
Encoder load_checkpoint(const std::filesystem::path& path);

}  // namespace docgraph::gnn
