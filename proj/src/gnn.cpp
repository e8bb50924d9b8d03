#include "docgraph/gnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "docgraph/error.hpp"

namespace docgraph::gnn {

namespace {

using Triplet = Eigen::Triplet<double>;

std::vector<std::vector<NodeId>> adjacency_lists(Index n, const std::vector<Edge>& edges) {
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

ad::SparseHandle make_sparse(Index n, std::vector<Triplet>& triplets) {
  auto s = std::make_shared<ad::SparseMatrix>(n, n);
  s->setFromTriplets(triplets.begin(), triplets.end());
  s->makeCompressed();
  return s;
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::gcn: return "gcn";
    case EncoderKind::sage: return "sage";
    case EncoderKind::gin: return "gin";
    case EncoderKind::gat: return "gat";
    case EncoderKind::agnn: return "agnn";
    case EncoderKind::graphunet: return "graphunet";
  }
  return "?";
}

EncoderKind encoder_from_name(std::string_view name) {
  for (EncoderKind k : all_encoders) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown encoder `" + std::string(name) + "`");
}

EncoderConfig EncoderConfig::defaults(EncoderKind kind) {
  EncoderConfig c;
  c.kind = kind;
  switch (kind) {
    case EncoderKind::gcn:
    case EncoderKind::sage:
      break;
    case EncoderKind::gin:
      c.depth = 5;
      break;
    case EncoderKind::gat:
      c.hidden = 8;
      c.heads = 8;
      c.out = 16;
      c.dropout = 0.6;
      break;
    case EncoderKind::agnn:
      c.hidden = 16;
      c.out = 16;
      break;
    case EncoderKind::graphunet:
      c.out = 16;
      c.depth = 4;
      c.dropout = 0.3;
      break;
  }
  return c;
}

nlohmann::json to_json(const EncoderConfig& cfg) {
  return {{"kind", std::string(to_string(cfg.kind))},
          {"hidden", cfg.hidden},
          {"out", cfg.out},
          {"dropout", cfg.dropout},
          {"heads", cfg.heads},
          {"out_heads", cfg.out_heads},
          {"depth", cfg.depth},
          {"pool_ratio", cfg.pool_ratio},
          {"gin_eps", cfg.gin_eps},
          {"sage_normalize", cfg.sage_normalize}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c = EncoderConfig::defaults(encoder_from_name(j.at("kind").get<std::string>()));
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") continue;
    else if (key == "hidden") c.hidden = value.get<Index>();
    else if (key == "out") c.out = value.get<Index>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "heads") c.heads = value.get<Index>();
    else if (key == "out_heads") c.out_heads = value.get<Index>();
    else if (key == "depth") c.depth = value.get<Index>();
    else if (key == "pool_ratio") c.pool_ratio = value.get<double>();
    else if (key == "gin_eps") c.gin_eps = value.get<double>();
    else if (key == "sage_normalize") c.sage_normalize = value.get<bool>();
    else throw ValidationError("unknown encoder config key `" + key + "`");
  }
  return c;
}

ad::SparseHandle normalize_adjacency(Index n, const std::vector<Edge>& undirected) {
  const auto adj = adjacency_lists(n, undirected);
  Eigen::VectorXd inv_sqrt(n);
  for (Index v = 0; v < n; ++v) inv_sqrt(v) = 1.0 / std::sqrt(static_cast<double>(adj[v].size() + 1));
  std::vector<Triplet> t;
  for (Index v = 0; v < n; ++v) {
    t.emplace_back(v, v, inv_sqrt(v) * inv_sqrt(v));
    for (NodeId u : adj[v]) t.emplace_back(v, u, inv_sqrt(v) * inv_sqrt(u));
  }
  return make_sparse(n, t);
}

ad::SparseHandle normalize_adjacency(const CitationGraph& g) {
  return normalize_adjacency(g.num_nodes(), g.undirected_edges());
}

MessageGraph MessageGraph::build(const CitationGraph& g) { return build(g.num_nodes(), g.undirected_edges()); }

MessageGraph MessageGraph::build(Index n, const std::vector<Edge>& undirected) {
  MessageGraph m;
  m.n = n;
  const auto adj = adjacency_lists(n, undirected);
  for (Index v = 0; v < n; ++v) {
    for (NodeId u : adj[v]) {
      if (v < u) m.edges.emplace_back(v, u);
    }
  }
  m.gcn_norm = normalize_adjacency(n, m.edges);
  std::vector<Triplet> sum, mean;
  for (Index v = 0; v < n; ++v) {
    const double inv = adj[v].empty() ? 0.0 : 1.0 / static_cast<double>(adj[v].size());
    // Attention neighborhoods include v itself, merged in sorted position.
    bool self_done = false;
    for (NodeId u : adj[v]) {
      if (!self_done && u > v) {
        m.att_src.push_back(v);
        m.att_dst.push_back(v);
        self_done = true;
      }
      sum.emplace_back(v, u, 1.0);
      mean.emplace_back(v, u, inv);
      m.att_src.push_back(u);
      m.att_dst.push_back(v);
    }
    if (!self_done) {
      m.att_src.push_back(v);
      m.att_dst.push_back(v);
    }
  }
  m.adjacency = make_sparse(n, sum);
  m.mean_adjacency = make_sparse(n, mean);
  return m;
}

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::elu: return ad::elu(x);
  }
  return x;
}

Tensor gcn_layer(const ad::SparseHandle& norm_adj, const Tensor& h, const Tensor& w, Activation act) {
  // Project first when it shrinks the dense operand of the sparse product.
  if (w.cols() < w.rows()) return activate(ad::spmm(norm_adj, ad::matmul(h, w)), act);
  return activate(ad::matmul(ad::spmm(norm_adj, h), w), act);
}

Tensor sage_layer(const MessageGraph& g, const Tensor& h, const Tensor& w, Activation act, bool normalize) {
  const Tensor parts[] = {h, ad::spmm(g.mean_adjacency, h)};
  Tensor out = activate(ad::matmul(ad::concat_cols(parts), w), act);
  return normalize ? ad::row_l2_normalize(out) : out;
}

Tensor gin_aggregate(const MessageGraph& g, const Tensor& h, double eps) {
  return ad::add(ad::scale(h, 1.0 + eps), ad::spmm(g.adjacency, h));
}

AttentionResult gat_head(const MessageGraph& g, const Tensor& wh, const Tensor& a_src, const Tensor& a_dst,
                         double attention_dropout, Rng& rng, ad::Mode mode) {
  const Tensor s_src = ad::matmul(wh, a_src);
  const Tensor s_dst = ad::matmul(wh, a_dst);
  const Tensor e = ad::leaky_relu(ad::add(ad::gather_rows(s_src, g.att_src), ad::gather_rows(s_dst, g.att_dst)), 0.2);
  const Tensor alpha = ad::segment_softmax(e, g.att_dst, g.n);
  const Tensor alpha_used = ad::dropout(alpha, attention_dropout, rng, mode);
  const Tensor messages = ad::mul(ad::gather_rows(wh, g.att_src), alpha_used);
  return {ad::segment_sum(messages, g.att_dst, g.n), alpha};
}

AttentionResult agnn_propagate(const MessageGraph& g, const Tensor& h, const Tensor& beta) {
  const Tensor hn = ad::row_l2_normalize(h);
  const Tensor cos = ad::row_sum(ad::mul(ad::gather_rows(hn, g.att_src), ad::gather_rows(hn, g.att_dst)));
  const Tensor weights = ad::segment_softmax(ad::mul(cos, beta), g.att_dst, g.n);
  return {ad::segment_sum(ad::mul(ad::gather_rows(h, g.att_src), weights), g.att_dst, g.n), weights};
}

PoolResult gpool(const Tensor& h, const std::vector<Edge>& edges, const Tensor& p, double ratio) {
  if (p.cols() != 1 || p.rows() != h.cols()) throw std::invalid_argument("gpool: projection must be features x 1");
  const Index n = h.rows();
  const Tensor unit = ad::transpose(ad::row_l2_normalize(ad::transpose(p)));
  const Tensor scores = ad::matmul(h, unit);
  const Index k = std::max<Index>(1, static_cast<Index>(std::ceil(ratio * static_cast<double>(n))));
  PoolResult out;
  out.kept = ad::top_k_by_score(scores, k);
  out.n = static_cast<Index>(out.kept.size());
  out.features = ad::mul(ad::gather_rows(h, out.kept), ad::tanh(ad::gather_rows(scores, out.kept)));
  std::vector<Index> remap(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < out.kept.size(); ++i) remap[out.kept[i]] = static_cast<Index>(i);
  for (const auto& [u, v] : edges) {
    if (remap[u] >= 0 && remap[v] >= 0) out.edges.emplace_back(remap[u], remap[v]);
  }
  return out;
}

// ---- Encoder ----

Index Encoder::add(std::string name, Index rows, Index cols) {
  specs_.push_back({std::move(name), rows, cols});
  return static_cast<Index>(specs_.size() - 1);
}

Encoder::Encoder(EncoderConfig cfg, Index in_features, std::uint64_t seed) : cfg_(cfg), in_features_(in_features) {
  if (in_features < 1) throw ValidationError("encoder needs at least one input feature");
  if (cfg_.hidden < 1 || cfg_.out < 1 || cfg_.depth < 1) throw ValidationError("encoder dimensions must be positive");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  const Index h = cfg_.hidden, o = cfg_.out, in = in_features;
  switch (cfg_.kind) {
    case EncoderKind::gcn:
      add("conv1.weight", in, h);
      add("conv1.bias", 1, h);
      add("conv2.weight", h, o);
      add("conv2.bias", 1, o);
      break;
    case EncoderKind::sage:
      add("conv1.weight", 2 * in, h);
      add("conv1.bias", 1, h);
      add("conv2.weight", 2 * h, o);
      add("conv2.bias", 1, o);
      break;
    case EncoderKind::gin:
      for (Index l = 0; l < cfg_.depth; ++l) {
        const Index fan_in = l == 0 ? in : h;
        const Index fan_out = l + 1 == cfg_.depth ? o : h;
        const std::string p = "conv" + std::to_string(l + 1);
        // No linear bias: batch-norm's shift absorbs it.
        add(p + ".weight", fan_in, fan_out);
        add(p + ".bn.gamma", 1, fan_out);
        add(p + ".bn.beta", 1, fan_out);
        norms_.emplace_back(fan_out);
      }
      break;
    case EncoderKind::gat:
      if (cfg_.heads < 1 || cfg_.out_heads < 1) throw ValidationError("GAT needs at least one head");
      add("conv1.weight", in, h * cfg_.heads);
      add("conv1.att_src", h, cfg_.heads);
      add("conv1.att_dst", h, cfg_.heads);
      add("conv1.bias", 1, h * cfg_.heads);
      add("conv2.weight", h * cfg_.heads, o * cfg_.out_heads);
      add("conv2.att_src", o, cfg_.out_heads);
      add("conv2.att_dst", o, cfg_.out_heads);
      add("conv2.bias", 1, o);
      break;
    case EncoderKind::agnn:
      add("lin.weight", in, h);
      add("lin.bias", 1, h);
      for (Index l = 0; l < cfg_.depth; ++l) add("prop" + std::to_string(l + 1) + ".beta", 1, 1);
      if (o != h) throw ValidationError("AGNN propagation keeps the projected width; set out == hidden");
      break;
    case EncoderKind::graphunet:
      for (Index l = 0; l <= cfg_.depth; ++l) {
        const std::string p = "down" + std::to_string(l);
        add(p + ".weight", l == 0 ? in : h, h);
        add(p + ".bias", 1, h);
        if (l > 0) add("pool" + std::to_string(l) + ".p", h, 1);
      }
      for (Index l = 0; l < cfg_.depth; ++l) {
        const std::string p = "up" + std::to_string(l);
        const Index fan_out = l + 1 == cfg_.depth ? o : h;
        add(p + ".weight", h, fan_out);
        add(p + ".bias", 1, fan_out);
      }
      break;
  }

  Rng rng = Rng(seed).substream("init");
  for (const auto& spec : specs_) {
    Matrix m;
    const auto& name = spec.name;
    if (name.ends_with(".bias") || name.ends_with(".bn.beta")) {
      m = Matrix::Zero(spec.rows, spec.cols);
    } else if (name.ends_with(".gamma") || (name.ends_with(".beta") && name.starts_with("prop"))) {
      m = Matrix::Ones(spec.rows, spec.cols);
    } else {
      // Attention vectors and pooling projections count one output per column.
      const bool vector_like = name.find(".att_") != std::string::npos || name.ends_with(".p");
      const double fan = vector_like ? static_cast<double>(spec.rows + 1) : static_cast<double>(spec.rows + spec.cols);
      const double limit = std::sqrt(6.0 / fan);
      m.resize(spec.rows, spec.cols);
      for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
      }
    }
    params_.push_back(std::move(m));
  }
}

std::vector<Tensor> Encoder::bind(ad::Tape& tape) const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const Matrix& m : params_) out.push_back(tape.variable(m));
  return out;
}

Tensor Encoder::forward(ad::Tape& /*tape*/, const MessageGraph& g, const Tensor& x, std::span<const Tensor> params,
                        const ForwardOptions& opts) {
  if (params.size() != specs_.size()) throw std::invalid_argument("encoder: wrong parameter count");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (params[i].rows() != specs_[i].rows || params[i].cols() != specs_[i].cols) {
      throw std::invalid_argument("encoder: parameter " + specs_[i].name + " has wrong shape");
    }
  }
  if (x.rows() != g.n || x.cols() != in_features_) {
    throw std::invalid_argument("encoder: features are " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                ", expected " + std::to_string(g.n) + "x" + std::to_string(in_features_));
  }
  Rng rng = Rng(opts.seed).substream("dropout");
  const ad::Mode mode = opts.mode;
  std::size_t cursor = 0;
  auto next = [&]() -> const Tensor& { return params[cursor++]; };

  switch (cfg_.kind) {
    case EncoderKind::gcn: {
      Tensor h = ad::dropout(x, cfg_.dropout, rng, mode);
      const Tensor& w1 = next();
      h = ad::relu(ad::add(gcn_layer(g.gcn_norm, h, w1), next()));
      h = ad::dropout(h, cfg_.dropout, rng, mode);
      const Tensor& w2 = next();
      return ad::add(gcn_layer(g.gcn_norm, h, w2), next());
    }
    case EncoderKind::sage: {
      Tensor h = ad::dropout(x, cfg_.dropout, rng, mode);
      const Tensor& w1 = next();
      h = ad::relu(ad::add(sage_layer(g, h, w1), next()));
      if (cfg_.sage_normalize) h = ad::row_l2_normalize(h);
      h = ad::dropout(h, cfg_.dropout, rng, mode);
      const Tensor& w2 = next();
      h = ad::add(sage_layer(g, h, w2), next());
      return cfg_.sage_normalize ? ad::row_l2_normalize(h) : h;
    }
    case EncoderKind::gin: {
      Tensor h = x;
      for (Index l = 0; l < cfg_.depth; ++l) {
        h = ad::dropout(h, cfg_.dropout, rng, mode);
        h = gin_aggregate(g, h, cfg_.gin_eps);
        const Tensor& w = next();
        const Tensor& gamma = next();
        const Tensor& beta = next();
        h = ad::elu(ad::batch_norm(ad::matmul(h, w), gamma, beta, norms_[static_cast<std::size_t>(l)], mode));
      }
      return ad::row_l2_normalize(h);
    }
    case EncoderKind::gat: {
      const Index hid = cfg_.hidden, o = cfg_.out;
      Tensor h = ad::dropout(x, cfg_.dropout, rng, mode);
      const Tensor& w1 = next();
      const Tensor& as1 = next();
      const Tensor& ad1 = next();
      const Tensor& b1 = next();
      const Tensor wh1 = ad::matmul(h, w1);
      std::vector<Tensor> heads;
      for (Index k = 0; k < cfg_.heads; ++k) {
        heads.push_back(gat_head(g, ad::slice_cols(wh1, k * hid, hid), ad::slice_cols(as1, k, 1),
                                 ad::slice_cols(ad1, k, 1), cfg_.dropout, rng, mode)
                            .out);
      }
      h = ad::elu(ad::add(ad::concat_cols(heads), b1));
      h = ad::dropout(h, cfg_.dropout, rng, mode);
      const Tensor& w2 = next();
      const Tensor& as2 = next();
      const Tensor& ad2 = next();
      const Tensor& b2 = next();
      const Tensor wh2 = ad::matmul(h, w2);
      Tensor acc;
      for (Index k = 0; k < cfg_.out_heads; ++k) {
        Tensor head = gat_head(g, ad::slice_cols(wh2, k * o, o), ad::slice_cols(as2, k, 1), ad::slice_cols(ad2, k, 1),
                               cfg_.dropout, rng, mode)
                          .out;
        acc = k == 0 ? head : ad::add(acc, head);
      }
      if (cfg_.out_heads > 1) acc = ad::scale(acc, 1.0 / static_cast<double>(cfg_.out_heads));
      return ad::add(acc, b2);
    }
    case EncoderKind::agnn: {
      Tensor h = ad::dropout(x, cfg_.dropout, rng, mode);
      const Tensor& w = next();
      h = ad::relu(ad::add(ad::matmul(h, w), next()));
      for (Index l = 0; l < cfg_.depth; ++l) {
        h = ad::dropout(h, cfg_.dropout, rng, mode);
        h = agnn_propagate(g, h, next()).out;
      }
      return h;
    }
    case EncoderKind::graphunet: {
      const Index depth = cfg_.depth;
      // Parameter layout: down0.{w,b}, then per level {w,b,p}, then up.{w,b}.
      auto down_w = [&](Index l) -> const Tensor& { return params[l == 0 ? 0 : static_cast<std::size_t>(2 + 3 * (l - 1))]; };
      auto down_b = [&](Index l) -> const Tensor& { return params[l == 0 ? 1 : static_cast<std::size_t>(3 + 3 * (l - 1))]; };
      auto pool_p = [&](Index l) -> const Tensor& { return params[static_cast<std::size_t>(4 + 3 * (l - 1))]; };
      const std::size_t up0 = static_cast<std::size_t>(2 + 3 * depth);

      std::vector<ad::SparseHandle> norms{g.gcn_norm};
      std::vector<Index> sizes{g.n};
      std::vector<ad::IndexList> kept;
      std::vector<Tensor> skips;
      std::vector<Edge> edges = g.edges;

      Tensor h = ad::dropout(x, cfg_.dropout, rng, mode);
      h = ad::relu(ad::add(gcn_layer(g.gcn_norm, h, down_w(0)), down_b(0)));
      skips.push_back(h);
      for (Index l = 1; l <= depth; ++l) {
        PoolResult pool = gpool(h, edges, pool_p(l), cfg_.pool_ratio);
        edges = std::move(pool.edges);
        norms.push_back(normalize_adjacency(pool.n, edges));
        sizes.push_back(pool.n);
        kept.push_back(std::move(pool.kept));
        h = ad::relu(ad::add(gcn_layer(norms.back(), pool.features, down_w(l)), down_b(l)));
        if (l < depth) skips.push_back(h);
      }
      for (Index i = 0; i < depth; ++i) {
        const Index j = depth - 1 - i;
        h = ad::add(skips[static_cast<std::size_t>(j)], ad::scatter_rows(h, kept[static_cast<std::size_t>(j)], sizes[j]));
        h = ad::add(gcn_layer(norms[static_cast<std::size_t>(j)], h, params[up0 + 2 * i]), params[up0 + 2 * i + 1]);
        if (i + 1 < depth) h = ad::relu(h);
      }
      return h;
    }
  }
  throw std::logic_error("unreachable encoder kind");
}

Matrix Encoder::embed(const MessageGraph& g, const Matrix& x, const ForwardOptions& opts) {
  ad::Tape tape;
  const auto params = bind(tape);
  const Tensor xt = tape.constant(x);
  return forward(tape, g, xt, params, opts).value();
}

// ---- decoder ----

Tensor inner_product_logits(const Tensor& z, const std::vector<Edge>& pairs) {
  ad::IndexList us, vs;
  us.reserve(pairs.size());
  vs.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    if (u < 0 || v < 0 || u >= z.rows() || v >= z.rows()) throw std::out_of_range("decode: node index out of range");
    us.push_back(u);
    vs.push_back(v);
  }
  return ad::row_sum(ad::mul(ad::gather_rows(z, us), ad::gather_rows(z, vs)));
}

Eigen::VectorXd inner_product_decode(const Matrix& z, const std::vector<Edge>& pairs) {
  Eigen::VectorXd out(static_cast<Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [u, v] = pairs[i];
    if (u < 0 || v < 0 || u >= z.rows() || v >= z.rows()) throw std::out_of_range("decode: node index out of range");
    const double logit = z.row(u).dot(z.row(v));
    out(static_cast<Index>(i)) = 1.0 / (1.0 + std::exp(-logit));
  }
  return out;
}

Tensor reconstruction_loss(const Tensor& z, const std::vector<Edge>& positives, const std::vector<Edge>& negatives) {
  if (positives.empty()) throw ValidationError("reconstruction_loss: empty positive set");
  const Tensor pos = inner_product_logits(z, positives);
  Tensor loss = ad::reduce_mean(ad::bce_with_logits(pos, Matrix::Ones(pos.rows(), 1)));
  if (!negatives.empty()) {
    const Tensor neg = inner_product_logits(z, negatives);
    loss = ad::add(loss, ad::reduce_mean(ad::bce_with_logits(neg, Matrix::Zero(neg.rows(), 1))));
  }
  return loss;
}

// ---- checkpoint ----

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kCheckpointMagic[4] = {'G', 'N', 'N', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw ValidationError("checkpoint truncated");
  return v;
}
void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_string(std::istream& in) {
  std::string s(get_u32(in), '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(s.size()))) throw ValidationError("checkpoint truncated");
  return s;
}
void put_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}
Matrix get_matrix(std::istream& in, std::string& name) {
  name = get_string(in);
  const Index rows = get_u32(in), cols = get_u32(in);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), 8)) throw ValidationError("checkpoint truncated");
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const Encoder& enc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  nlohmann::json cfg = to_json(enc.config());
  cfg["in_features"] = enc.in_features();
  put_string(out, cfg.dump());
  const auto& specs = enc.specs();
  const auto& norms = enc.norm_states();
  put_u32(out, static_cast<std::uint32_t>(specs.size() + 2 * norms.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) put_matrix(out, specs[i].name, enc.parameters()[i]);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    put_matrix(out, "bn" + std::to_string(i) + ".running_mean", norms[i].running_mean);
    put_matrix(out, "bn" + std::to_string(i) + ".running_var", norms[i].running_var);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Encoder load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw ValidationError("not a GNN1 checkpoint");
  if (get_u32(in) != kCheckpointVersion) throw ValidationError("unsupported checkpoint version");
  nlohmann::json cfg = nlohmann::json::parse(get_string(in));
  const Index in_features = cfg.at("in_features").get<Index>();
  cfg.erase("in_features");
  Encoder enc(encoder_config_from_json(cfg), in_features, 0);
  const std::uint32_t count = get_u32(in);
  if (count != enc.specs().size() + 2 * enc.norm_states().size()) throw ValidationError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < enc.specs().size(); ++i) {
    std::string name;
    Matrix m = get_matrix(in, name);
    if (name != enc.specs()[i].name || m.rows() != enc.specs()[i].rows || m.cols() != enc.specs()[i].cols) {
      throw ValidationError("checkpoint tensor `" + name + "` does not match the encoder layout");
    }
    enc.parameters()[i] = std::move(m);
  }
  for (auto& bn : enc.norm_states()) {
    std::string name;
    bn.running_mean = get_matrix(in, name);
    bn.running_var = get_matrix(in, name);
  }
  return enc;
}

}  // namespace docgraph::gnn
