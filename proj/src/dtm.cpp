#include <algorithm>
#include <cmath>
#include <numeric>

#include "docgraph/error.hpp"
#include "docgraph/textembed.hpp"

namespace docgraph {

std::string to_string(Weighting w) {
  switch (w) {
    case Weighting::binary: return "binary";
    case Weighting::count: return "count";
    case Weighting::tfidf: return "tfidf";
  }
  return "?";
}

Weighting weighting_from_name(const std::string& name) {
  if (name == "binary") return Weighting::binary;
  if (name == "count") return Weighting::count;
  if (name == "tfidf") return Weighting::tfidf;
  throw ValidationError("unknown weighting: " + name);
}

DocumentTermMatrix build_dtm(const std::vector<TokenList>& docs, const Vocabulary& vocab, Weighting weighting) {
  const auto n = static_cast<Eigen::Index>(docs.size());
  const auto v = static_cast<Eigen::Index>(vocab.size());
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows(docs.size());
  std::vector<double> df(vocab.size(), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::vector<Eigen::Index> ids;
    for (const auto& t : docs[i]) {
      if (auto id = vocab.id(t)) ids.push_back(static_cast<Eigen::Index>(*id));
    }
    std::sort(ids.begin(), ids.end());
    for (std::size_t a = 0; a < ids.size();) {
      std::size_t b = a;
      while (b < ids.size() && ids[b] == ids[a]) ++b;
      rows[i].emplace_back(ids[a], static_cast<double>(b - a));
      df[static_cast<std::size_t>(ids[a])] += 1.0;
      a = b;
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, tf] : rows[i]) {
      double w = tf;
      if (weighting == Weighting::binary) w = 1.0;
      if (weighting == Weighting::tfidf) w = tf * std::log(static_cast<double>(n) / df[static_cast<std::size_t>(j)]);
      triplets.emplace_back(static_cast<Eigen::Index>(i), j, w);
    }
  }
  DocumentTermMatrix out;
  out.weighting = weighting;
  out.matrix.resize(n, v);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

DenseMatrix dense_top_columns(const DocumentTermMatrix& dtm, std::size_t max_features) {
  const auto& m = dtm.matrix;
  std::vector<std::size_t> df(static_cast<std::size_t>(m.cols()), 0);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) ++df[static_cast<std::size_t>(it.col())];
  }
  std::vector<std::size_t> order(df.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return df[a] > df[b]; });
  if (order.size() > max_features) order.resize(max_features);
  std::sort(order.begin(), order.end());
  std::vector<Eigen::Index> col_of(df.size(), -1);
  for (std::size_t c = 0; c < order.size(); ++c) col_of[order[c]] = static_cast<Eigen::Index>(c);
  DenseMatrix out = DenseMatrix::Zero(m.rows(), static_cast<Eigen::Index>(order.size()));
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
      const Eigen::Index c = col_of[static_cast<std::size_t>(it.col())];
      if (c >= 0) out(r, c) = it.value();
    }
  }
  return out;
}

}  // namespace docgraph
