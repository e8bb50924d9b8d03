#include "docgraph/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "docgraph/error.hpp"

namespace docgraph {

std::string to_string(FeatureBlock block) {
  switch (block) {
    case FeatureBlock::affiliation: return "affiliation";
    case FeatureBlock::first_author: return "first-author";
    case FeatureBlock::year: return "year";
    case FeatureBlock::subject_area: return "subject-area";
    case FeatureBlock::topics: return "topic-distribution";
    case FeatureBlock::text: return "text-embedding";
    case FeatureBlock::citations: return "citations-1..10";
  }
  return "?";
}

FeatureBlock feature_block_from_name(const std::string& name) {
  static const std::map<std::string, FeatureBlock> names{
      {"affiliation", FeatureBlock::affiliation},    {"first-author", FeatureBlock::first_author},
      {"author", FeatureBlock::first_author},        {"year", FeatureBlock::year},
      {"subject-area", FeatureBlock::subject_area},  {"subject", FeatureBlock::subject_area},
      {"topic-distribution", FeatureBlock::topics},  {"topics", FeatureBlock::topics},
      {"text-embedding", FeatureBlock::text},        {"text", FeatureBlock::text},
      {"citations-1..10", FeatureBlock::citations},  {"citations", FeatureBlock::citations},
  };
  const auto it = names.find(name);
  if (it == names.end()) throw ValidationError("unknown feature group: " + name);
  return it->second;
}

int default_citation_horizon(const Corpus& corpus) {
  int h = 0;
  for (const auto& a : corpus.articles()) {
    h = std::max(h, a.year);
    if (!a.citations_per_year.empty()) h = std::max(h, a.citations_per_year.rbegin()->first);
  }
  return h;
}

std::int64_t cumulative_citations(const Article& article, int t) {
  std::int64_t c = 0;
  for (const auto& [y, n] : article.citations_per_year) {
    if (y >= article.year && y <= article.year + t - 1) c += n;
  }
  return c;
}

CohortRatios compute_cohort_ratios(const Corpus& corpus, int horizon) {
  std::array<double, citation_horizon_years + 1> sum{};
  std::array<std::size_t, citation_horizon_years + 1> count{};
  for (const auto& a : corpus.articles()) {
    std::int64_t prev = cumulative_citations(a, 1);
    for (int t = 2; t <= citation_horizon_years; ++t) {
      if (a.year + t - 1 > horizon) break;
      const std::int64_t cur = cumulative_citations(a, t);
      if (prev > 0) {
        sum[t] += static_cast<double>(cur) / static_cast<double>(prev);
        ++count[t];
      }
      prev = cur;
    }
  }
  CohortRatios r;
  for (int t = 2; t <= citation_horizon_years; ++t) {
    if (count[t] > 0) r.ratio[t] = sum[t] / static_cast<double>(count[t]);
  }
  return r;
}

std::array<std::int64_t, citation_horizon_years + 1> impute_cumulative_citations(const Article& article, int horizon,
                                                                                 const CohortRatios& ratios,
                                                                                 std::vector<std::string>* warnings) {
  std::array<std::int64_t, citation_horizon_years + 1> out{};
  out[citation_horizon_years] = article.total_citations;
  std::int64_t prev = 0;
  for (int t = 1; t <= citation_horizon_years; ++t) {
    std::int64_t c;
    if (article.year + t - 1 <= horizon) {
      c = cumulative_citations(article, t);
    } else {
      double ratio = 1.0;
      if (t >= 2 && ratios.ratio[t]) {
        ratio = *ratios.ratio[t];
      } else if (t >= 2 && warnings) {
        warnings->push_back("no cohort ratio for t=" + std::to_string(t) + "; using 1.0 for " + article.id);
      }
      c = static_cast<std::int64_t>(std::floor(static_cast<double>(prev) * ratio + 0.5));
    }
    out[t - 1] = c;
    prev = c;
  }
  return out;
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values, std::vector<BlockRange> blocks)
    : values_(std::move(values)), blocks_(std::move(blocks)) {
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    if (b.begin != at) throw std::invalid_argument("feature blocks must partition the columns");
    at += b.width;
  }
  if (at != values_.cols()) throw std::invalid_argument("feature blocks must partition the columns");
  if (!values_.allFinite()) throw ValidationError("feature matrix contains non-finite values");
}

bool FeatureMatrix::has(FeatureBlock block) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const BlockRange& b) { return b.block == block; });
}

Eigen::Index FeatureMatrix::width(FeatureBlock block) const {
  for (const auto& b : blocks_) {
    if (b.block == block) return b.width;
  }
  return 0;
}

FeatureMatrix FeatureMatrix::without(FeatureBlock block) const {
  const Eigen::Index w = width(block);
  Eigen::MatrixXd out(rows(), cols() - w);
  std::vector<BlockRange> kept;
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    if (b.block == block) continue;
    out.middleCols(at, b.width) = values_.middleCols(b.begin, b.width);
    kept.push_back({b.block, at, b.width});
    at += b.width;
  }
  return {std::move(out), std::move(kept)};
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
  return {std::move(out), blocks_};
}

namespace {

// Column index per value: the top_n most frequent (ties by value), `other` last.
std::unordered_map<std::string, Eigen::Index> top_n_columns(const std::vector<std::optional<std::string>>& values,
                                                            std::size_t top_n, Eigen::Index& width) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) {
    if (v) ++counts[*v];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_n) ranked.resize(top_n);
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t i = 0; i < ranked.size(); ++i) col.emplace(ranked[i].first, static_cast<Eigen::Index>(i));
  width = static_cast<Eigen::Index>(ranked.size()) + 1;
  return col;
}

Eigen::MatrixXd one_hot_block(const std::vector<std::optional<std::string>>& values, std::size_t top_n) {
  Eigen::Index width = 0;
  const auto col = top_n_columns(values, top_n, width);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()), width);
  for (std::size_t i = 0; i < values.size(); ++i) {
    Eigen::Index c = width - 1;
    if (values[i]) {
      const auto it = col.find(*values[i]);
      if (it != col.end()) c = it->second;
    }
    m(static_cast<Eigen::Index>(i), c) = 1.0;
  }
  return m;
}

void check_rows(const Eigen::MatrixXd& m, std::size_t n, FeatureBlock block) {
  if (m.rows() != static_cast<Eigen::Index>(n)) {
    throw ValidationError("feature block " + to_string(block) + " has " + std::to_string(m.rows()) +
                          " rows, expected " + std::to_string(n));
  }
  if (m.cols() == 0) throw ValidationError("feature block " + to_string(block) + " has no columns");
}

}  // namespace

FeatureMatrix assemble_features(const Corpus& corpus, const Eigen::MatrixXd& text_embedding,
                                const Eigen::MatrixXd& topics, const FeatureConfig& cfg,
                                std::vector<std::string>* warnings) {
  const std::size_t n = corpus.size();
  const auto N = static_cast<Eigen::Index>(n);
  std::vector<std::pair<FeatureBlock, Eigen::MatrixXd>> parts;
  auto wanted = [&](FeatureBlock b) { return !cfg.drop.contains(b); };

  if (wanted(FeatureBlock::affiliation)) {
    std::vector<std::optional<std::string>> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!corpus[i].affiliations.empty()) ids[i] = corpus[i].affiliations.front().id;
    }
    parts.emplace_back(FeatureBlock::affiliation, one_hot_block(ids, cfg.top_affiliations));
  }
  if (wanted(FeatureBlock::first_author)) {
    std::vector<std::optional<std::string>> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!corpus[i].authors.empty()) ids[i] = corpus[i].authors.front();
    }
    parts.emplace_back(FeatureBlock::first_author, one_hot_block(ids, cfg.top_authors));
  }
  if (wanted(FeatureBlock::year)) {
    Eigen::VectorXd y(N);
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = corpus[i].year;
    const double mean = n ? y.mean() : 0.0;
    const double sd = n ? std::sqrt((y.array() - mean).square().mean()) : 0.0;
    Eigen::MatrixXd col = Eigen::MatrixXd::Zero(N, 1);
    if (sd > 0.0) col.col(0) = (y.array() - mean) / sd;
    parts.emplace_back(FeatureBlock::year, std::move(col));
  }
  if (wanted(FeatureBlock::subject_area)) {
    std::map<std::string, Eigen::Index> areas;
    for (const auto& a : corpus.articles()) {
      for (const auto& s : a.subject_areas) areas.emplace(s, 0);
    }
    Eigen::Index c = 0;
    for (auto& [name, idx] : areas) idx = c++;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, c);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& s : corpus[i].subject_areas) m(static_cast<Eigen::Index>(i), areas.at(s)) = 1.0;
    }
    if (c > 0) parts.emplace_back(FeatureBlock::subject_area, std::move(m));
  }
  if (wanted(FeatureBlock::topics)) {
    check_rows(topics, n, FeatureBlock::topics);
    parts.emplace_back(FeatureBlock::topics, topics);
  }
  if (wanted(FeatureBlock::text)) {
    check_rows(text_embedding, n, FeatureBlock::text);
    parts.emplace_back(FeatureBlock::text, text_embedding);
  }
  if (wanted(FeatureBlock::citations)) {
    const int horizon = cfg.horizon.value_or(default_citation_horizon(corpus));
    const CohortRatios ratios = compute_cohort_ratios(corpus, horizon);
    Eigen::MatrixXd m(N, citation_horizon_years + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = impute_cumulative_citations(corpus[i], horizon, ratios, warnings);
      for (int t = 0; t <= citation_horizon_years; ++t) {
        const auto v = static_cast<double>(c[static_cast<std::size_t>(t)]);
        m(static_cast<Eigen::Index>(i), t) = cfg.log_citations ? std::log1p(v) : v;
      }
    }
    parts.emplace_back(FeatureBlock::citations, std::move(m));
  }

  Eigen::Index width = 0;
  for (const auto& p : parts) width += p.second.cols();
  Eigen::MatrixXd values(N, width);
  std::vector<BlockRange> blocks;
  Eigen::Index at = 0;
  for (auto& [block, m] : parts) {
    values.middleCols(at, m.cols()) = m;
    blocks.push_back({block, at, m.cols()});
    at += m.cols();
  }
  return {std::move(values), std::move(blocks)};
}

}  // namespace docgraph
