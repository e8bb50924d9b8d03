#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docgraph/corpus.hpp"

namespace docgraph {

enum class FeatureBlock { affiliation, first_author, year, subject_area, topics, text, citations };

inline constexpr std::array<FeatureBlock, 7> all_feature_blocks{
    FeatureBlock::affiliation, FeatureBlock::first_author, FeatureBlock::year,     FeatureBlock::subject_area,
    FeatureBlock::topics,      FeatureBlock::text,         FeatureBlock::citations};

// "affiliation", "first-author", "year", "subject-area", "topic-distribution",
// "text-embedding", "citations-1..10".
std::string to_string(FeatureBlock block);
// Accepts the names above plus the short aliases "author", "subject",
// "topics", "text" and "citations". Throws ValidationError otherwise.
FeatureBlock feature_block_from_name(const std::string& name);

inline constexpr int citation_horizon_years = 10;

// ratio[t] for t = 2..10: mean of c(t)/c(t-1) over articles whose year t is
// observed and c(t-1) > 0. Entries 0 and 1 are unused.
struct CohortRatios {
  std::array<std::optional<double>, citation_horizon_years + 1> ratio{};
};

// Latest year that appears as a publication or citation year.
int default_citation_horizon(const Corpus& corpus);

// c(t) = citations received in years [year, year + t - 1].
std::int64_t cumulative_citations(const Article& article, int t);

CohortRatios compute_cohort_ratios(const Corpus& corpus, int horizon);

// c(1..10) followed by total_citations. Years after `horizon` are imputed as
// round-half-up(c(t-1) * ratio[t]); a missing ratio counts as 1.0 and adds a
// warning.
std::array<std::int64_t, citation_horizon_years + 1> impute_cumulative_citations(
    const Article& article, int horizon, const CohortRatios& ratios, std::vector<std::string>* warnings = nullptr);

struct FeatureConfig {
  std::size_t top_affiliations = 1000;
  std::size_t top_authors = 1000;
  std::set<FeatureBlock> drop;
  std::optional<int> horizon;
  // Citation counts enter as log(1 + c).
  bool log_citations = true;
};

struct BlockRange {
  FeatureBlock block;
  Eigen::Index begin = 0;
  Eigen::Index width = 0;
};

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(Eigen::MatrixXd values, std::vector<BlockRange> blocks);

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  const std::vector<BlockRange>& blocks() const { return blocks_; }
  bool has(FeatureBlock block) const;
  // 0 when absent.
  Eigen::Index width(FeatureBlock block) const;
  FeatureMatrix without(FeatureBlock block) const;
  FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<BlockRange> blocks_;
};

// Blocks in order: affiliation (first author's, top-N + other), first author
// (top-N + other), standardized year, subject-area dummies, topics, text
// embedding, 11 citation columns. Inputs for dropped blocks may be empty.
FeatureMatrix assemble_features(const Corpus& corpus, const Eigen::MatrixXd& text_embedding,
                                const Eigen::MatrixXd& topics, const FeatureConfig& cfg,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace docgraph
