#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docgraph/corpus.hpp"
#include "docgraph/error.hpp"

namespace docgraph::analysis {

inline const std::string unknown_label = "unknown";

template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine of a zero vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

// "A" single author, "B" one affiliation, "C" one country, "D" several
// countries; "unknown" when affiliation data is missing.
std::string collaboration_class(const Article& article);

// First author's first affiliation country, or "unknown".
std::string country_label(const Article& article);

// Members per label in label order; the unknown label is skipped.
struct Grouping {
  std::vector<std::string> labels;
  std::vector<std::vector<Eigen::Index>> members;
};
Grouping group_by(const std::vector<std::string>& labels);

// entry(g, h) = mean cosine over pairs (i in g, j in h, i != j). Cells with no
// such pair are NaN.
Eigen::MatrixXd group_mean_cosine(const Eigen::MatrixXd& e, const std::vector<std::vector<Eigen::Index>>& row_groups,
                                  const std::vector<std::vector<Eigen::Index>>& col_groups);

struct CitationGroup {
  std::string name;
  // Inclusive citation range of the group.
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  // Mean Euclidean row norm; absent for empty groups.
  std::optional<double> mean_norm;
};

// Linear-interpolated quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q);

// "zero" plus the quartiles of the non-zero counts: lower, mid-low, mid-high,
// high. Values on a boundary join the lower group.
std::vector<CitationGroup> frobenius_by_citation_group(const Eigen::MatrixXd& e,
                                                       const std::vector<std::int64_t>& total_citations);

struct GroupEmbedding {
  std::vector<std::string> labels;
  Eigen::MatrixXd means;  // one row per label
  std::vector<std::size_t> counts;

  std::optional<Eigen::Index> row_of(const std::string& label) const;
};

// Mean row per label; unknown rows excluded.
GroupEmbedding aggregate_embedding(const Eigen::MatrixXd& e, const std::vector<std::string>& labels);

// For each label, mean cosine to every other label's vector. Zero vectors are
// skipped with a warning.
std::map<std::string, double> mean_similarity_to_others(const GroupEmbedding& g,
                                                        std::vector<std::string>* warnings = nullptr);

// cosine(v_g, v_a - v_b) per label, in label order.
std::vector<std::pair<std::string, double>> pivot_axis_projection(const GroupEmbedding& g, const std::string& pivot_a,
                                                                  const std::string& pivot_b);

// label,semantic_mean_cos,relational_mean_cos,total_citations for labels
// present in both maps.
void write_similarity_scatter_csv(std::ostream& out, const std::map<std::string, double>& semantic,
                                  const std::map<std::string, double>& relational,
                                  const std::map<std::string, std::int64_t>& citations);

}  // namespace docgraph::analysis
