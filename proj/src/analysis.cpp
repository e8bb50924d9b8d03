#include "docgraph/analysis.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <set>

#include "docgraph/csv.hpp"

namespace docgraph::analysis {

std::string collaboration_class(const Article& article) {
  if (article.authors.size() == 1) return "A";
  if (article.authors.empty() || article.affiliations.empty()) return unknown_label;
  std::set<std::string> ids, countries;
  for (const auto& a : article.affiliations) {
    if (a.id.empty()) return unknown_label;
    ids.insert(a.id);
  }
  if (ids.size() == 1) return "B";
  for (const auto& a : article.affiliations) {
    if (a.country.empty()) return unknown_label;
    countries.insert(a.country);
  }
  return countries.size() == 1 ? "C" : "D";
}

std::string country_label(const Article& article) {
  if (article.affiliations.empty() || article.affiliations.front().country.empty()) return unknown_label;
  return article.affiliations.front().country;
}

Grouping group_by(const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<Eigen::Index>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != unknown_label) m[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  Grouping g;
  for (auto& [label, rows] : m) {
    g.labels.push_back(label);
    g.members.push_back(std::move(rows));
  }
  return g;
}

Eigen::MatrixXd group_mean_cosine(const Eigen::MatrixXd& e, const std::vector<std::vector<Eigen::Index>>& row_groups,
                                  const std::vector<std::vector<Eigen::Index>>& col_groups) {
  // Unit rows turn every cosine into a dot product.
  Eigen::MatrixXd unit(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double norm = e.row(i).norm();
    if (norm == 0.0) throw ValidationError("group_mean_cosine: row " + std::to_string(i) + " is a zero vector");
    unit.row(i) = e.row(i) / norm;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(row_groups.size()), static_cast<Eigen::Index>(col_groups.size()));
  for (std::size_t g = 0; g < row_groups.size(); ++g) {
    for (std::size_t h = 0; h < col_groups.size(); ++h) {
      double sum = 0.0;
      std::size_t pairs = 0;
      for (Eigen::Index i : row_groups[g]) {
        for (Eigen::Index j : col_groups[h]) {
          if (i == j) continue;
          sum += std::clamp(unit.row(i).dot(unit.row(j)), -1.0, 1.0);
          ++pairs;
        }
      }
      out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h)) =
          pairs ? sum / static_cast<double>(pairs) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<CitationGroup> frobenius_by_citation_group(const Eigen::MatrixXd& e,
                                                       const std::vector<std::int64_t>& total_citations) {
  if (static_cast<Eigen::Index>(total_citations.size()) != e.rows()) {
    throw ValidationError("frobenius_by_citation_group: citations must align with embedding rows");
  }
  std::vector<double> nonzero;
  for (auto c : total_citations) {
    if (c < 0) throw ValidationError("negative citation count");
    if (c > 0) nonzero.push_back(static_cast<double>(c));
  }
  std::sort(nonzero.begin(), nonzero.end());

  std::vector<CitationGroup> groups{{"zero", 0.0, 0.0, 0, std::nullopt}};
  std::vector<double> upper;
  if (!nonzero.empty()) {
    const double q1 = quantile(nonzero, 0.25), q2 = quantile(nonzero, 0.5), q3 = quantile(nonzero, 0.75);
    upper = {q1, q2, q3, nonzero.back()};
    const double lows[4] = {nonzero.front(), q1, q2, q3};
    const char* names[4] = {"lower", "mid-low", "mid-high", "high"};
    for (int k = 0; k < 4; ++k) groups.push_back({names[k], lows[k], upper[static_cast<std::size_t>(k)], 0, std::nullopt});
  }
  std::vector<double> sums(groups.size(), 0.0);
  for (std::size_t i = 0; i < total_citations.size(); ++i) {
    std::size_t g = 0;
    if (total_citations[i] > 0) {
      const auto c = static_cast<double>(total_citations[i]);
      g = 1;
      while (g < 4 && c > upper[g - 1]) ++g;
    }
    sums[g] += e.row(static_cast<Eigen::Index>(i)).norm();
    ++groups[g].count;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].count) groups[g].mean_norm = sums[g] / static_cast<double>(groups[g].count);
  }
  return groups;
}

std::optional<Eigen::Index> GroupEmbedding::row_of(const std::string& label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return std::nullopt;
  return static_cast<Eigen::Index>(it - labels.begin());
}

GroupEmbedding aggregate_embedding(const Eigen::MatrixXd& e, const std::vector<std::string>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != e.rows()) {
    throw ValidationError("aggregate_embedding: labels must cover every row");
  }
  const Grouping grouping = group_by(labels);
  if (grouping.labels.empty()) throw ValidationError("aggregate_embedding: no labeled rows");
  GroupEmbedding g;
  g.labels = grouping.labels;
  g.means.resize(static_cast<Eigen::Index>(g.labels.size()), e.cols());
  for (std::size_t k = 0; k < g.labels.size(); ++k) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(e.cols());
    for (Eigen::Index r : grouping.members[k]) sum += e.row(r);
    g.means.row(static_cast<Eigen::Index>(k)) = sum / static_cast<double>(grouping.members[k].size());
    g.counts.push_back(grouping.members[k].size());
  }
  return g;
}

std::map<std::string, double> mean_similarity_to_others(const GroupEmbedding& g, std::vector<std::string>* warnings) {
  std::vector<Eigen::Index> usable;
  for (Eigen::Index r = 0; r < g.means.rows(); ++r) {
    if (g.means.row(r).norm() == 0.0) {
      if (warnings) warnings->push_back("group " + g.labels[static_cast<std::size_t>(r)] + " has a zero mean vector");
      continue;
    }
    usable.push_back(r);
  }
  if (usable.size() < 2) throw ValidationError("mean_similarity_to_others needs at least two groups");
  std::map<std::string, double> out;
  for (Eigen::Index a : usable) {
    double sum = 0.0;
    for (Eigen::Index b : usable) {
      if (a != b) sum += cosine(g.means.row(a), g.means.row(b));
    }
    out[g.labels[static_cast<std::size_t>(a)]] = sum / static_cast<double>(usable.size() - 1);
  }
  return out;
}

std::vector<std::pair<std::string, double>> pivot_axis_projection(const GroupEmbedding& g, const std::string& pivot_a,
                                                                  const std::string& pivot_b) {
  if (pivot_a == pivot_b) throw ValidationError("pivot labels must differ");
  const auto a = g.row_of(pivot_a);
  const auto b = g.row_of(pivot_b);
  if (!a) throw ValidationError("unknown pivot label " + pivot_a);
  if (!b) throw ValidationError("unknown pivot label " + pivot_b);
  const Eigen::RowVectorXd axis = g.means.row(*a) - g.means.row(*b);
  if (axis.norm() == 0.0) throw ValidationError("pivots " + pivot_a + " and " + pivot_b + " have identical vectors");
  std::vector<std::pair<std::string, double>> out;
  for (Eigen::Index r = 0; r < g.means.rows(); ++r) {
    if (g.means.row(r).norm() == 0.0) continue;
    out.emplace_back(g.labels[static_cast<std::size_t>(r)], cosine(g.means.row(r), axis));
  }
  return out;
}

void write_similarity_scatter_csv(std::ostream& out, const std::map<std::string, double>& semantic,
                                  const std::map<std::string, double>& relational,
                                  const std::map<std::string, std::int64_t>& citations) {
  out << "label,semantic_mean_cos,relational_mean_cos,total_citations\n";
  const auto old = out.precision(12);
  for (const auto& [label, s] : semantic) {
    const auto r = relational.find(label);
    if (r == relational.end()) continue;
    const auto c = citations.find(label);
    out << csv_field(label) << ',' << s << ',' << r->second << ',' << (c == citations.end() ? 0 : c->second) << '\n';
  }
  out.precision(old);
}

}  // namespace docgraph::analysis
