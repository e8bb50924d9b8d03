#include "docgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "docgraph/error.hpp"

namespace docgraph::eval {

namespace {

void check_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("labels must be binary");
  }
}

}  // namespace

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw ValidationError("auc: both score sets must be non-empty");
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  // Count in half-units so ties stay exact integers.
  std::uint64_t wins2 = 0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted_neg.begin(), sorted_neg.end(), p);
    const auto hi = std::upper_bound(lo, sorted_neg.end(), p);
    wins2 += 2 * static_cast<std::uint64_t>(lo - sorted_neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(wins2) / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double average_precision(std::span<const int> labels) {
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) throw ValidationError("average_precision: no positive labels");
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] == 1) {
      ++tp;
      // Recall rises by 1/P exactly at positives.
      ap += static_cast<double>(tp) / static_cast<double>(n + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranked(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = labels[order[i]];
  return average_precision(ranked);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores, labels);
  const auto p = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n = static_cast<double>(labels.size()) - p;
  if (p == 0.0 || n == 0.0) throw ValidationError("roc_curve: need both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> curve{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] == 1 ? tp : fp) += 1.0;
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) curve.push_back({fp / n, tp / p});
  }
  return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_labels(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  c.precision = ratio(c.tp, c.tp + c.fp);
  c.recall = ratio(c.tp, c.tp + c.fn);
  c.fpr = ratio(c.fp, c.fp + c.tn);
  return c;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  // Welford updates keep identical inputs at exactly zero spread.
  double mean = 0.0, m2 = 0.0, k = 0.0;
  for (double v : values) {
    k += 1.0;
    const double delta = v - mean;
    mean += delta / k;
    m2 += delta * (v - mean);
  }
  s.mean = mean;
  if (values.size() >= 2) s.std = std::sqrt(m2 / (k - 1.0));
  return s;
}

}  // namespace docgraph::eval
