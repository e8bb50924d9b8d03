#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace docgraph::eval {

// Probability that a positive outscores a negative, ties counted 1/2.
double auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

// sum_n (R_n - R_{n-1}) P_n over labels already in descending score order.
double average_precision(std::span<const int> labels_in_score_order);
// Sorts by descending score; equal scores keep index order.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr;
  double tpr;
};

// One point per distinct threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
double trapezoid_area(std::span<const RocPoint> curve);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  // Absent when the denominator is zero.
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> fpr;
};

// Predicted positive when score >= threshold.
Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold);

struct Summary {
  double mean = 0.0;
  // Sample standard deviation; absent below two values.
  std::optional<double> std;
};

Summary summarize(std::span<const double> values);

}  // namespace docgraph::eval
