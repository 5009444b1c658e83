#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace celest {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scored test set: (classifier score in [0,1], true label) pairs.
struct ScoredSet {
  std::vector<std::pair<double, bool>> pairs;  // (score, is_positive)

  void add(double score, bool positive) { pairs.emplace_back(score, positive); }
  std::size_t positives() const {
    std::size_t p = 0;
    for (auto& [s, y] : pairs) p += y;
    return p;
  }
  std::size_t negatives() const { return pairs.size() - positives(); }
};

struct PrPoint {
  double recall;
  double precision;
};

// Thresholds at every distinct score, descending; equal scores cross the
// threshold together. One point per threshold at which recall increases,
// ordered by increasing recall.
std::vector<PrPoint> pr_curve(const ScoredSet& set);

// Area under the PR curve by the step-wise average-precision rule:
// sum over points of (R_i - R_{i-1}) * P_i, with R_0 = 0.
double pr_auc(const ScoredSet& set);

// FPR at the highest threshold achieving recall >= target_recall.
// Returns 0 when the set has no negatives.
double fpr_at_recall(const ScoredSet& set, double target_recall);

struct ClassifiedCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision() const { return tp + fp ? double(tp) / double(tp + fp) : 0.0; }
  double recall() const { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

// Counts at a fixed decision threshold (score >= threshold is positive).
ClassifiedCounts counts_at_threshold(const ScoredSet& set, double threshold);

}  // namespace celest
