#include "celest/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace celest {

namespace {

// indices sorted by score descending; stable so equal scores keep input order
std::vector<std::size_t> order_desc(const ScoredSet& set) {
  std::vector<std::size_t> idx(set.pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return set.pairs[a].first > set.pairs[b].first;
  });
  return idx;
}

}  // namespace

std::vector<PrPoint> pr_curve(const ScoredSet& set) {
  const std::size_t P = set.positives();
  if (P == 0) throw MetricError("pr_curve: no positive samples");
  auto idx = order_desc(set);

  std::vector<PrPoint> points;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    // group of equal scores crosses the threshold together
    double score = set.pairs[idx[i]].first;
    std::size_t group_tp = 0;
    std::size_t j = i;
    for (; j < idx.size() && set.pairs[idx[j]].first == score; ++j) {
      if (set.pairs[idx[j]].second)
        ++group_tp;
      else
        ++fp;
    }
    tp += group_tp;
    if (group_tp > 0) {
      points.push_back({double(tp) / double(P), double(tp) / double(tp + fp)});
    }
    i = j;
  }
  return points;
}

double pr_auc(const ScoredSet& set) {
  auto points = pr_curve(set);
  double auc = 0.0, prev_recall = 0.0;
  for (const auto& p : points) {
    auc += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return auc;
}

double fpr_at_recall(const ScoredSet& set, double target_recall) {
  const std::size_t P = set.positives();
  if (P == 0) throw MetricError("fpr_at_recall: no positive samples");
  if (!(target_recall > 0.0 && target_recall <= 1.0))
    throw MetricError("fpr_at_recall: target_recall must be in (0,1]");
  const std::size_t N = set.negatives();
  auto idx = order_desc(set);

  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    double score = set.pairs[idx[i]].first;
    std::size_t j = i;
    for (; j < idx.size() && set.pairs[idx[j]].first == score; ++j) {
      if (set.pairs[idx[j]].second)
        ++tp;
      else
        ++fp;
    }
    if (double(tp) / double(P) >= target_recall)
      return N == 0 ? 0.0 : double(fp) / double(N);
    i = j;
  }
  // target <= 1 means the loop above always returns by the last group
  return N == 0 ? 0.0 : double(fp) / double(N);
}

ClassifiedCounts counts_at_threshold(const ScoredSet& set, double threshold) {
  ClassifiedCounts c;
  for (auto& [score, positive] : set.pairs) {
    bool predicted = score >= threshold;
    if (predicted && positive) ++c.tp;
    else if (predicted && !positive) ++c.fp;
    else if (!predicted && positive) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace celest
