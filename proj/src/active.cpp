#include "celest/active.hpp"

#include <algorithm>

#include "celest/parallel.hpp"

namespace celest {

namespace {

// rank by score descending, tie-break by record_id ascending
std::vector<std::size_t> ranked(const std::vector<std::size_t>& pool,
                                const std::vector<double>& scores,
                                const std::vector<FeatureVector>& window) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return window[pool[a]].record_id < window[pool[b]].record_id;
  });
  std::vector<std::size_t> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = pool[order[i]];
  return out;
}

}  // namespace

CandidateSelection select_candidates(const ClientState& client,
                                     const ModelWeights& global_model,
                                     const WindowEnsemble& ensemble, int b, int t) {
  if (b % 2 != 0) throw ConfigError("select_candidates: budget must be even");
  CandidateSelection sel;
  if (b == 0) return sel;
  const auto& window = client.windows.at(t - 1);

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].label == Label::Unlabeled &&
        !client.investigated.contains(window[i].record_id))
      pool.push_back(i);
  }
  if (pool.empty()) return sel;

  std::vector<double> clf_scores(pool.size());
  par::for_range(pool.size(), [&](std::size_t i) {
    clf_scores[i] = predict(global_model, window[pool[i]].values);
  });
  auto clf_order = ranked(pool, clf_scores, window);

  std::size_t half = static_cast<std::size_t>(b) / 2;
  std::size_t take1 = std::min(half, clf_order.size());
  sel.classifier_half.assign(clf_order.begin(), clf_order.begin() + take1);

  std::vector<std::size_t> remaining(clf_order.begin() + take1, clf_order.end());
  if (remaining.empty()) return sel;
  std::size_t take2 = std::min(half, remaining.size());

  if (ensemble.forests.empty()) {
    // no-score sentinel: fall back to classifier-only selection
    sel.anomaly_half.assign(remaining.begin(), remaining.begin() + take2);
    return sel;
  }
  std::vector<double> an_scores(remaining.size());
  par::for_range(remaining.size(), [&](std::size_t i) {
    an_scores[i] = *ensemble_score(ensemble, window[remaining[i]].values);
  });
  // `remaining` is a pool of window indices; rank it by anomaly score
  std::vector<std::size_t> order(remaining.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b2) {
    if (an_scores[a] != an_scores[b2]) return an_scores[a] > an_scores[b2];
    return window[remaining[a]].record_id < window[remaining[b2]].record_id;
  });
  for (std::size_t i = 0; i < take2; ++i)
    sel.anomaly_half.push_back(remaining[order[i]]);
  return sel;
}

std::size_t investigate_and_augment(ClientState& client,
                                    const CandidateSelection& candidates,
                                    const OracleAnalyst& oracle, int t, int round,
                                    std::vector<AuditRow>& audit) {
  auto& window = client.windows.at(t - 1);
  std::size_t new_malicious = 0;
  auto handle = [&](std::size_t idx, const char* selector) {
    FeatureVector& s = window[idx];
    client.investigated.insert(s.record_id);
    Label truth = oracle.reveal(s.record_id);
    audit.push_back({round, client.client_id, s.record_id, selector, truth});
    if (truth == Label::Malicious) {
      s.label = Label::Malicious;
      client.augmented.push_back(s);
      ++new_malicious;
    }
  };
  for (auto idx : candidates.classifier_half) handle(idx, "classifier");
  for (auto idx : candidates.anomaly_half) handle(idx, "anomaly");
  return new_malicious;
}

std::size_t active_round_hook(ClientState& client, const ModelWeights& global_model,
                              int t, const Budget& budget, const ForestParams& forest,
                              const OracleAnalyst& oracle, std::uint64_t seed,
                              std::vector<AuditRow>& audit) {
  if (budget.b == 0) return 0;
  // ensemble trains on previous windows; detection runs on window t
  if (t >= 2) {
    const auto& prev = client.windows.at(t - 2);
    std::vector<const FeatureVector*> unlabeled;
    for (const auto& s : prev)
      if (s.label == Label::Unlabeled) unlabeled.push_back(&s);
    advance_window(client.ensemble, unlabeled, forest,
                   derive_seed(seed, "forest", fnv1a64(client.client_id), t));
  }
  auto sel = select_candidates(client, global_model, client.ensemble, budget.b, t);
  return investigate_and_augment(client, sel, oracle, t, t, audit);
}

}  // namespace celest
