#pragma once

#include <cstdint>
#include <vector>

#include "celest/fed.hpp"

namespace celest {

// Per-client per-round investigation budget; must be even (the two selection
// strategies each get b/2).
struct Budget {
  int b = 0;
};

struct CandidateSelection {
  // indices into windows[t-1], ranked; the two halves are disjoint
  std::vector<std::size_t> classifier_half;
  std::vector<std::size_t> anomaly_half;
};

// Top b/2 uninvestigated unlabeled records by classifier score, then top b/2
// of the remainder by ensemble anomaly score. Ties break by record_id. With
// an empty ensemble the second half falls back to classifier ranking. If
// fewer than b candidates exist, all are returned, classifier half first.
CandidateSelection select_candidates(const ClientState& client,
                                     const ModelWeights& global_model,
                                     const WindowEnsemble& ensemble, int b, int t);

// The oracle reveals true labels: truly malicious candidates are relabeled
// Malicious and join the client's training data for subsequent rounds;
// benign-revealed candidates stay Unlabeled. All candidates are marked
// investigated and are never reselected. Returns the new-malicious count.
std::size_t investigate_and_augment(ClientState& client,
                                    const CandidateSelection& candidates,
                                    const OracleAnalyst& oracle, int t, int round,
                                    std::vector<AuditRow>& audit);

// Once per round per client, before the client update: advance the anomaly
// ensemble with the previous window's unlabeled data, select candidates from
// the current window, investigate and augment.
std::size_t active_round_hook(ClientState& client, const ModelWeights& global_model,
                              int t, const Budget& budget, const ForestParams& forest,
                              const OracleAnalyst& oracle, std::uint64_t seed,
                              std::vector<AuditRow>& audit);

}  // namespace celest
