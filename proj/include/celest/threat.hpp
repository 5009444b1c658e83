#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "celest/featurize.hpp"
#include "celest/nn.hpp"

namespace celest {

struct RoundLedger;  // fed.hpp

// Poisoning behavior of a compromised client. label_flip trains on the
// target family's samples relabeled Benign; weight_boost additionally scales
// the resulting parameter delta by boost_factor before sending it.
struct AttackConfig {
  enum class Kind { label_flip, weight_boost };
  Kind kind = Kind::label_flip;
  std::string target_pattern;  // malware family tag under attack
  double boost_factor = 1.0;   // > 1 for weight_boost
  int start_round = 1;
  int poisoner_count = 0;

  bool active(int round) const { return round >= start_round; }
};

struct DefensePolicy {
  std::optional<double> clipping_bound;  // L2 bound on parameter deltas
  bool dtrust_enabled = false;
  double client_threshold = 0.10;  // T: relative trust-loss increase
  double server_threshold = 0.5;   // leave-one-out loss impact
  int lookback = 1;                // k rounds of updates kept for investigation
};

// Client-side running state for the trust check.
struct DTrustClientState {
  bool seen = false;
  double min_loss = 0.0;
  int best_round = 0;
};

struct TrustReport {
  std::string client_id;
  int round = 0;    // round of the model that triggered the report
  int t_best = 0;   // round of the best-performing previous global model
  const std::vector<FeatureVector>* trust_dataset = nullptr;
  double current_loss = 0.0;
  double min_loss = 0.0;
  bool legitimate = true;  // oracle stand-in for threat-intel verification
};

struct IncidentReport {
  int round = 0;
  std::string triggering_client;
  bool dismissed = false;
  std::string dismiss_reason;
  std::vector<std::pair<std::string, double>> impacts;  // per investigated client
  std::vector<std::string> flagged;
  bool reverted = false;
};

// Every training sample of the target family is relabeled Benign for local
// training; ground truth elsewhere is untouched.
std::vector<FeatureVector> poison_labels(std::vector<FeatureVector> data,
                                         const std::string& target_pattern);

// global + boost_factor * (local - global)
std::vector<double> boost_update(const std::vector<double>& global_params,
                                 const std::vector<double>& local_params,
                                 double boost_factor);

// Rescales the delta to L2 norm <= bound, direction preserved.
std::vector<double> clip_update(const std::vector<double>& global_params,
                                const std::vector<double>& update, double bound);

// Evaluates the new global model on the trust dataset and reports when the
// loss impact (L - L_min) / L_min exceeds the threshold. Updates the running
// minimum afterwards, so the first round never triggers.
std::optional<TrustReport> client_trust_check(
    const std::string& client_id, const std::vector<FeatureVector>& trust_dataset,
    bool legitimate, DTrustClientState& state, const ModelWeights& global_model,
    int round, double threshold);

struct InvestigationResult {
  bool dismissed = false;
  std::string dismiss_reason;
  std::vector<std::pair<std::string, double>> impacts;
  std::vector<std::string> flagged;
  std::vector<double> reverted_global;  // empty when nothing was flagged
};

// Server investigation: verify the trust dataset, confirm the regression
// against the best previous model, then measure each client's leave-one-out
// loss impact on the most recent round and flag those above the threshold.
// The reverted model aggregates exactly the non-flagged clients' updates.
InvestigationResult server_investigate(const TrustReport& report,
                                       const RoundLedger& ledger,
                                       const DefensePolicy& policy,
                                       int input_dim, int hidden);

// Multi-round extension: each client's impact is accumulated over its last k
// recorded updates, re-aggregating every affected round. k = 1 matches
// server_investigate.
InvestigationResult server_investigate_multiround(const TrustReport& report,
                                                  const RoundLedger& ledger,
                                                  const DefensePolicy& policy,
                                                  int k, int input_dim, int hidden);

}  // namespace celest
