#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "celest/anomaly.hpp"
#include "celest/featurize.hpp"
#include "celest/nn.hpp"
#include "celest/threat.hpp"

namespace celest {

enum class Role : std::uint8_t { benign, helper, poisoner };

// Simulated analyst with perfect ground truth; never mutates data.
struct OracleAnalyst {
  std::unordered_map<std::uint64_t, Label> truth;
  Label reveal(std::uint64_t record_id) const {
    auto it = truth.find(record_id);
    return it == truth.end() ? Label::Unlabeled : it->second;
  }
};

// Active-learning audit trail: one row per investigated sample.
struct AuditRow {
  int round = 0;
  std::string client_id;
  std::uint64_t record_id = 0;
  std::string selector;  // "classifier" or "anomaly"
  Label revealed = Label::Unlabeled;
};

// One simulated organization: time-windowed feature data plus the
// per-client state of the active-learning and DTrust components.
struct ClientState {
  std::string client_id;
  Role role = Role::benign;
  std::vector<std::vector<FeatureVector>> windows;  // windows[t-1] = D_i^t
  std::vector<FeatureVector> augmented;  // labeled additions from active learning
  std::vector<FeatureVector> trust_dataset;
  bool trust_legitimate = true;
  const AttackConfig* behavior = nullptr;  // poisoners only

  DTrustClientState dtrust;
  WindowEnsemble ensemble;
  std::unordered_set<std::uint64_t> investigated;
};

struct RoundUpdate {
  std::string client_id;
  std::vector<double> params;  // W_i^t as aggregated (post defense hooks)
  std::size_t n = 0;           // |D_i^t|
};

// Server history database: all global models plus the per-client updates of
// the most recent rounds (`retain` of them, >= 1).
struct RoundLedger {
  std::map<int, std::vector<double>> global_models;
  std::map<int, std::vector<RoundUpdate>> round_updates;
  std::set<std::string> removed_clients;
  int retain = 1;

  void record_round(int t, std::vector<double> global, std::vector<RoundUpdate> updates);
  int latest_round() const;
  const std::vector<RoundUpdate>& last_updates() const;
};

struct AggregationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FedAvg: exact weighted mean of parameter vectors, weights n_i / sum(n).
std::vector<double> aggregate(
    const std::vector<std::pair<std::vector<double>, std::size_t>>& updates);
std::vector<double> aggregate_updates(const std::vector<RoundUpdate>& updates,
                                      const std::set<std::string>& excluded);

// Labeled training set for round t: labeled samples of window t plus the
// active-learning additions, deduplicated by record id.
std::vector<const FeatureVector*> training_set(const ClientState& client, int t);

// local_epochs of mini-batch SGD over the data, batches drawn 50/50 from the
// two classes when enabled and possible, otherwise shuffled slices.
ModelWeights train_epochs(ModelWeights w,
                          const std::vector<const FeatureVector*>& data,
                          const TrainConfig& config, Rng& rng);

struct ClientUpdateResult {
  std::vector<double> params;
  std::size_t n = 0;
  bool noop = false;  // window had no labeled samples
};

// Loads the global parameters, trains on the client's round-t data and
// returns the full updated parameter vector. Data never leaves this call.
// When `attack` is non-null and active, the training labels of the target
// family are flipped first (and the caller applies boosting afterwards).
ClientUpdateResult client_update(const ClientState& client,
                                 const std::vector<double>& global_params, int t,
                                 const TrainConfig& config, std::uint64_t round_seed,
                                 const AttackConfig* attack = nullptr);

struct ServerState {
  std::vector<double> global;
  RoundLedger ledger;
  int input_dim = 0;
  int hidden = 0;
};

struct RoundResult {
  std::vector<IncidentReport> incidents;
  bool any_trust_report = false;
};

// One timed round: collect updates from all non-removed clients (possibly
// transformed by poisoner behavior), apply defense hooks, aggregate, record
// the ledger, then run the DTrust checks which may investigate and revert.
RoundResult run_round(ServerState& server, std::vector<ClientState>& clients,
                      int t, const DefensePolicy& defense, const TrainConfig& nn_config,
                      std::uint64_t seed, const AttackConfig* attack);

// ---- full training loop -------------------------------------------------

struct EvalSet {
  std::string name;
  std::vector<FeatureVector> samples;  // labels are ground truth
};

struct MetricsRow {
  int round = 0;
  std::string client;
  std::string test_set;
  std::string metric;
  double value = 0.0;
};

enum class TrainMode { federated, local };

struct FedScenario {
  std::vector<ClientState> clients;
  int rounds = 1;
  TrainConfig nn;
  DefensePolicy defense;
  AttackConfig attack;
  bool attack_enabled = false;
  int budget = 0;  // active-learning budget b per client per round (even)
  ForestParams forest;
  int ensemble_k = 3;
  const OracleAnalyst* oracle = nullptr;
  std::vector<EvalSet> eval_sets;
  TrainMode mode = TrainMode::federated;
  std::uint64_t seed = 1;
  int input_dim = 0;
};

struct FedTrainResult {
  std::vector<MetricsRow> rows;
  std::vector<double> final_global;
  std::map<std::string, std::vector<double>> final_locals;
  std::vector<IncidentReport> incidents;
  std::vector<AuditRow> audit;
  std::set<std::string> removed_clients;
  int first_trigger_round = 0;        // first round a trust report fired
  int first_investigation_round = 0;  // first round the server investigated
};

// Executes rounds 1..T, evaluating the model(s) on every eval set each round.
FedTrainResult run_training(FedScenario& scenario);

}  // namespace celest
