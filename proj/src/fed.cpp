#include "celest/fed.hpp"

#include <algorithm>
#include <cmath>

#include "celest/active.hpp"
#include "celest/metrics.hpp"
#include "celest/parallel.hpp"

namespace celest {

void RoundLedger::record_round(int t, std::vector<double> global,
                               std::vector<RoundUpdate> updates) {
  global_models[t] = std::move(global);
  round_updates[t] = std::move(updates);
  while (static_cast<int>(round_updates.size()) > std::max(retain, 1))
    round_updates.erase(round_updates.begin());
}

int RoundLedger::latest_round() const {
  if (global_models.empty()) throw AggregationError("ledger: no rounds recorded");
  return global_models.rbegin()->first;
}

const std::vector<RoundUpdate>& RoundLedger::last_updates() const {
  if (round_updates.empty()) throw AggregationError("ledger: no updates recorded");
  return round_updates.rbegin()->second;
}

std::vector<double> aggregate(
    const std::vector<std::pair<std::vector<double>, std::size_t>>& updates) {
  if (updates.empty()) throw AggregationError("aggregate: no updates");
  const std::size_t len = updates[0].first.size();
  std::size_t total = 0;
  for (const auto& [params, n] : updates) {
    if (params.size() != len) throw AggregationError("aggregate: length mismatch");
    total += n;
  }
  if (total == 0) throw AggregationError("aggregate: zero total weight");
  std::vector<double> out(len, 0.0);
  for (const auto& [params, n] : updates) {
    if (n == 0) continue;
    double w = double(n) / double(total);
    for (std::size_t i = 0; i < len; ++i) out[i] += w * params[i];
  }
  return out;
}

std::vector<double> aggregate_updates(const std::vector<RoundUpdate>& updates,
                                      const std::set<std::string>& excluded) {
  std::vector<std::pair<std::vector<double>, std::size_t>> kept;
  for (const auto& u : updates) {
    if (excluded.contains(u.client_id)) continue;
    kept.emplace_back(u.params, u.n);
  }
  return aggregate(kept);
}

std::vector<const FeatureVector*> training_set(const ClientState& client, int t) {
  std::vector<const FeatureVector*> out;
  std::unordered_set<std::uint64_t> seen;
  const auto& window = client.windows.at(t - 1);
  for (const auto& s : window) {
    if (s.label == Label::Unlabeled) continue;
    out.push_back(&s);
    seen.insert(s.record_id);
  }
  for (const auto& s : client.augmented) {
    if (seen.contains(s.record_id)) continue;
    out.push_back(&s);
    seen.insert(s.record_id);
  }
  return out;
}

ModelWeights train_epochs(ModelWeights w,
                          const std::vector<const FeatureVector*>& data,
                          const TrainConfig& config, Rng& rng) {
  if (data.empty()) return w;
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i)
    (data[i]->label == Label::Malicious ? pos : neg).push_back(i);

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t n_batches = (data.size() + bs - 1) / bs;
  std::vector<const FeatureVector*> batch;

  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    if (config.balanced_batches && !pos.empty() && !neg.empty()) {
      for (std::size_t b = 0; b < n_batches; ++b) {
        batch.clear();
        std::size_t half = bs / 2;
        for (std::size_t i = 0; i < half; ++i)
          batch.push_back(data[pos[rng.uniform_int(pos.size())]]);
        for (std::size_t i = half; i < bs; ++i)
          batch.push_back(data[neg[rng.uniform_int(neg.size())]]);
        w = sgd_update(w, batch, config, rng);
      }
    } else {
      std::vector<std::size_t> order(data.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        batch.clear();
        for (std::size_t i = start; i < std::min(start + bs, order.size()); ++i)
          batch.push_back(data[order[i]]);
        w = sgd_update(w, batch, config, rng);
      }
    }
  }
  return w;
}

ClientUpdateResult client_update(const ClientState& client,
                                 const std::vector<double>& global_params, int t,
                                 const TrainConfig& config, std::uint64_t round_seed,
                                 const AttackConfig* attack) {
  auto tset = training_set(client, t);

  std::vector<FeatureVector> flipped;  // poisoned view of the training labels
  if (attack && attack->active(t)) {
    std::vector<FeatureVector> copy;
    copy.reserve(tset.size());
    for (const auto* s : tset) copy.push_back(*s);
    flipped = poison_labels(std::move(copy), attack->target_pattern);
    tset.clear();
    for (const auto& s : flipped) tset.push_back(&s);
  }

  ClientUpdateResult result;
  result.n = tset.size();
  if (tset.empty()) {
    result.params = global_params;
    result.noop = true;
    return result;
  }
  int hidden = config.hidden;
  int input_dim = static_cast<int>(
      (global_params.size() - 1 - 2 * std::size_t(hidden)) / hidden);
  ModelWeights w = unflatten(global_params, input_dim, hidden);
  Rng rng(round_seed);
  w = train_epochs(std::move(w), tset, config, rng);
  result.params = flatten(w);
  return result;
}

RoundResult run_round(ServerState& server, std::vector<ClientState>& clients,
                      int t, const DefensePolicy& defense, const TrainConfig& nn_config,
                      std::uint64_t seed, const AttackConfig* attack) {
  RoundResult result;
  std::vector<std::size_t> active_idx;
  for (std::size_t i = 0; i < clients.size(); ++i)
    if (!server.ledger.removed_clients.contains(clients[i].client_id))
      active_idx.push_back(i);
  if (active_idx.empty()) throw AggregationError("run_round: no active clients");

  // client updates are pure given (global, data, seed): parallel over clients
  std::vector<RoundUpdate> updates(active_idx.size());
  par::for_range(active_idx.size(), [&](std::size_t k) {
    ClientState& c = clients[active_idx[k]];
    const AttackConfig* atk = c.role == Role::poisoner ? c.behavior : nullptr;
    auto res = client_update(c, server.global, t, nn_config,
                             derive_seed(seed, "fed", t, active_idx[k]),
                             atk && atk->active(t) ? atk : nullptr);
    if (atk && atk->active(t) && atk->kind == AttackConfig::Kind::weight_boost &&
        !res.noop) {
      res.params = boost_update(server.global, res.params, atk->boost_factor);
    }
    if (defense.clipping_bound) {
      res.params = clip_update(server.global, res.params, *defense.clipping_bound);
    }
    updates[k] = {c.client_id, std::move(res.params), res.n};
  });

  std::size_t total_n = 0;
  for (const auto& u : updates) total_n += u.n;
  std::vector<double> new_global =
      total_n == 0 ? server.global : aggregate_updates(updates, {});
  server.global = new_global;
  server.ledger.record_round(t, std::move(new_global), std::move(updates));

  if (defense.dtrust_enabled) {
    ModelWeights gw = unflatten(server.global, server.input_dim, server.hidden);
    std::vector<TrustReport> reports;
    for (auto idx : active_idx) {
      ClientState& c = clients[idx];
      if (c.role == Role::poisoner) continue;  // adversarial clients stay silent
      auto rep = client_trust_check(c.client_id, c.trust_dataset,
                                    c.trust_legitimate, c.dtrust, gw, t,
                                    defense.client_threshold);
      if (rep) reports.push_back(*rep);
    }
    result.any_trust_report = !reports.empty();
    for (const auto& rep : reports) {
      auto inv = server_investigate_multiround(rep, server.ledger, defense,
                                               std::max(defense.lookback, 1),
                                               server.input_dim, server.hidden);
      IncidentReport incident;
      incident.round = t;
      incident.triggering_client = rep.client_id;
      incident.dismissed = inv.dismissed;
      incident.dismiss_reason = inv.dismiss_reason;
      incident.impacts = inv.impacts;
      incident.flagged = inv.flagged;
      incident.reverted = !inv.reverted_global.empty();
      result.incidents.push_back(incident);
      if (!inv.flagged.empty()) {
        for (const auto& id : inv.flagged)
          server.ledger.removed_clients.insert(id);
        server.global = inv.reverted_global;
        server.ledger.global_models[t] = inv.reverted_global;
        gw = unflatten(server.global, server.input_dim, server.hidden);
      }
    }
  }
  return result;
}

namespace {

void evaluate_model(const ModelWeights& w, const std::vector<EvalSet>& eval_sets,
                    int round, const std::string& client_name,
                    std::vector<MetricsRow>& rows) {
  for (const auto& e : eval_sets) {
    auto scores = predict_batch(w, e.samples);
    ScoredSet set;
    for (std::size_t i = 0; i < scores.size(); ++i)
      set.add(scores[i], e.samples[i].label == Label::Malicious);
    rows.push_back({round, client_name, e.name, "pr_auc", pr_auc(set)});
    rows.push_back(
        {round, client_name, e.name, "fpr_at_recall_0.9", fpr_at_recall(set, 0.9)});
    rows.push_back({round, client_name, e.name, "loss", loss(w, e.samples)});
  }
}

}  // namespace

FedTrainResult run_training(FedScenario& scenario) {
  FedTrainResult result;
  if (scenario.clients.empty()) throw ConfigError("run_training: no clients");
  if (scenario.budget % 2 != 0)
    throw ConfigError("run_training: active-learning budget must be even");
  if (scenario.budget > 0 && !scenario.oracle)
    throw ConfigError("run_training: budget > 0 requires an oracle");

  TrainConfig cfg = scenario.nn;
  ModelWeights w0 = init_weights(scenario.input_dim, cfg);
  const std::vector<double> params0 = flatten(w0);

  if (scenario.mode == TrainMode::local) {
    // same architecture and schedule, no aggregation
    for (std::size_t i = 0; i < scenario.clients.size(); ++i) {
      ClientState& c = scenario.clients[i];
      std::vector<double> params = params0;
      for (int t = 1; t <= scenario.rounds; ++t) {
        auto res = client_update(c, params, t, cfg,
                                 derive_seed(scenario.seed, "fed", t, i), nullptr);
        params = std::move(res.params);
        evaluate_model(unflatten(params, scenario.input_dim, cfg.hidden),
                       scenario.eval_sets, t, c.client_id, result.rows);
      }
      result.final_locals[c.client_id] = params;
    }
    return result;
  }

  ServerState server;
  server.global = params0;
  server.input_dim = scenario.input_dim;
  server.hidden = cfg.hidden;
  server.ledger.retain = std::max(scenario.defense.lookback, 1);

  for (int t = 1; t <= scenario.rounds; ++t) {
    if (scenario.budget > 0) {
      ModelWeights gw = unflatten(server.global, scenario.input_dim, cfg.hidden);
      for (auto& c : scenario.clients) {
        if (server.ledger.removed_clients.contains(c.client_id)) continue;
        active_round_hook(c, gw, t, Budget{scenario.budget}, scenario.forest,
                          *scenario.oracle, scenario.seed, result.audit);
      }
    }
    auto round = run_round(server, scenario.clients, t, scenario.defense, cfg,
                           scenario.seed,
                           scenario.attack_enabled ? &scenario.attack : nullptr);
    if (round.any_trust_report && result.first_trigger_round == 0)
      result.first_trigger_round = t;
    if (!round.incidents.empty() && result.first_investigation_round == 0)
      result.first_investigation_round = t;
    for (auto& inc : round.incidents) result.incidents.push_back(std::move(inc));

    evaluate_model(unflatten(server.global, scenario.input_dim, cfg.hidden),
                   scenario.eval_sets, t, "global", result.rows);
  }
  result.final_global = server.global;
  result.removed_clients = server.ledger.removed_clients;
  return result;
}

}  // namespace celest
