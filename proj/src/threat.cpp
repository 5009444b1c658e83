#include "celest/threat.hpp"

#include <algorithm>
#include <cmath>

#include "celest/fed.hpp"

namespace celest {

std::vector<FeatureVector> poison_labels(std::vector<FeatureVector> data,
                                         const std::string& target_pattern) {
  for (auto& s : data) {
    if (s.label == Label::Malicious && s.family == target_pattern)
      s.label = Label::Benign;
  }
  return data;
}

std::vector<double> boost_update(const std::vector<double>& global_params,
                                 const std::vector<double>& local_params,
                                 double boost_factor) {
  if (global_params.size() != local_params.size())
    throw ContractViolation("boost_update: length mismatch");
  std::vector<double> out(global_params.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = global_params[i] + boost_factor * (local_params[i] - global_params[i]);
  return out;
}

std::vector<double> clip_update(const std::vector<double>& global_params,
                                const std::vector<double>& update, double bound) {
  if (global_params.size() != update.size())
    throw ContractViolation("clip_update: length mismatch");
  if (!(bound > 0)) throw ContractViolation("clip_update: bound > 0");
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < update.size(); ++i) {
    double d = update[i] - global_params[i];
    norm_sq += d * d;
  }
  double norm = std::sqrt(norm_sq);
  if (norm <= bound) return update;
  double scale = bound / norm;
  std::vector<double> out(update.size());
  for (std::size_t i = 0; i < update.size(); ++i)
    out[i] = global_params[i] + scale * (update[i] - global_params[i]);
  return out;
}

std::optional<TrustReport> client_trust_check(
    const std::string& client_id, const std::vector<FeatureVector>& trust_dataset,
    bool legitimate, DTrustClientState& state, const ModelWeights& global_model,
    int round, double threshold) {
  if (trust_dataset.empty()) return std::nullopt;
  double current = loss(global_model, trust_dataset);

  std::optional<TrustReport> report;
  if (state.seen) {
    double lmin = std::max(state.min_loss, 1e-12);
    double impact = (current - lmin) / lmin;
    if (impact > threshold) {
      report = TrustReport{client_id, round,         state.best_round,
                           &trust_dataset, current, lmin, legitimate};
    }
  }
  if (!state.seen || current < state.min_loss) {
    state.min_loss = current;
    state.best_round = round;
    state.seen = true;
  }
  return report;
}

namespace {

double trust_loss(const std::vector<double>& params, int input_dim, int hidden,
                  const std::vector<FeatureVector>& ds) {
  return loss(unflatten(params, input_dim, hidden), ds);
}

}  // namespace

InvestigationResult server_investigate_multiround(const TrustReport& report,
                                                  const RoundLedger& ledger,
                                                  const DefensePolicy& policy,
                                                  int k, int input_dim, int hidden) {
  InvestigationResult result;
  const auto& ds = *report.trust_dataset;

  // step 1: trust dataset legitimacy (oracle stand-in for threat intel)
  if (!report.legitimate) {
    result.dismissed = true;
    result.dismiss_reason = "trust dataset failed verification";
    return result;
  }
  if (ledger.round_updates.empty() || ledger.global_models.empty())
    throw AggregationError("server_investigate: empty ledger");

  // step 2: the best previous model must hold up on the trust dataset while
  // the current one is significantly worse (margin reuses the client threshold)
  int latest = ledger.latest_round();
  auto best_it = ledger.global_models.find(report.t_best);
  if (best_it == ledger.global_models.end())
    throw AggregationError("server_investigate: t_best not in ledger");
  double l_best = trust_loss(best_it->second, input_dim, hidden, ds);
  double l_cur = trust_loss(ledger.global_models.at(latest), input_dim, hidden, ds);
  if ((l_cur - l_best) / std::max(l_best, 1e-12) <= policy.client_threshold) {
    result.dismissed = true;
    result.dismiss_reason = "current model not significantly worse than t_best";
    return result;
  }

  // steps 3-5: leave-one-out impact per client, accumulated over the last k
  // recorded rounds
  std::vector<std::string> client_ids;
  for (const auto& u : ledger.last_updates()) client_ids.push_back(u.client_id);

  std::map<std::string, double> cumulative;
  int rounds_used = 0;
  for (auto it = ledger.round_updates.rbegin();
       it != ledger.round_updates.rend() && rounds_used < k; ++it, ++rounds_used) {
    const auto& updates = it->second;
    double l_with = trust_loss(ledger.global_models.at(it->first), input_dim,
                               hidden, ds);
    for (const auto& u : updates) {
      std::set<std::string> excl{u.client_id};
      std::vector<double> without;
      try {
        without = aggregate_updates(updates, excl);
      } catch (const AggregationError&) {
        continue;  // excluding this client leaves no weighted data
      }
      double l_without = trust_loss(without, input_dim, hidden, ds);
      cumulative[u.client_id] +=
          (l_with - l_without) / std::max(l_without, 1e-12);
    }
  }

  for (const auto& id : client_ids) {
    auto it = cumulative.find(id);
    double impact = it == cumulative.end() ? 0.0 : it->second;
    result.impacts.emplace_back(id, impact);
    if (impact > policy.server_threshold) result.flagged.push_back(id);
  }

  // step 6: revert the latest model to the aggregate excluding every flagged
  // client's update
  if (!result.flagged.empty()) {
    std::set<std::string> excl(result.flagged.begin(), result.flagged.end());
    result.reverted_global = aggregate_updates(ledger.last_updates(), excl);
  }
  return result;
}

InvestigationResult server_investigate(const TrustReport& report,
                                       const RoundLedger& ledger,
                                       const DefensePolicy& policy,
                                       int input_dim, int hidden) {
  return server_investigate_multiround(report, ledger, policy, 1, input_dim, hidden);
}

}  // namespace celest
