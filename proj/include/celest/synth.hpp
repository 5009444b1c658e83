#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "celest/fed.hpp"
#include "celest/log.hpp"

namespace celest {

// Weighted sampler over a fixed value pool.
template <class T>
struct WeightedPool {
  std::vector<std::pair<T, double>> items;
  T draw(Rng& rng) const {
    double total = 0.0;
    for (const auto& [v, w] : items) total += w;
    double u = rng.uniform() * total;
    for (const auto& [v, w] : items) {
      if (u < w) return v;
      u -= w;
    }
    return items.back().first;
  }
};

// Parameterized malware-family trace generator. Domains come from a fixed
// pool, a rotating pool, or a DGA; the infrastructure (domain and C2 IP)
// changes every rotation_period windows.
struct FamilyTemplate {
  std::string family;
  enum class DomainGen { fixed_pool, rotating_pool, dga };
  DomainGen domain_gen = DomainGen::fixed_pool;
  std::vector<std::string> domain_pool;
  std::vector<std::string> dga_tlds;
  std::vector<std::string> uri_patterns;  // with {hexN}/{b64N}/{nN}/{word} fillers
  std::vector<std::string> ua_pool;       // "-" means absent
  WeightedPool<std::string> methods;
  WeightedPool<int> statuses;
  WeightedPool<std::string> ctypes;  // "-" means absent
  WeightedPool<int> ports;
  double req_mu = 4.0, req_sigma = 0.5;
  double resp_mu = 5.0, resp_sigma = 1.0;
  double version = 1.1;
  int rotation_period = 1 << 30;
};

// Built-in templates: "iotscan", "exfil", "routerbot".
FamilyTemplate builtin_template(const std::string& name);
std::vector<std::string> builtin_template_names();

// Benign background traffic: Zipf-ranked host pool, template-driven paths,
// realistic field distributions. Deterministic record count = windows * rate.
std::vector<LogRecord> generate_background(int windows, int rate_per_window,
                                           std::uint64_t seed,
                                           std::uint64_t id_start);

// n_events malicious records spread round-robin over windows 1..windows,
// labeled Malicious with the template's family tag.
std::vector<LogRecord> generate_family(const FamilyTemplate& tmpl, int n_events,
                                       int windows, std::uint64_t seed,
                                       std::uint64_t id_start);

// window index of a record (1-based), derived from its timestamp
int window_of(const LogRecord& r);

struct FamilyPlacement {
  std::string template_name;
  std::vector<int> client_ids;  // hosting clients (indices)
  int events_per_client = 0;    // generated per hosting client
  bool labeled = true;          // false strips training labels (ground truth kept)
  int start_window = 1;
  int rotation_period = 1 << 30;
};

struct ScenarioConfig {
  int clients = 2;
  int windows = 20;
  int background_rate = 60;  // benign events per window per client
  double labeled_benign_fraction = 0.5;
  int benign_test_per_client = 200;
  int trust_benign = 100;     // trust-dataset composition per client
  int trust_malicious = 100;  // split across the client's labeled families
  std::vector<FamilyPlacement> families;
  std::vector<Role> roles;  // per client; empty = all benign
  std::uint64_t seed = 1;
};

struct ScenarioData {
  ScenarioConfig config;
  // [client][window] training records (labels as visible to training)
  std::vector<std::vector<std::vector<LogRecord>>> client_windows;
  std::map<std::string, std::vector<LogRecord>> family_test;  // 20% held out
  std::vector<std::vector<LogRecord>> benign_test;            // per client
  std::vector<std::vector<LogRecord>> trust_pool;             // per client
  OracleAnalyst truth;                                        // record_id -> true label
  std::unordered_map<std::uint64_t, std::string> family_of;   // ground truth
  std::string manifest_json;
};

// Merges background and family traces per client per window, produces the
// per-family 80/20 train/test split and a content-hash manifest.
ScenarioData assemble_scenario(const ScenarioConfig& config);

}  // namespace celest
