#include "celest/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include "celest/parallel.hpp"
#include "json.hpp"

namespace celest {

using nlohmann::json;

namespace {

bool contains_ci(std::string_view hay, std::string_view needle) {
  // hay is already lowercased by callers
  return hay.find(needle) != std::string_view::npos;
}

void parse_version_after(std::string_view ua, std::string_view key, UaInfo& out) {
  auto pos = ua.find(key);
  if (pos == std::string_view::npos) return;
  pos += key.size();
  double major = 0, minor = 0;
  std::size_t i = pos;
  while (i < ua.size() && ua[i] >= '0' && ua[i] <= '9')
    major = major * 10 + (ua[i++] - '0');
  if (i < ua.size() && ua[i] == '.') {
    ++i;
    double scale = 0.1;
    while (i < ua.size() && ua[i] >= '0' && ua[i] <= '9') {
      minor += (ua[i++] - '0') * scale;
      scale *= 0.1;
    }
    minor *= 10;  // keep "7.12" -> minor 12-ish stable: first two digits
  }
  out.major = major;
  out.minor = std::floor(minor * 10) / 10;
}

}  // namespace

UaInfo parse_user_agent(std::string_view ua_raw) {
  UaInfo info{"pc", "other", "other", 0.0, 0.0};
  std::string ua = to_lower(ua_raw);
  if (ua.empty()) return {"unknown", "unknown", "unknown", 0.0, 0.0};

  if (contains_ci(ua, "bot") || contains_ci(ua, "spider") ||
      contains_ci(ua, "crawl")) {
    info.device = "bot";
  } else if (contains_ci(ua, "ipad") || contains_ci(ua, "tablet")) {
    info.device = "tablet";
  } else if (contains_ci(ua, "mobile") || contains_ci(ua, "iphone") ||
             contains_ci(ua, "android")) {
    info.device = "mobile";
  }

  if (contains_ci(ua, "windows nt") || contains_ci(ua, "windows")) info.os = "windows";
  else if (contains_ci(ua, "mac os x") || contains_ci(ua, "macintosh")) info.os = "macos";
  else if (contains_ci(ua, "android")) info.os = "android";
  else if (contains_ci(ua, "iphone") || contains_ci(ua, "ipad")) info.os = "ios";
  else if (contains_ci(ua, "linux")) info.os = "linux";

  struct BrowserRule { const char* marker; const char* name; const char* version_key; };
  // first match wins; Edge/Opera markers must run before the Chrome marker
  static const BrowserRule rules[] = {
      {"edg/", "edge", "edg/"},
      {"opr/", "opera", "opr/"},
      {"opera", "opera", "opera/"},
      {"chrome/", "chrome", "chrome/"},
      {"firefox/", "firefox", "firefox/"},
      {"msie ", "ie", "msie "},
      {"trident", "ie", "rv:"},
      {"safari/", "safari", "version/"},
      {"curl/", "curl", "curl/"},
      {"wget", "wget", "wget/"},
      {"python-requests", "python", "python-requests/"},
      {"python", "python", "python/"},
      {"go-http-client", "go", "go-http-client/"},
  };
  for (const auto& r : rules) {
    if (contains_ci(ua, r.marker)) {
      info.browser = r.name;
      parse_version_after(ua, r.version_key, info);
      break;
    }
  }
  return info;
}

const std::array<EmbeddedSlot, 13>& embedded_slots() {
  static const std::array<EmbeddedSlot, 13> slots = {{
      {SourceField::domain, TokenCategory::SUBDOMAIN},
      {SourceField::domain, TokenCategory::DOMAIN},
      {SourceField::domain, TokenCategory::TLD},
      {SourceField::url, TokenCategory::PATH},
      {SourceField::url, TokenCategory::FILENAME},
      {SourceField::url, TokenCategory::EXTENSION},
      {SourceField::url, TokenCategory::QUERY_KEY},
      {SourceField::url, TokenCategory::QUERY_VALUE},
      {SourceField::referer, TokenCategory::DOMAIN},
      {SourceField::referer, TokenCategory::TLD},
      {SourceField::referer, TokenCategory::PATH},
      {SourceField::referer, TokenCategory::FILENAME},
      {SourceField::referer, TokenCategory::QUERY_KEY},
  }};
  return slots;
}

namespace {

// vocabulary order: count descending, then value ascending
template <class T>
std::vector<T> top_values(const std::map<T, std::uint64_t>& counts, std::size_t limit) {
  std::vector<std::pair<T, std::uint64_t>> v(counts.begin(), counts.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (v.size() > limit) v.resize(limit);
  std::vector<T> out;
  out.reserve(v.size());
  for (auto& [val, n] : v) out.push_back(val);
  return out;
}

std::string normalize_ctype(std::string_view ct) {
  std::string s = to_lower(ct);
  if (auto pos = s.find(';'); pos != std::string::npos) s = s.substr(0, pos);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

template <class T>
int vocab_slot(const std::vector<T>& vocab, const T& value) {
  auto it = std::find(vocab.begin(), vocab.end(), value);
  // last slot is OTHER/UNKNOWN
  return it == vocab.end() ? static_cast<int>(vocab.size())
                           : static_cast<int>(it - vocab.begin());
}

bool parse_octets(std::string_view ip, int octets[3]) {
  int vals[4] = {0, 0, 0, 0};
  int idx = 0, cur = 0, digits = 0;
  for (char c : ip) {
    if (c == '.') {
      if (digits == 0 || idx >= 3) return false;
      vals[idx++] = cur;
      cur = 0;
      digits = 0;
    } else if (c >= '0' && c <= '9') {
      cur = cur * 10 + (c - '0');
      if (cur > 255) return false;
      ++digits;
    } else {
      return false;
    }
  }
  if (idx != 3 || digits == 0) return false;
  vals[3] = cur;
  octets[0] = vals[0];
  octets[1] = vals[1];
  octets[2] = vals[2];
  return true;
}

}  // namespace

FeatureLayout fit_layout(const std::vector<LogRecord>& records,
                         const EmbeddingModel& model, int port_slots) {
  if (records.empty()) throw ConfigError("fit_layout: empty training set");
  if (port_slots < 2) throw ConfigError("fit_layout: port_slots >= 2");

  std::map<int, std::uint64_t> ports;
  std::map<std::string, std::uint64_t> devices, browsers, oses, methods, ctypes;
  std::map<int, std::uint64_t> statuses;
  for (const auto& r : records) {
    ++ports[r.external_port];
    ++methods[to_lower(r.method)];
    ++statuses[r.status_code];
    if (r.content_type) ++ctypes[normalize_ctype(*r.content_type)];
    if (r.user_agent) {
      UaInfo ua = parse_user_agent(*r.user_agent);
      ++devices[ua.device];
      ++browsers[ua.browser];
      ++oses[ua.os];
    }
  }

  FeatureLayout layout;
  layout.d = model.config.dim;
  layout.port_vocab = top_values(ports, static_cast<std::size_t>(port_slots) - 1);
  layout.ua_device_vocab = top_values(devices, devices.size());
  layout.ua_browser_vocab = top_values(browsers, browsers.size());
  layout.ua_os_vocab = top_values(oses, oses.size());
  layout.method_vocab = top_values(methods, methods.size());
  layout.status_vocab = top_values(statuses, statuses.size());
  layout.ctype_vocab = top_values(ctypes, ctypes.size());
  return layout;
}

FeatureVector featurize(const LogRecord& record, const FeatureLayout& layout,
                        const EmbeddingModel& model) {
  FeatureVector out;
  out.label = record.label;
  out.record_id = record.record_id;
  out.family = record.family;
  out.values.assign(layout.total_dim(), 0.0f);
  const int d = layout.d;

  // --- embedded block: per-slot mean of token vectors
  TokenSentence dom, url, ref;
  if (!record.host.empty()) dom = tokenize_domain(record.host);
  url = tokenize_url(record.uri);
  if (record.referer) ref = tokenize_referer(*record.referer);
  std::vector<double> acc(d);
  for (std::size_t s = 0; s < embedded_slots().size(); ++s) {
    const auto& slot = embedded_slots()[s];
    const TokenSentence* sent = slot.source == SourceField::domain ? &dom
                                : slot.source == SourceField::url ? &url
                                                                  : &ref;
    std::fill(acc.begin(), acc.end(), 0.0);
    int n = 0;
    for (const auto& tok : sent->tokens) {
      if (tok.category != slot.category) continue;
      if (accumulate_token_vector(model, tok, acc.data())) ++n;
    }
    if (n > 0) {
      float* dst = out.values.data() + layout.embedded_off() + s * d;
      for (int k = 0; k < d; ++k)
        dst[k] = static_cast<float>(acc[k] / n);
    }
  }

  // --- numerical block
  UaInfo ua = record.user_agent ? parse_user_agent(*record.user_agent) : UaInfo{};
  float* num = out.values.data() + layout.numerical_off();
  num[0] = static_cast<float>(std::log1p(static_cast<double>(record.request_len)));
  num[1] = static_cast<float>(std::log1p(static_cast<double>(record.response_len)));
  num[2] = static_cast<float>(record.trans_depth);
  num[3] = static_cast<float>(record.version);
  num[4] = record.user_agent ? static_cast<float>(ua.major) : 0.0f;
  num[5] = record.user_agent ? static_cast<float>(ua.minor) : 0.0f;
  num[6] = record.host.empty() ? 0.0f : 1.0f;
  num[7] = record.uri.empty() ? 0.0f : 1.0f;
  num[8] = record.referer ? 1.0f : 0.0f;
  num[9] = record.user_agent ? 1.0f : 0.0f;
  num[10] = record.method.empty() ? 0.0f : 1.0f;

  // --- categorical block
  int octets[3];
  if (parse_octets(record.external_ip, octets)) {
    float* ip = out.values.data() + layout.ip_off();
    ip[octets[0]] = 1.0f;
    ip[256 + octets[1]] = 1.0f;
    ip[512 + octets[2]] = 1.0f;
  }
  out.values[layout.port_off() + vocab_slot(layout.port_vocab, record.external_port)] = 1.0f;
  if (record.user_agent) {
    out.values[layout.ua_device_off() + vocab_slot(layout.ua_device_vocab, ua.device)] = 1.0f;
    out.values[layout.ua_browser_off() + vocab_slot(layout.ua_browser_vocab, ua.browser)] = 1.0f;
    out.values[layout.ua_os_off() + vocab_slot(layout.ua_os_vocab, ua.os)] = 1.0f;
  }
  out.values[layout.method_off() + vocab_slot(layout.method_vocab, to_lower(record.method))] = 1.0f;
  out.values[layout.status_off() + vocab_slot(layout.status_vocab, record.status_code)] = 1.0f;
  if (record.content_type) {
    out.values[layout.ctype_off() +
               vocab_slot(layout.ctype_vocab, normalize_ctype(*record.content_type))] = 1.0f;
  }
  return out;
}

std::vector<FeatureVector> featurize_batch(const std::vector<LogRecord>& records,
                                           const FeatureLayout& layout,
                                           const EmbeddingModel& model) {
  std::vector<FeatureVector> out(records.size());
  par::for_range(records.size(),
                 [&](std::size_t i) { out[i] = featurize(records[i], layout, model); });
  return out;
}

FeatureGroup feature_group_from_name(std::string_view name) {
  if (name == "Domain_URL" || name == "domain_url") return FeatureGroup::Domain_URL;
  if (name == "UA_Referer" || name == "ua_referer") return FeatureGroup::UA_Referer;
  if (name == "External_Host" || name == "external_host") return FeatureGroup::External_Host;
  if (name == "HTTP_Metadata" || name == "http_metadata") return FeatureGroup::HTTP_Metadata;
  if (name == "All" || name == "all") return FeatureGroup::All;
  throw ConfigError("unknown feature group: " + std::string(name));
}

FeatureVector select_feature_group(const FeatureVector& v, FeatureGroup group,
                                   const FeatureLayout& layout) {
  if (group == FeatureGroup::All) return v;
  FeatureVector out = v;
  std::vector<char> keep(layout.total_dim(), 0);
  auto mark = [&](int off, int len) {
    for (int i = 0; i < len; ++i) keep[off + i] = 1;
  };
  const int d = layout.d;
  switch (group) {
    case FeatureGroup::Domain_URL:
      // domain slots 0..2 and url slots 3..7
      mark(layout.embedded_off(), 8 * d);
      break;
    case FeatureGroup::UA_Referer:
      // referer slots 8..12, UA one-hots, browser version numericals
      mark(layout.embedded_off() + 8 * d, 5 * d);
      mark(layout.ua_device_off(), layout.ua_device_dim());
      mark(layout.ua_browser_off(), layout.ua_browser_dim());
      mark(layout.ua_os_off(), layout.ua_os_dim());
      mark(layout.numerical_off() + 4, 2);
      break;
    case FeatureGroup::External_Host:
      mark(layout.ip_off(), kIpBlockDim);
      mark(layout.port_off(), layout.port_dim());
      break;
    case FeatureGroup::HTTP_Metadata:
      mark(layout.method_off(), layout.method_dim());
      mark(layout.status_off(), layout.status_dim());
      mark(layout.ctype_off(), layout.ctype_dim());
      mark(layout.numerical_off() + 0, 3);  // request, response, trans_depth
      break;
    case FeatureGroup::All:
      break;
  }
  for (int i = 0; i < layout.total_dim(); ++i)
    if (!keep[i]) out.values[i] = 0.0f;
  return out;
}

void save_layout(const std::filesystem::path& path, const FeatureLayout& layout) {
  json j;
  j["d"] = layout.d;
  j["port_vocab"] = layout.port_vocab;
  j["ua_device_vocab"] = layout.ua_device_vocab;
  j["ua_browser_vocab"] = layout.ua_browser_vocab;
  j["ua_os_vocab"] = layout.ua_os_vocab;
  j["method_vocab"] = layout.method_vocab;
  j["status_vocab"] = layout.status_vocab;
  j["ctype_vocab"] = layout.ctype_vocab;
  json slots = json::array();
  for (const auto& s : embedded_slots()) {
    slots.push_back({{"source", static_cast<int>(s.source)},
                     {"category", std::string(token_category_name(s.category))}});
  }
  j["embedded_slots"] = slots;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write layout: " + path.string());
  out << j.dump(2) << "\n";
}

FeatureLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read layout: " + path.string());
  json j = json::parse(in);
  FeatureLayout layout;
  layout.d = j.at("d").get<int>();
  layout.port_vocab = j.at("port_vocab").get<std::vector<int>>();
  layout.ua_device_vocab = j.at("ua_device_vocab").get<std::vector<std::string>>();
  layout.ua_browser_vocab = j.at("ua_browser_vocab").get<std::vector<std::string>>();
  layout.ua_os_vocab = j.at("ua_os_vocab").get<std::vector<std::string>>();
  layout.method_vocab = j.at("method_vocab").get<std::vector<std::string>>();
  layout.status_vocab = j.at("status_vocab").get<std::vector<int>>();
  layout.ctype_vocab = j.at("ctype_vocab").get<std::vector<std::string>>();
  return layout;
}

namespace {

double shannon_entropy(std::string_view s) {
  if (s.empty()) return 0.0;
  std::array<int, 256> counts{};
  for (unsigned char c : s) ++counts[c];
  double h = 0.0;
  for (int n : counts) {
    if (!n) continue;
    double p = double(n) / double(s.size());
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

std::vector<float> lexical_features(const LogRecord& record) {
  auto count_if = [](std::string_view s, auto pred) {
    return static_cast<float>(std::count_if(s.begin(), s.end(), pred));
  };
  auto digits = [](char c) { return c >= '0' && c <= '9'; };
  auto letters = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  std::string_view host = record.host, uri = record.uri;
  std::string_view query;
  if (auto pos = uri.find('?'); pos != std::string_view::npos)
    query = uri.substr(pos + 1);
  return {
      static_cast<float>(host.size()),
      static_cast<float>(uri.size()),
      static_cast<float>(query.size()),
      static_cast<float>(shannon_entropy(host)),
      static_cast<float>(shannon_entropy(uri)),
      static_cast<float>(shannon_entropy(query)),
      count_if(host, digits),
      count_if(uri, digits),
      count_if(host, letters),
      count_if(uri, letters),
      count_if(host, [](char c) { return c == '.'; }),
      count_if(uri, [](char c) { return c == '/'; }),
  };
}

}  // namespace celest
