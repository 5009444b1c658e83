#include "celest/log.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace celest {

using nlohmann::json;

std::string_view label_name(Label l) {
  switch (l) {
    case Label::Benign: return "benign";
    case Label::Malicious: return "malicious";
    default: return "unlabeled";
  }
}

Label label_from_name(std::string_view s) {
  if (s == "benign") return Label::Benign;
  if (s == "malicious") return Label::Malicious;
  if (s == "unlabeled" || s == "-") return Label::Unlabeled;
  throw IngestError("unknown label: " + std::string(s));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

constexpr std::string_view kAbsent = "-";

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is available in libstdc++ 11
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

std::string fmt_double(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Columns: ts, external_ip, external_port, method, host, uri, referrer,
// version, user_agent, request_body_len, response_body_len, status_code,
// trans_depth, content_type [, label [, family]]
bool record_from_tsv(std::string_view line, LogRecord& r) {
  auto cols = split_tabs(line);
  if (cols.size() < 14 || cols.size() > 16) return false;
  if (!parse_double(cols[0], r.timestamp)) return false;
  r.external_ip = std::string(cols[1]);
  if (!parse_int(cols[2], r.external_port)) return false;
  if (r.external_port < 0 || r.external_port > 65535) return false;
  r.method = std::string(cols[3]);
  r.host = std::string(cols[4]);
  r.uri = std::string(cols[5]);
  r.referer = cols[6] == kAbsent ? std::nullopt
                                 : std::make_optional(std::string(cols[6]));
  if (cols[7] == kAbsent) {
    r.version = 0.0;
  } else if (!parse_double(cols[7], r.version)) {
    return false;
  }
  r.user_agent = cols[8] == kAbsent ? std::nullopt
                                    : std::make_optional(std::string(cols[8]));
  if (!parse_int(cols[9], r.request_len)) return false;
  if (!parse_int(cols[10], r.response_len)) return false;
  if (!parse_int(cols[11], r.status_code)) return false;
  if (r.status_code < 0 || r.status_code > 999) return false;
  if (!parse_int(cols[12], r.trans_depth)) return false;
  r.content_type = cols[13] == kAbsent
                       ? std::nullopt
                       : std::make_optional(std::string(cols[13]));
  r.label = Label::Unlabeled;
  r.family.clear();
  if (cols.size() >= 15) {
    try {
      r.label = label_from_name(cols[14]);
    } catch (const IngestError&) {
      return false;
    }
  }
  if (cols.size() == 16 && cols[15] != kAbsent) {
    r.family = std::string(cols[15]);
    if (r.label != Label::Malicious) return false;  // invariant
  }
  return true;
}

bool record_from_json(const json& j, LogRecord& r) {
  try {
    r.timestamp = j.at("timestamp").get<double>();
    r.external_ip = j.at("external_ip").get<std::string>();
    r.external_port = j.at("external_port").get<int>();
    if (r.external_port < 0 || r.external_port > 65535) return false;
    r.method = j.at("method").get<std::string>();
    r.host = j.at("host").get<std::string>();
    r.uri = j.at("uri").get<std::string>();
    r.referer = j.contains("referer")
                    ? std::make_optional(j["referer"].get<std::string>())
                    : std::nullopt;
    r.user_agent = j.contains("user_agent")
                       ? std::make_optional(j["user_agent"].get<std::string>())
                       : std::nullopt;
    r.status_code = j.at("status_code").get<int>();
    if (r.status_code < 0 || r.status_code > 999) return false;
    r.content_type = j.contains("content_type")
                         ? std::make_optional(j["content_type"].get<std::string>())
                         : std::nullopt;
    r.request_len = j.at("request_len").get<std::uint64_t>();
    r.response_len = j.at("response_len").get<std::uint64_t>();
    r.trans_depth = j.at("trans_depth").get<std::uint32_t>();
    r.version = j.contains("version") ? j["version"].get<double>() : 0.0;
    r.label = j.contains("label")
                  ? label_from_name(j["label"].get<std::string>())
                  : Label::Unlabeled;
    r.family = j.contains("family") ? j["family"].get<std::string>() : "";
    if (!r.family.empty() && r.label != Label::Malicious) return false;
  } catch (const json::exception&) {
    return false;
  } catch (const IngestError&) {
    return false;
  }
  return true;
}

}  // namespace

ParseResult parse_log_text(std::string_view text, LogFormat format) {
  ParseResult out;
  std::uint64_t next_id = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') continue;  // "#fields" style headers ignored
    LogRecord r;
    bool ok = false;
    if (format == LogFormat::tsv) {
      ok = record_from_tsv(line, r);
    } else {
      json j = json::parse(line, nullptr, false);
      ok = !j.is_discarded() && j.is_object() && record_from_json(j, r);
    }
    if (ok) {
      r.record_id = next_id++;
      out.records.push_back(std::move(r));
    } else {
      ++out.malformed;
    }
  }
  return out;
}

ParseResult parse_log_file(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open log file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_log_text(ss.str(), format);
}

std::string to_tsv_line(const LogRecord& r) {
  std::ostringstream o;
  o << fmt_double(r.timestamp, 6) << '\t' << r.external_ip << '\t'
    << r.external_port << '\t' << r.method << '\t' << r.host << '\t' << r.uri
    << '\t' << (r.referer ? *r.referer : std::string(kAbsent)) << '\t'
    << (r.version == 0.0 ? std::string(kAbsent) : fmt_double(r.version, 1))
    << '\t' << (r.user_agent ? *r.user_agent : std::string(kAbsent)) << '\t'
    << r.request_len << '\t' << r.response_len << '\t' << r.status_code << '\t'
    << r.trans_depth << '\t'
    << (r.content_type ? *r.content_type : std::string(kAbsent)) << '\t'
    << label_name(r.label) << '\t'
    << (r.family.empty() ? std::string(kAbsent) : r.family);
  return o.str();
}

std::string to_jsonl_line(const LogRecord& r) {
  json j;
  j["timestamp"] = r.timestamp;
  j["external_ip"] = r.external_ip;
  j["external_port"] = r.external_port;
  j["method"] = r.method;
  j["host"] = r.host;
  j["uri"] = r.uri;
  if (r.referer) j["referer"] = *r.referer;
  if (r.user_agent) j["user_agent"] = *r.user_agent;
  j["status_code"] = r.status_code;
  if (r.content_type) j["content_type"] = *r.content_type;
  j["request_len"] = r.request_len;
  j["response_len"] = r.response_len;
  j["trans_depth"] = r.trans_depth;
  if (r.version != 0.0) j["version"] = r.version;
  j["label"] = std::string(label_name(r.label));
  if (!r.family.empty()) j["family"] = r.family;
  return j.dump();
}

void write_log_file(const std::filesystem::path& path,
                    const std::vector<LogRecord>& records, LogFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write log file: " + path.string());
  for (const auto& r : records) {
    out << (format == LogFormat::tsv ? to_tsv_line(r) : to_jsonl_line(r))
        << '\n';
  }
}

IndicatorSet load_indicators(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open indicator file: " + path.string());
  IndicatorSet set;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto add = [&](std::string_view prefix, std::set<std::string>& dst) {
      if (line.rfind(prefix, 0) != 0) return false;
      std::string v = to_lower(line.substr(prefix.size()));
      if (!v.empty()) dst.insert(std::move(v));
      return true;
    };
    if (!add("domain:", set.domains) && !add("ip:", set.ips) &&
        !add("url:", set.url_substrings)) {
      throw IngestError("bad indicator line: " + line);
    }
  }
  return set;
}

std::unordered_set<std::string> load_domain_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open domain list: " + path.string());
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.insert(to_lower(line));
  }
  return out;
}

std::vector<LogRecord> filter_popular(const std::vector<LogRecord>& records,
                                      const std::unordered_set<std::string>& popular_domains,
                                      std::size_t contact_threshold) {
  if (contact_threshold == 0) throw ConfigError("contact_threshold must be > 0");
  // contact counts are per input sequence (one analysis window)
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[to_lower(r.host)];
  std::vector<LogRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::string h = to_lower(r.host);
    if (popular_domains.contains(h)) continue;
    if (counts[h] > contact_threshold) continue;  // "more than" is strict
    out.push_back(r);
  }
  return out;
}

std::vector<LogRecord> apply_indicators(std::vector<LogRecord> records,
                                        const IndicatorSet& indicators) {
  for (auto& r : records) {
    if (r.label == Label::Malicious) continue;
    bool hit = indicators.domains.contains(to_lower(r.host)) ||
               indicators.ips.contains(r.external_ip);
    if (!hit) {
      std::string uri = to_lower(r.uri);
      for (const auto& sub : indicators.url_substrings) {
        if (uri.find(sub) != std::string::npos) {
          hit = true;
          break;
        }
      }
    }
    if (hit) r.label = Label::Malicious;
  }
  return records;
}

}  // namespace celest
