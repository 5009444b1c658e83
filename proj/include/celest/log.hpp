#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace celest {

enum class Label : std::uint8_t { Benign, Malicious, Unlabeled };

std::string_view label_name(Label l);
Label label_from_name(std::string_view s);

// One HTTP log event with all header-derived fields. Column order for the
// TSV form follows Zeek http.log: ts, id.resp_h, id.resp_p, method, host,
// uri, referrer, version, user_agent, request_body_len, response_body_len,
// status_code, trans_depth, content_type, plus two trailing columns (label,
// family) written by the synthetic generator. "-" marks an absent field.
struct LogRecord {
  double timestamp = 0.0;
  std::string external_ip;
  int external_port = 0;
  std::string method;
  std::string host;
  std::string uri;
  std::optional<std::string> referer;
  std::optional<std::string> user_agent;
  int status_code = 0;
  std::optional<std::string> content_type;
  std::uint64_t request_len = 0;
  std::uint64_t response_len = 0;
  std::uint32_t trans_depth = 0;
  double version = 0.0;
  Label label = Label::Unlabeled;
  std::string family;         // ground-truth tag; non-empty only when Malicious
  std::uint64_t record_id = 0;  // assigned at generation or parse time

  bool operator==(const LogRecord&) const = default;
};

enum class LogFormat { tsv, jsonl };

struct ParseResult {
  std::vector<LogRecord> records;
  std::size_t malformed = 0;
};

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed lines are counted and skipped; the tally is returned, never
// silently dropped. Unreadable file throws IngestError.
ParseResult parse_log_file(const std::filesystem::path& path, LogFormat format);
ParseResult parse_log_text(std::string_view text, LogFormat format);

std::string to_tsv_line(const LogRecord& r);
std::string to_jsonl_line(const LogRecord& r);
void write_log_file(const std::filesystem::path& path,
                    const std::vector<LogRecord>& records, LogFormat format);

// Shared attack indicators: domains, IPs and URL substrings, all lowercase.
struct IndicatorSet {
  std::set<std::string> domains;
  std::set<std::string> ips;
  std::set<std::string> url_substrings;
};

// One entry per line, prefixed "domain:", "ip:" or "url:".
IndicatorSet load_indicators(const std::filesystem::path& path);

// One domain per line, lowercased on load.
std::unordered_set<std::string> load_domain_list(const std::filesystem::path& path);

// Popularity/volume data reduction: drop records whose host is in the
// popular set, then drop records whose host appears more than
// contact_threshold times in the input. Order of survivors is preserved.
std::vector<LogRecord> filter_popular(const std::vector<LogRecord>& records,
                                      const std::unordered_set<std::string>& popular_domains,
                                      std::size_t contact_threshold);

// Relabel records matching the indicator set as Malicious (host, external
// IP, or URI substring match). Never downgrades an existing Malicious label.
std::vector<LogRecord> apply_indicators(std::vector<LogRecord> records,
                                        const IndicatorSet& indicators);

std::string to_lower(std::string_view s);

}  // namespace celest
