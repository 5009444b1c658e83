#include "celest/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "celest/log.hpp"

namespace celest {

std::string_view token_category_name(TokenCategory c) {
  switch (c) {
    case TokenCategory::SUBDOMAIN: return "SUBDOMAIN";
    case TokenCategory::DOMAIN: return "DOMAIN";
    case TokenCategory::TLD: return "TLD";
    case TokenCategory::PATH: return "PATH";
    case TokenCategory::FILENAME: return "FILENAME";
    case TokenCategory::EXTENSION: return "EXTENSION";
    case TokenCategory::QUERY_KEY: return "QUERY_KEY";
    case TokenCategory::QUERY_VALUE: return "QUERY_VALUE";
    case TokenCategory::FRAGMENT: return "FRAGMENT";
  }
  return "?";
}

SuffixList SuffixList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suffix list: " + path.string());
  SuffixList sl;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    sl.add(line);
  }
  return sl;
}

void SuffixList::add(std::string_view suffix) {
  std::string s = to_lower(suffix);
  while (!s.empty() && s.front() == '.') s.erase(s.begin());
  if (!s.empty()) suffixes_.push_back(std::move(s));
}

std::size_t SuffixList::match_labels(const std::vector<std::string>& labels) const {
  std::size_t best = 0;
  for (const auto& sfx : suffixes_) {
    // count labels in the suffix
    std::size_t n = 1 + static_cast<std::size_t>(
                            std::count(sfx.begin(), sfx.end(), '.'));
    if (n > labels.size() || n <= best) continue;
    std::string tail;
    for (std::size_t i = labels.size() - n; i < labels.size(); ++i) {
      if (!tail.empty()) tail += '.';
      tail += labels[i];
    }
    if (tail == sfx) best = n;
  }
  return best;
}

namespace {

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::string> split_labels(std::string_view host) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start <= host.size()) {
    std::size_t pos = host.find('.', start);
    if (pos == std::string_view::npos) pos = host.size();
    if (pos > start) labels.push_back(to_lower(host.substr(start, pos - start)));
    if (pos == host.size()) break;
    start = pos + 1;
  }
  return labels;
}

void tokenize_path_query(std::string_view rest, SourceField field,
                         TokenSentence& out) {
  std::string decoded = percent_decode_once(rest);
  std::string_view s = decoded;

  std::string_view fragment;
  if (auto pos = s.find('#'); pos != std::string_view::npos) {
    fragment = s.substr(pos + 1);
    s = s.substr(0, pos);
  }
  std::string_view query;
  if (auto pos = s.find('?'); pos != std::string_view::npos) {
    query = s.substr(pos + 1);
    s = s.substr(0, pos);
  }

  // path segments
  std::vector<std::string_view> segs;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find('/', start);
    if (pos == std::string_view::npos) pos = s.size();
    if (pos > start) segs.push_back(s.substr(start, pos - start));
    if (pos == s.size()) break;
    start = pos + 1;
  }
  for (std::size_t i = 0; i + 1 < segs.size(); ++i)
    out.tokens.push_back({to_lower(segs[i]), TokenCategory::PATH});
  if (!segs.empty()) {
    std::string_view last = segs.back();
    std::size_t dot = last.rfind('.');
    if (dot != std::string_view::npos && dot > 0 && dot + 1 < last.size()) {
      out.tokens.push_back({to_lower(last.substr(0, dot)), TokenCategory::FILENAME});
      out.tokens.push_back({to_lower(last.substr(dot + 1)), TokenCategory::EXTENSION});
    } else {
      out.tokens.push_back({to_lower(last), TokenCategory::FILENAME});
    }
  }

  // query pairs
  start = 0;
  while (!query.empty() && start <= query.size()) {
    std::size_t pos = query.find('&', start);
    if (pos == std::string_view::npos) pos = query.size();
    std::string_view pair = query.substr(start, pos - start);
    if (!pair.empty()) {
      std::size_t eq = pair.find('=');
      if (eq == std::string_view::npos) {
        out.tokens.push_back({to_lower(pair), TokenCategory::QUERY_KEY});
      } else {
        if (eq > 0)
          out.tokens.push_back({to_lower(pair.substr(0, eq)), TokenCategory::QUERY_KEY});
        if (eq + 1 < pair.size())
          out.tokens.push_back(
              {to_lower(pair.substr(eq + 1)), TokenCategory::QUERY_VALUE});
      }
    }
    if (pos == query.size()) break;
    start = pos + 1;
  }

  if (!fragment.empty())
    out.tokens.push_back({to_lower(fragment), TokenCategory::FRAGMENT});
  (void)field;
}

}  // namespace

std::string percent_decode_once(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_val(s[i + 1]), lo = hex_val(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

TokenSentence tokenize_domain(std::string_view host, const SuffixList* suffixes) {
  if (host.empty()) throw std::invalid_argument("tokenize_domain: empty host");
  TokenSentence out;
  out.source_field = SourceField::domain;
  auto labels = split_labels(host);
  if (labels.empty()) return out;

  std::size_t tld_labels = 0;
  if (suffixes && !suffixes->empty()) tld_labels = suffixes->match_labels(labels);
  if (tld_labels == 0 && labels.size() > 1) tld_labels = 1;
  if (tld_labels >= labels.size()) tld_labels = labels.size() - 1;

  std::size_t domain_idx = labels.size() - tld_labels - 1;
  for (std::size_t i = 0; i < domain_idx; ++i)
    out.tokens.push_back({labels[i], TokenCategory::SUBDOMAIN});
  out.tokens.push_back({labels[domain_idx], TokenCategory::DOMAIN});
  if (tld_labels > 0) {
    std::string tld;
    for (std::size_t i = domain_idx + 1; i < labels.size(); ++i) {
      if (!tld.empty()) tld += '.';
      tld += labels[i];
    }
    out.tokens.push_back({std::move(tld), TokenCategory::TLD});
  }
  return out;
}

TokenSentence tokenize_url(std::string_view uri) {
  TokenSentence out;
  out.source_field = SourceField::url;
  if (uri.empty()) return out;
  tokenize_path_query(uri, SourceField::url, out);
  return out;
}

TokenSentence tokenize_referer(std::string_view referer, const SuffixList* suffixes) {
  TokenSentence out;
  out.source_field = SourceField::referer;
  if (referer.empty()) return out;

  std::string_view s = referer;
  if (auto pos = s.find("://"); pos != std::string_view::npos) s = s.substr(pos + 3);
  std::size_t slash = s.find('/');
  std::string_view hostport = s.substr(0, slash);
  std::string_view rest = slash == std::string_view::npos ? "" : s.substr(slash);
  if (auto colon = hostport.rfind(':'); colon != std::string_view::npos)
    hostport = hostport.substr(0, colon);

  if (!hostport.empty()) {
    TokenSentence dom = tokenize_domain(hostport, suffixes);
    out.tokens.insert(out.tokens.end(), dom.tokens.begin(), dom.tokens.end());
  }
  if (!rest.empty()) tokenize_path_query(rest, SourceField::referer, out);
  return out;
}

std::vector<std::string> char_ngrams(const Token& token, int nmin, int nmax) {
  if (nmin < 1 || nmin > nmax)
    throw std::invalid_argument("char_ngrams: need 1 <= nmin <= nmax");
  std::string wrapped = "<" + token.text + ">";
  const int len = static_cast<int>(wrapped.size());
  std::vector<std::string> out;
  for (int n = nmin; n <= nmax; ++n)
    for (int i = 0; i + n <= len; ++i) out.push_back(wrapped.substr(i, n));
  if (len > nmax) out.push_back(wrapped);
  return out;
}

}  // namespace celest
