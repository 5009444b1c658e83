#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace celest {

enum class TokenCategory : std::uint8_t {
  SUBDOMAIN,
  DOMAIN,
  TLD,
  PATH,
  FILENAME,
  EXTENSION,
  QUERY_KEY,
  QUERY_VALUE,
  FRAGMENT
};

std::string_view token_category_name(TokenCategory c);

struct Token {
  std::string text;  // lowercase, non-empty
  TokenCategory category;
  bool operator==(const Token&) const = default;
};

enum class SourceField : std::uint8_t { domain, url, referer };

// A URL-ish string viewed as a sentence of category-tagged tokens, in
// left-to-right order of the original string within each category.
struct TokenSentence {
  std::vector<Token> tokens;
  SourceField source_field = SourceField::url;
};

// Optional public-suffix list (one suffix per line). Without it the
// tokenizer falls back to the single-label heuristic: last label is the TLD.
class SuffixList {
 public:
  static SuffixList load(const std::filesystem::path& path);
  void add(std::string_view suffix);
  // number of labels of the longest matching suffix of host, 0 if none
  std::size_t match_labels(const std::vector<std::string>& labels) const;
  bool empty() const { return suffixes_.empty(); }

 private:
  std::vector<std::string> suffixes_;  // lowercase, no leading dot
};

// Rightmost suffix label(s) -> TLD, label left of it -> DOMAIN, remaining
// labels (order preserved) -> SUBDOMAIN. Single-label host yields DOMAIN only.
TokenSentence tokenize_domain(std::string_view host,
                              const SuffixList* suffixes = nullptr);

// Path segments -> PATH, last segment split at the final "." into FILENAME
// and EXTENSION, query pairs -> QUERY_KEY/QUERY_VALUE, "#..." -> FRAGMENT.
// %XX escapes are decoded once before tokenizing.
TokenSentence tokenize_url(std::string_view uri);

// Full referer URL: scheme and port stripped, host tokenized as a domain,
// the rest as a URL; all tokens carry source_field = referer.
TokenSentence tokenize_referer(std::string_view referer,
                               const SuffixList* suffixes = nullptr);

// All contiguous character n-grams of the "<"-and-">"-wrapped token text,
// lengths nmin..nmax ordered by length then position, plus the full wrapped
// token when it is longer than nmax. Duplicates are preserved (bag
// semantics).
std::vector<std::string> char_ngrams(const Token& token, int nmin, int nmax);

// Single-pass %XX -> byte decoding; malformed escapes are left verbatim.
std::string percent_decode_once(std::string_view s);

}  // namespace celest
