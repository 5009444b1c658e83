#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "celest/embed.hpp"
#include "celest/log.hpp"
#include "celest/tokenize.hpp"

namespace celest {

struct UaInfo {
  std::string device;   // pc, mobile, tablet, bot, other
  std::string browser;  // chrome, firefox, ...
  std::string os;       // windows, macos, linux, android, ios, other
  double major = 0.0;   // browser version
  double minor = 0.0;
};

// Small table-driven parser; substring checks only, no regex.
UaInfo parse_user_agent(std::string_view ua);

// The 13 embedded slots: which (source field, token category) pairs
// contribute a d-wide mean-embedding block, in fixed order.
struct EmbeddedSlot {
  SourceField source;
  TokenCategory category;
};
const std::array<EmbeddedSlot, 13>& embedded_slots();

inline constexpr int kNumericalDim = 11;
inline constexpr int kIpBlockDim = 768;  // 3 octets x 256

// Immutable once fitted. Categorical vocabularies come from the most
// frequent training values; the last slot of each block is OTHER/UNKNOWN.
struct FeatureLayout {
  int d = 0;
  std::vector<int> port_vocab;           // top (port_slots - 1) ports
  std::vector<std::string> ua_device_vocab;
  std::vector<std::string> ua_browser_vocab;
  std::vector<std::string> ua_os_vocab;
  std::vector<std::string> method_vocab;
  std::vector<int> status_vocab;
  std::vector<std::string> ctype_vocab;

  int embedded_off() const { return 0; }
  int embedded_dim() const { return 13 * d; }
  int numerical_off() const { return embedded_dim(); }
  int ip_off() const { return numerical_off() + kNumericalDim; }
  int port_off() const { return ip_off() + kIpBlockDim; }
  int port_dim() const { return static_cast<int>(port_vocab.size()) + 1; }
  int ua_device_off() const { return port_off() + port_dim(); }
  int ua_device_dim() const { return static_cast<int>(ua_device_vocab.size()) + 1; }
  int ua_browser_off() const { return ua_device_off() + ua_device_dim(); }
  int ua_browser_dim() const { return static_cast<int>(ua_browser_vocab.size()) + 1; }
  int ua_os_off() const { return ua_browser_off() + ua_browser_dim(); }
  int ua_os_dim() const { return static_cast<int>(ua_os_vocab.size()) + 1; }
  int method_off() const { return ua_os_off() + ua_os_dim(); }
  int method_dim() const { return static_cast<int>(method_vocab.size()) + 1; }
  int status_off() const { return method_off() + method_dim(); }
  int status_dim() const { return static_cast<int>(status_vocab.size()) + 1; }
  int ctype_off() const { return status_off() + status_dim(); }
  int ctype_dim() const { return static_cast<int>(ctype_vocab.size()) + 1; }
  int total_dim() const { return ctype_off() + ctype_dim(); }
};

// Fixed-width numeric view of one log record.
struct FeatureVector {
  std::vector<float> values;
  Label label = Label::Unlabeled;   // training-visible label
  std::uint64_t record_id = 0;
  std::string family;               // ground truth, evaluation only
};

// Builds the categorical vocabularies from training records. Ports keep the
// top port_slots-1 values; the other blocks keep every training value.
FeatureLayout fit_layout(const std::vector<LogRecord>& records,
                         const EmbeddingModel& model, int port_slots);

FeatureVector featurize(const LogRecord& record, const FeatureLayout& layout,
                        const EmbeddingModel& model);

// Parallel kernel (serial reference selected via par::mode()).
std::vector<FeatureVector> featurize_batch(const std::vector<LogRecord>& records,
                                           const FeatureLayout& layout,
                                           const EmbeddingModel& model);

enum class FeatureGroup { Domain_URL, UA_Referer, External_Host, HTTP_Metadata, All };

FeatureGroup feature_group_from_name(std::string_view name);

// Zeroes all dimensions outside the group; All is the identity.
FeatureVector select_feature_group(const FeatureVector& v, FeatureGroup group,
                                   const FeatureLayout& layout);

void save_layout(const std::filesystem::path& path, const FeatureLayout& layout);
FeatureLayout load_layout(const std::filesystem::path& path);

// Minimal lexical baseline: 12 hand-crafted URL/domain features (lengths,
// entropies, digit/letter counts) used only for representation ablations.
std::vector<float> lexical_features(const LogRecord& record);
inline constexpr int kLexicalDim = 12;

}  // namespace celest
