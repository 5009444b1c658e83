#include "celest/embed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "celest/binio.hpp"
#include "celest/log.hpp"
#include "json.hpp"

namespace celest {

using nlohmann::json;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string wrapped(const std::string& text) { return "<" + text + ">"; }

}  // namespace

std::unordered_map<std::string, std::uint64_t> count_tokens(
    const std::vector<TokenSentence>& corpus) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) ++counts[t.text];
  return counts;
}

Vocabulary build_vocab_federated(
    const std::vector<std::unordered_map<std::string, std::uint64_t>>& client_freqs,
    int min_count) {
  if (min_count < 1) throw ConfigError("build_vocab_federated: min_count >= 1");
  std::unordered_map<std::string, std::uint64_t> total;
  for (const auto& freqs : client_freqs)
    for (const auto& [tok, n] : freqs) total[tok] += n;

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : total)
    if (n >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.min_count = min_count;
  v.mode = EmbedMode::whole_token;
  v.tokens_by_index.reserve(kept.size());
  for (std::uint32_t i = 0; i < kept.size(); ++i) {
    v.entries.emplace(kept[i].first, i);
    v.tokens_by_index.push_back(kept[i].first);
  }
  return v;
}

EmbeddingModel init_embedding(const EmbedConfig& config, const Vocabulary& vocab,
                              std::uint64_t seed) {
  EmbeddingModel m;
  m.config = config;
  if (config.mode == EmbedMode::whole_token) m.vocab = vocab;
  std::size_t n = std::size_t(m.rows()) * config.dim;
  m.input_vectors.resize(n);
  m.output_vectors.assign(n, 0.0);
  Rng rng(derive_seed(seed, "embed-init"));
  double scale = 1.0 / config.dim;
  for (auto& x : m.input_vectors) x = (rng.uniform() - 0.5) * scale;
  return m;
}

std::uint32_t ngram_bucket(std::string_view gram, std::uint32_t bucket_count) {
  return static_cast<std::uint32_t>(fnv1a64(gram) % bucket_count);
}

std::vector<std::uint32_t> token_input_rows(const EmbeddingModel& model,
                                            const Token& token) {
  std::vector<std::uint32_t> rows;
  if (model.config.mode == EmbedMode::whole_token) {
    auto it = model.vocab.entries.find(token.text);
    if (it != model.vocab.entries.end()) rows.push_back(it->second);
  } else {
    for (const auto& g : char_ngrams(token, model.config.nmin, model.config.nmax))
      rows.push_back(ngram_bucket(g, model.config.bucket_count));
  }
  return rows;
}

NegSampler::NegSampler(std::vector<std::pair<std::string, std::uint64_t>> counts)
    : entries_(std::move(counts)) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  cumulative_.reserve(entries_.size());
  double acc = 0.0;
  for (const auto& [tok, n] : entries_) {
    acc += std::pow(static_cast<double>(n), 0.75);
    cumulative_.push_back(acc);
  }
}

std::size_t NegSampler::draw(Rng& rng) const {
  if (entries_.empty()) return npos;
  double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

double cbow_example_loss(const EmbeddingModel& model,
                         const std::vector<std::vector<std::uint32_t>>& context_rows,
                         const std::vector<std::pair<std::uint32_t, double>>& targets) {
  const int d = model.config.dim;
  std::vector<double> h(d, 0.0);
  for (const auto& rows : context_rows) {
    if (rows.empty()) continue;
    double inv = 1.0 / (double(rows.size()) * double(context_rows.size()));
    for (auto r : rows) {
      const double* v = model.input_row(r);
      for (int k = 0; k < d; ++k) h[k] += v[k] * inv;
    }
  }
  double loss = 0.0;
  for (const auto& [row, label] : targets) {
    const double* o = model.output_row(row);
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += h[k] * o[k];
    double s = sigmoid(dot);
    s = std::clamp(s, 1e-12, 1.0 - 1e-12);
    loss += -(label * std::log(s) + (1.0 - label) * std::log(1.0 - s));
  }
  return loss;
}

void cbow_apply_example(EmbeddingModel& model,
                        const std::vector<std::vector<std::uint32_t>>& context_rows,
                        const std::vector<std::pair<std::uint32_t, double>>& targets,
                        double lr) {
  const int d = model.config.dim;
  std::vector<double> h(d, 0.0);
  std::size_t n_ctx = context_rows.size();
  for (const auto& rows : context_rows) {
    if (rows.empty()) continue;
    double inv = 1.0 / (double(rows.size()) * double(n_ctx));
    for (auto r : rows) {
      const double* v = model.input_row(r);
      for (int k = 0; k < d; ++k) h[k] += v[k] * inv;
    }
  }

  // d(loss)/dh accumulated against pre-update output rows
  std::vector<double> grad_h(d, 0.0);
  for (const auto& [row, label] : targets) {
    double* o = model.output_row(row);
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += h[k] * o[k];
    double g = sigmoid(dot) - label;
    for (int k = 0; k < d; ++k) {
      grad_h[k] += g * o[k];
      o[k] -= lr * g * h[k];
    }
  }
  for (const auto& rows : context_rows) {
    if (rows.empty()) continue;
    double inv = 1.0 / (double(rows.size()) * double(n_ctx));
    for (auto r : rows) {
      double* v = model.input_row(r);
      for (int k = 0; k < d; ++k) v[k] -= lr * grad_h[k] * inv;
    }
  }
}

void train_cbow_epoch(EmbeddingModel& model,
                      const std::vector<TokenSentence>& corpus,
                      std::uint64_t seed) {
  const bool whole = model.config.mode == EmbedMode::whole_token;
  const int window = model.config.window;

  // unigram counts for the negative sampler; whole mode counts in-vocab only
  auto counts = count_tokens(corpus);
  std::vector<std::pair<std::string, std::uint64_t>> sampler_counts;
  for (auto& [tok, n] : counts) {
    if (whole && !model.vocab.entries.contains(tok)) continue;
    sampler_counts.emplace_back(tok, n);
  }
  NegSampler sampler(std::move(sampler_counts));

  // precomputed output row per sampler entry
  std::vector<std::uint32_t> entry_out_row(sampler.entries().size());
  std::unordered_map<std::string, std::uint32_t> out_row_of;
  for (std::size_t i = 0; i < sampler.entries().size(); ++i) {
    const std::string& tok = sampler.entries()[i].first;
    std::uint32_t row = whole ? model.vocab.entries.at(tok)
                              : ngram_bucket(wrapped(tok), model.config.bucket_count);
    entry_out_row[i] = row;
    out_row_of.emplace(tok, row);
  }

  Rng rng(derive_seed(seed, "cbow-epoch"));
  std::vector<std::vector<std::uint32_t>> sentence_rows;
  std::vector<const std::string*> sentence_toks;
  std::vector<std::vector<std::uint32_t>> ctx;
  std::vector<std::pair<std::uint32_t, double>> targets;

  for (const auto& sentence : corpus) {
    sentence_rows.clear();
    sentence_toks.clear();
    for (const auto& t : sentence.tokens) {
      auto rows = token_input_rows(model, t);
      if (rows.empty()) continue;  // out of vocabulary (whole mode)
      sentence_rows.push_back(std::move(rows));
      sentence_toks.push_back(&t.text);
    }
    const int n = static_cast<int>(sentence_rows.size());
    for (int i = 0; i < n; ++i) {
      ctx.clear();
      for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j)
        if (j != i) ctx.push_back(sentence_rows[j]);
      if (ctx.empty()) continue;

      const std::string& center = *sentence_toks[i];
      auto center_out = out_row_of.find(center);
      if (center_out == out_row_of.end()) continue;
      targets.clear();
      targets.emplace_back(center_out->second, 1.0);
      for (int k = 0; k < model.config.neg_samples; ++k) {
        std::size_t e = sampler.draw(rng);
        if (e == NegSampler::npos) break;
        if (sampler.entries()[e].first == center) continue;
        targets.emplace_back(entry_out_row[e], 0.0);
      }
      cbow_apply_example(model, ctx, targets, model.config.lr);
    }
  }
}

void federated_embed_train(EmbeddingModel& model,
                           const std::vector<EmbedClientUpdate>& clients,
                           int rounds) {
  if (clients.empty())
    throw ConfigError("federated_embed_train: no clients configured");
  if (rounds < 1) throw ConfigError("federated_embed_train: rounds >= 1");
  const double base_lr = model.config.lr;
  for (int r = 1; r <= rounds; ++r) {
    model.config.lr = base_lr * double(rounds - r + 1) / double(rounds);
    for (const auto& client : clients) client(model, r);
  }
  model.config.lr = base_lr;
}

std::vector<double> embed_token(const EmbeddingModel& model, const Token& token) {
  std::vector<double> v(model.config.dim, 0.0);
  accumulate_token_vector(model, token, v.data());
  return v;
}

bool accumulate_token_vector(const EmbeddingModel& model, const Token& token,
                             double* acc) {
  auto rows = token_input_rows(model, token);
  if (rows.empty()) return false;
  const int d = model.config.dim;
  double inv = 1.0 / double(rows.size());
  for (auto r : rows) {
    const double* v = model.input_row(r);
    for (int k = 0; k < d; ++k) acc[k] += v[k] * inv;
  }
  return true;
}

static constexpr char kEmbedMagic[8] = {'C', 'E', 'L', 'E', 'M', 'B', '0', '1'};

void save_embedding(const std::filesystem::path& path, const EmbeddingModel& m) {
  json h;
  h["mode"] = m.config.mode == EmbedMode::whole_token ? "whole_token" : "ngram_hashed";
  h["dim"] = m.config.dim;
  h["window"] = m.config.window;
  h["nmin"] = m.config.nmin;
  h["nmax"] = m.config.nmax;
  h["neg_samples"] = m.config.neg_samples;
  h["lr"] = m.config.lr;
  h["bucket_count"] = m.config.bucket_count;
  h["min_count"] = m.config.min_count;
  h["vocab"] = m.vocab.tokens_by_index;

  std::vector<float> payload;
  payload.reserve(m.input_vectors.size() + m.output_vectors.size());
  for (double x : m.input_vectors) payload.push_back(static_cast<float>(x));
  for (double x : m.output_vectors) payload.push_back(static_cast<float>(x));
  BlobFile::write(path, kEmbedMagic, h.dump(), payload);
}

EmbeddingModel load_embedding(const std::filesystem::path& path) {
  auto [header, payload] = BlobFile::read(path, kEmbedMagic);
  json h = json::parse(header);
  EmbeddingModel m;
  m.config.mode = h.at("mode").get<std::string>() == "whole_token"
                      ? EmbedMode::whole_token
                      : EmbedMode::ngram_hashed;
  m.config.dim = h.at("dim").get<int>();
  m.config.window = h.at("window").get<int>();
  m.config.nmin = h.at("nmin").get<int>();
  m.config.nmax = h.at("nmax").get<int>();
  m.config.neg_samples = h.at("neg_samples").get<int>();
  m.config.lr = h.at("lr").get<double>();
  m.config.bucket_count = h.at("bucket_count").get<std::uint32_t>();
  m.config.min_count = h.at("min_count").get<int>();
  m.vocab.mode = m.config.mode;
  m.vocab.min_count = m.config.min_count;
  m.vocab.bucket_count = m.config.bucket_count;
  m.vocab.tokens_by_index = h.at("vocab").get<std::vector<std::string>>();
  for (std::uint32_t i = 0; i < m.vocab.tokens_by_index.size(); ++i)
    m.vocab.entries.emplace(m.vocab.tokens_by_index[i], i);

  std::size_t n = std::size_t(m.rows()) * m.config.dim;
  if (payload.size() != 2 * n)
    throw std::runtime_error("embedding payload size mismatch");
  m.input_vectors.assign(payload.begin(), payload.begin() + n);
  m.output_vectors.assign(payload.begin() + n, payload.end());
  return m;
}

}  // namespace celest
