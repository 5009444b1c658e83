#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "celest/rng.hpp"
#include "celest/tokenize.hpp"

namespace celest {

enum class EmbedMode : std::uint8_t { whole_token, ngram_hashed };

// Shared token vocabulary. In whole_token mode tokens get dense indices in
// descending-frequency order (ties broken lexicographically). In
// ngram_hashed mode the vocabulary is implicit: every token maps to hash
// buckets, so no token list is ever exchanged.
struct Vocabulary {
  std::unordered_map<std::string, std::uint32_t> entries;
  std::vector<std::string> tokens_by_index;
  int min_count = 2;
  EmbedMode mode = EmbedMode::whole_token;
  std::uint32_t bucket_count = 0;

  std::size_t size() const { return tokens_by_index.size(); }
};

struct EmbedConfig {
  EmbedMode mode = EmbedMode::ngram_hashed;
  int dim = 32;
  int window = 5;       // context tokens taken from each side
  int nmin = 3;
  int nmax = 6;
  int neg_samples = 5;
  double lr = 0.025;
  std::uint32_t bucket_count = 1u << 20;
  int min_count = 2;
};

// Token vector tables for the CBOW objective with negative sampling.
// Rows are vocabulary indices (whole_token) or hash buckets (ngram_hashed);
// in ngram mode a token's vector is the mean of its n-gram bucket rows, so
// unseen tokens still embed.
struct EmbeddingModel {
  EmbedConfig config;
  Vocabulary vocab;  // populated in whole_token mode only
  std::vector<double> input_vectors;   // rows x dim, row-major
  std::vector<double> output_vectors;  // rows x dim, row-major

  std::uint32_t rows() const {
    return config.mode == EmbedMode::whole_token
               ? static_cast<std::uint32_t>(vocab.size())
               : config.bucket_count;
  }
  const double* input_row(std::uint32_t r) const {
    return input_vectors.data() + std::size_t(r) * config.dim;
  }
  double* input_row(std::uint32_t r) {
    return input_vectors.data() + std::size_t(r) * config.dim;
  }
  const double* output_row(std::uint32_t r) const {
    return output_vectors.data() + std::size_t(r) * config.dim;
  }
  double* output_row(std::uint32_t r) {
    return output_vectors.data() + std::size_t(r) * config.dim;
  }
};

// Server-side vocabulary aggregation: clients submit token frequency maps,
// the server sums them and keeps tokens with total count >= min_count.
Vocabulary build_vocab_federated(
    const std::vector<std::unordered_map<std::string, std::uint64_t>>& client_freqs,
    int min_count);

std::unordered_map<std::string, std::uint64_t> count_tokens(
    const std::vector<TokenSentence>& corpus);

// Input vectors initialized uniform in [-0.5/d, 0.5/d), output vectors zero.
EmbeddingModel init_embedding(const EmbedConfig& config, const Vocabulary& vocab,
                              std::uint64_t seed);

// FNV-1a 64-bit hash modulo bucket_count.
std::uint32_t ngram_bucket(std::string_view gram, std::uint32_t bucket_count);

// Input-table rows a token resolves to: its vocabulary row (whole_token,
// empty if out of vocabulary) or its n-gram buckets (ngram_hashed).
std::vector<std::uint32_t> token_input_rows(const EmbeddingModel& model,
                                            const Token& token);

// Negative-sampling distribution: unigram counts raised to 0.75, sampled by
// binary search on the cumulative table. Entry order is canonical
// (descending count, then lexicographic) so draws are reproducible.
class NegSampler {
 public:
  NegSampler(std::vector<std::pair<std::string, std::uint64_t>> counts);
  // index into entries(); empty sampler returns npos
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t draw(Rng& rng) const;
  const std::vector<std::pair<std::string, std::uint64_t>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::uint64_t>> entries_;
  std::vector<double> cumulative_;
};

// Loss of one CBOW example: logistic loss of context-mean h against each
// (output row, label) target. Exposed so tests can check the analytic
// gradient of the update below by finite differences.
double cbow_example_loss(const EmbeddingModel& model,
                         const std::vector<std::vector<std::uint32_t>>& context_rows,
                         const std::vector<std::pair<std::uint32_t, double>>& targets);

// One exact gradient step on the example loss at rate lr. Used verbatim by
// train_cbow_epoch for every (center, context) pair.
void cbow_apply_example(EmbeddingModel& model,
                        const std::vector<std::vector<std::uint32_t>>& context_rows,
                        const std::vector<std::pair<std::uint32_t, double>>& targets,
                        double lr);

// One pass of stochastic CBOW updates over the corpus, deterministic given
// the seed. Sentence and pair processing is sequential by contract.
void train_cbow_epoch(EmbeddingModel& model,
                      const std::vector<TokenSentence>& corpus,
                      std::uint64_t seed);

// Client-update callback for the sequential federated protocol. The
// protocol never sees a client corpus, only this opaque hook.
using EmbedClientUpdate = std::function<void(EmbeddingModel&, int round)>;

// Sequential federated embedding training: in each round every client, in
// fixed order, receives the current model, trains on its full corpus and
// returns it. The learning rate decays linearly per round.
void federated_embed_train(EmbeddingModel& model,
                           const std::vector<EmbedClientUpdate>& clients,
                           int rounds);

// Token vector lookup; total on all strings in ngram mode, zero vector for
// out-of-vocabulary tokens in whole_token mode.
std::vector<double> embed_token(const EmbeddingModel& model, const Token& token);

// acc += embed_token(model, token); returns false if the token resolved to
// no rows (vector would be zero)
bool accumulate_token_vector(const EmbeddingModel& model, const Token& token,
                             double* acc);

void save_embedding(const std::filesystem::path& path, const EmbeddingModel& model);
EmbeddingModel load_embedding(const std::filesystem::path& path);

}  // namespace celest
