#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "celest/featurize.hpp"
#include "celest/rng.hpp"

namespace celest {

// Feed-forward binary classifier: input -> hidden (ReLU) -> sigmoid.
struct ModelWeights {
  int input_dim = 0;
  int hidden = 0;
  std::vector<double> w1;  // input_dim x hidden, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  std::size_t param_count() const {
    return std::size_t(input_dim) * hidden + hidden + hidden + 1;
  }
};

struct TrainConfig {
  int hidden = 128;
  double dropout_rate = 0.1;
  double lr = 0.01;
  int batch_size = 64;
  int local_epochs = 1;
  std::uint64_t seed = 1;
  // sample each batch 50/50 malicious/benign when malicious samples exist
  bool balanced_batches = true;
};

struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Xavier-uniform weights, zero biases, deterministic from config.seed.
ModelWeights init_weights(int input_dim, const TrainConfig& config);

// sigmoid(w2 . relu(W1^T x + b1) + b2); no dropout at inference.
double predict(const ModelWeights& w, std::span<const float> x);

// Parallel kernel over rows (serial reference via par::mode()).
std::vector<double> predict_batch(const ModelWeights& w,
                                  const std::vector<FeatureVector>& data);
std::vector<double> predict_batch(const ModelWeights& w,
                                  const std::vector<const FeatureVector*>& data);

// One mini-batch gradient step on mean binary cross-entropy with inverted
// dropout on the hidden activations. Batch labels must be Benign/Malicious.
ModelWeights sgd_update(const ModelWeights& w,
                        const std::vector<const FeatureVector*>& batch,
                        const TrainConfig& config, Rng& rng);

// Mean binary cross-entropy, predictions clamped to [1e-7, 1-1e-7], no
// dropout.
double loss(const ModelWeights& w, const std::vector<const FeatureVector*>& data);
double loss(const ModelWeights& w, const std::vector<FeatureVector>& data);

// Lossless fixed ordering: W1 row-major, b1, W2, b2.
std::vector<double> flatten(const ModelWeights& w);
ModelWeights unflatten(const std::vector<double>& params, int input_dim, int hidden);

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace celest
