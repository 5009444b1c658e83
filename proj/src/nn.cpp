#include "celest/nn.hpp"

#include <algorithm>
#include <cmath>

#include "celest/binio.hpp"
#include "celest/parallel.hpp"
#include "json.hpp"

namespace celest {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double label_value(Label l) {
  if (l == Label::Benign) return 0.0;
  if (l == Label::Malicious) return 1.0;
  throw ContractViolation("nn: unlabeled sample in supervised path");
}

// z1 = W1^T x + b1; skips zero inputs, which dominate the one-hot blocks
void hidden_preact(const ModelWeights& w, std::span<const float> x,
                   std::vector<double>& z1) {
  z1.assign(w.hidden, 0.0);
  for (int i = 0; i < w.input_dim; ++i) {
    float xi = x[i];
    if (xi == 0.0f) continue;
    const double* row = w.w1.data() + std::size_t(i) * w.hidden;
    for (int j = 0; j < w.hidden; ++j) z1[j] += xi * row[j];
  }
  for (int j = 0; j < w.hidden; ++j) z1[j] += w.b1[j];
}

}  // namespace

ModelWeights init_weights(int input_dim, const TrainConfig& config) {
  if (input_dim < 1) throw ContractViolation("init_weights: input_dim >= 1");
  ModelWeights w;
  w.input_dim = input_dim;
  w.hidden = config.hidden;
  w.w1.resize(std::size_t(input_dim) * config.hidden);
  w.b1.assign(config.hidden, 0.0);
  w.w2.resize(config.hidden);
  w.b2 = 0.0;
  Rng rng(derive_seed(config.seed, "nn-init"));
  double bound1 = std::sqrt(6.0 / (input_dim + config.hidden));
  for (auto& v : w.w1) v = rng.uniform(-bound1, bound1);
  double bound2 = std::sqrt(6.0 / (config.hidden + 1));
  for (auto& v : w.w2) v = rng.uniform(-bound2, bound2);
  return w;
}

double predict(const ModelWeights& w, std::span<const float> x) {
  if (static_cast<int>(x.size()) != w.input_dim)
    throw ContractViolation("predict: input dim mismatch");
  std::vector<double> z1;
  hidden_preact(w, x, z1);
  double z2 = w.b2;
  for (int j = 0; j < w.hidden; ++j)
    if (z1[j] > 0) z2 += z1[j] * w.w2[j];
  return sigmoid(z2);
}

std::vector<double> predict_batch(const ModelWeights& w,
                                  const std::vector<FeatureVector>& data) {
  std::vector<double> out(data.size());
  par::for_range(data.size(),
                 [&](std::size_t i) { out[i] = predict(w, data[i].values); });
  return out;
}

std::vector<double> predict_batch(const ModelWeights& w,
                                  const std::vector<const FeatureVector*>& data) {
  std::vector<double> out(data.size());
  par::for_range(data.size(),
                 [&](std::size_t i) { out[i] = predict(w, data[i]->values); });
  return out;
}

ModelWeights sgd_update(const ModelWeights& w,
                        const std::vector<const FeatureVector*>& batch,
                        const TrainConfig& config, Rng& rng) {
  if (batch.empty()) throw ContractViolation("sgd_update: empty batch");
  const int H = w.hidden;
  const double inv_b = 1.0 / double(batch.size());
  const double keep = 1.0 - config.dropout_rate;

  std::vector<double> g_w1(w.w1.size(), 0.0), g_b1(H, 0.0), g_w2(H, 0.0);
  double g_b2 = 0.0;

  std::vector<double> z1, h(H), mask(H), dz1(H);
  for (const FeatureVector* s : batch) {
    double y = label_value(s->label);
    hidden_preact(w, s->values, z1);
    // inverted dropout; mask drawn per hidden unit, sample-major order
    for (int j = 0; j < H; ++j) {
      mask[j] = config.dropout_rate > 0.0
                    ? (rng.bernoulli(keep) ? 1.0 / keep : 0.0)
                    : 1.0;
      h[j] = (z1[j] > 0 ? z1[j] : 0.0) * mask[j];
    }
    double z2 = w.b2;
    for (int j = 0; j < H; ++j) z2 += h[j] * w.w2[j];
    double delta2 = (sigmoid(z2) - y) * inv_b;  // d(mean BCE)/dz2

    g_b2 += delta2;
    for (int j = 0; j < H; ++j) {
      g_w2[j] += delta2 * h[j];
      // back through dropout scaling and relu
      dz1[j] = z1[j] > 0 ? delta2 * w.w2[j] * mask[j] : 0.0;
      g_b1[j] += dz1[j];
    }
    for (int i = 0; i < w.input_dim; ++i) {
      float xi = s->values[i];
      if (xi == 0.0f) continue;
      double* row = g_w1.data() + std::size_t(i) * H;
      for (int j = 0; j < H; ++j) row[j] += xi * dz1[j];
    }
  }

  ModelWeights out = w;
  for (std::size_t i = 0; i < out.w1.size(); ++i) out.w1[i] -= config.lr * g_w1[i];
  for (int j = 0; j < H; ++j) {
    out.b1[j] -= config.lr * g_b1[j];
    out.w2[j] -= config.lr * g_w2[j];
  }
  out.b2 -= config.lr * g_b2;
  return out;
}

double loss(const ModelWeights& w, const std::vector<const FeatureVector*>& data) {
  if (data.empty()) throw ContractViolation("loss: empty dataset");
  std::vector<double> scores(data.size());
  par::for_range(data.size(),
                 [&](std::size_t i) { scores[i] = predict(w, data[i]->values); });
  double total = 0.0;  // serial fold in index order keeps the sum deterministic
  for (std::size_t i = 0; i < data.size(); ++i) {
    double y = label_value(data[i]->label);
    double p = std::clamp(scores[i], kClampLo, kClampHi);
    total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return total / double(data.size());
}

double loss(const ModelWeights& w, const std::vector<FeatureVector>& data) {
  std::vector<const FeatureVector*> ptrs;
  ptrs.reserve(data.size());
  for (const auto& s : data) ptrs.push_back(&s);
  return loss(w, ptrs);
}

std::vector<double> flatten(const ModelWeights& w) {
  std::vector<double> out;
  out.reserve(w.param_count());
  out.insert(out.end(), w.w1.begin(), w.w1.end());
  out.insert(out.end(), w.b1.begin(), w.b1.end());
  out.insert(out.end(), w.w2.begin(), w.w2.end());
  out.push_back(w.b2);
  return out;
}

ModelWeights unflatten(const std::vector<double>& params, int input_dim, int hidden) {
  ModelWeights w;
  w.input_dim = input_dim;
  w.hidden = hidden;
  if (params.size() != w.param_count())
    throw ContractViolation("unflatten: parameter vector length mismatch");
  auto it = params.begin();
  w.w1.assign(it, it + std::size_t(input_dim) * hidden);
  it += std::size_t(input_dim) * hidden;
  w.b1.assign(it, it + hidden);
  it += hidden;
  w.w2.assign(it, it + hidden);
  it += hidden;
  w.b2 = *it;
  return w;
}

static constexpr char kCkptMagic[8] = {'C', 'E', 'L', 'N', 'N', '0', '1', '\n'};

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& w) {
  nlohmann::json h;
  h["input_dim"] = w.input_dim;
  h["hidden"] = w.hidden;
  auto params = flatten(w);
  std::vector<float> payload(params.begin(), params.end());
  BlobFile::write(path, kCkptMagic, h.dump(), payload);
}

ModelWeights load_checkpoint(const std::filesystem::path& path) {
  auto [header, payload] = BlobFile::read(path, kCkptMagic);
  nlohmann::json h = nlohmann::json::parse(header);
  std::vector<double> params(payload.begin(), payload.end());
  return unflatten(params, h.at("input_dim").get<int>(), h.at("hidden").get<int>());
}

}  // namespace celest
