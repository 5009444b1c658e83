#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "celest/featurize.hpp"

namespace celest {

// Internal node: split on values[feature] < threshold. Leaf: feature == -1,
// size = number of training points reaching it at truncation.
struct IsoNode {
  int feature = -1;
  float threshold = 0.0f;
  int left = -1;
  int right = -1;
  int size = 0;
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root
};

struct IsoForest {
  std::vector<IsoTree> trees;
  int psi_effective = 0;  // min(psi, |data|), the score normalizer
  int height_limit = 0;
  bool degenerate = false;  // |data| < 2: scores 0.5 everywhere
};

// Average unsuccessful-search path length c(n); exact harmonic numbers for
// small n, ln(n-1) + Euler-Mascheroni above. c(0) = c(1) = 0, c(2) = 1.
double c_factor(std::size_t n);

struct ForestParams {
  int psi = 256;
  int n_trees = 100;
};

// n_trees trees, each on an independent uniform subsample of size
// min(psi, |data|); random (dim, value) splits down to ceil(log2 psi) or
// isolation. Deterministic from seed; tree construction runs in parallel.
IsoForest fit_forest(const std::vector<FeatureVector>& data, int psi, int n_trees,
                     std::uint64_t seed);
IsoForest fit_forest(const std::vector<const FeatureVector*>& data, int psi,
                     int n_trees, std::uint64_t seed);

// Path length of x in one tree: depth reached plus c(leaf size).
double tree_path_length(const IsoTree& tree, std::span<const float> x);

// s(x) = 2^(-E[h(x)] / c(psi_effective)), strictly in (0,1).
double iso_score(const IsoForest& forest, std::span<const float> x);

// Parallel kernel over points.
std::vector<double> iso_score_batch(const IsoForest& forest,
                                    const std::vector<const FeatureVector*>& data);

// Sliding ensemble over the k most recent time windows, oldest first.
struct WindowEnsemble {
  std::vector<IsoForest> forests;
  int k = 3;
};

// Arithmetic mean of member scores; nullopt when the ensemble is empty
// (caller falls back to classifier-only selection).
std::optional<double> ensemble_score(const WindowEnsemble& ensemble,
                                     std::span<const float> x);

// Fits a forest on the new window and appends it, evicting the oldest when
// more than k are held. Empty windows leave the ensemble unchanged.
void advance_window(WindowEnsemble& ensemble,
                    const std::vector<const FeatureVector*>& new_window_data,
                    const ForestParams& params, std::uint64_t seed);

}  // namespace celest
