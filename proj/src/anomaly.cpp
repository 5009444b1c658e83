#include "celest/anomaly.hpp"

#include <algorithm>
#include <cmath>

#include "celest/parallel.hpp"
#include "celest/rng.hpp"

namespace celest {

double c_factor(std::size_t n) {
  if (n < 2) return 0.0;
  double h;  // H(n-1)
  std::size_t m = n - 1;
  if (m <= 256) {
    h = 0.0;
    for (std::size_t i = 1; i <= m; ++i) h += 1.0 / double(i);
  } else {
    h = std::log(double(m)) + 0.5772156649015328606;
  }
  return 2.0 * h - 2.0 * double(m) / double(n);
}

namespace {

struct TreeBuilder {
  const std::vector<const FeatureVector*>& data;
  int dims;
  int height_limit;
  Rng& rng;
  IsoTree tree;

  int build(std::vector<std::uint32_t>& idx, int lo, int hi, int depth) {
    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    int n = hi - lo;
    if (n <= 1 || depth >= height_limit) {
      tree.nodes[node_id].size = n;
      return node_id;
    }
    // candidate dims: non-constant over the node's sample
    std::vector<int> valid;
    for (int d = 0; d < dims; ++d) {
      float mn = data[idx[lo]]->values[d], mx = mn;
      for (int i = lo + 1; i < hi; ++i) {
        float v = data[idx[i]]->values[d];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx > mn) valid.push_back(d);
    }
    if (valid.empty()) {  // all points identical
      tree.nodes[node_id].size = n;
      return node_id;
    }
    int d = valid[rng.uniform_int(valid.size())];
    float mn = data[idx[lo]]->values[d], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      float v = data[idx[i]]->values[d];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    float thr = static_cast<float>(mn + rng.uniform() * (mx - mn));
    if (thr <= mn) thr = std::nextafter(mn, mx);  // both sides stay non-empty

    auto mid_it = std::partition(idx.begin() + lo, idx.begin() + hi,
                                 [&](std::uint32_t i) { return data[i]->values[d] < thr; });
    int mid = static_cast<int>(mid_it - idx.begin());
    tree.nodes[node_id].feature = d;
    tree.nodes[node_id].threshold = thr;
    tree.nodes[node_id].size = n;
    int l = build(idx, lo, mid, depth + 1);
    int r = build(idx, mid, hi, depth + 1);
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

IsoForest fit_forest_impl(const std::vector<const FeatureVector*>& data, int psi,
                          int n_trees, std::uint64_t seed) {
  IsoForest forest;
  if (data.size() < 2) {
    forest.degenerate = true;
    forest.psi_effective = static_cast<int>(data.size());
    return forest;
  }
  const int n = static_cast<int>(data.size());
  const int psi_eff = std::min(psi, n);
  forest.psi_effective = psi_eff;
  forest.height_limit = static_cast<int>(std::ceil(std::log2(double(psi_eff))));
  if (forest.height_limit < 1) forest.height_limit = 1;
  forest.trees.resize(n_trees);
  const int dims = static_cast<int>(data[0]->values.size());

  par::for_range(static_cast<std::size_t>(n_trees), [&](std::size_t t) {
    Rng rng(derive_seed(seed, "isotree", t));
    // uniform subsample without replacement (partial Fisher-Yates)
    std::vector<std::uint32_t> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < psi_eff; ++i) {
      std::size_t j = i + rng.uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(psi_eff);
    TreeBuilder builder{data, dims, forest.height_limit, rng, {}};
    builder.build(idx, 0, psi_eff, 0);
    forest.trees[t] = std::move(builder.tree);
  });
  return forest;
}

}  // namespace

IsoForest fit_forest(const std::vector<const FeatureVector*>& data, int psi,
                     int n_trees, std::uint64_t seed) {
  return fit_forest_impl(data, psi, n_trees, seed);
}

IsoForest fit_forest(const std::vector<FeatureVector>& data, int psi, int n_trees,
                     std::uint64_t seed) {
  std::vector<const FeatureVector*> ptrs;
  ptrs.reserve(data.size());
  for (const auto& s : data) ptrs.push_back(&s);
  return fit_forest_impl(ptrs, psi, n_trees, seed);
}

double tree_path_length(const IsoTree& tree, std::span<const float> x) {
  int node = 0, depth = 0;
  while (tree.nodes[node].feature >= 0) {
    const IsoNode& nd = tree.nodes[node];
    node = x[nd.feature] < nd.threshold ? nd.left : nd.right;
    ++depth;
  }
  return depth + c_factor(static_cast<std::size_t>(tree.nodes[node].size));
}

double iso_score(const IsoForest& forest, std::span<const float> x) {
  if (forest.degenerate || forest.trees.empty()) return 0.5;
  double total = 0.0;
  for (const auto& t : forest.trees) total += tree_path_length(t, x);
  double mean_path = total / double(forest.trees.size());
  return std::pow(2.0, -mean_path / c_factor(forest.psi_effective));
}

std::vector<double> iso_score_batch(const IsoForest& forest,
                                    const std::vector<const FeatureVector*>& data) {
  std::vector<double> out(data.size());
  par::for_range(data.size(),
                 [&](std::size_t i) { out[i] = iso_score(forest, data[i]->values); });
  return out;
}

std::optional<double> ensemble_score(const WindowEnsemble& ensemble,
                                     std::span<const float> x) {
  if (ensemble.forests.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& f : ensemble.forests) total += iso_score(f, x);
  return total / double(ensemble.forests.size());
}

void advance_window(WindowEnsemble& ensemble,
                    const std::vector<const FeatureVector*>& new_window_data,
                    const ForestParams& params, std::uint64_t seed) {
  if (new_window_data.empty()) return;
  ensemble.forests.push_back(
      fit_forest(new_window_data, params.psi, params.n_trees, seed));
  while (static_cast<int>(ensemble.forests.size()) > ensemble.k)
    ensemble.forests.erase(ensemble.forests.begin());
}

}  // namespace celest
