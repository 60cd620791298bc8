#include "crosscbr/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "crosscbr/kernels.hpp"
#include "crosscbr/rng.hpp"

namespace crosscbr {

namespace {

enum SeedTag : std::uint64_t {
  kTagUserTable = 1,
  kTagBundleTable = 2,
  kTagItemTable = 3,
  kTagBundleView = 10,
  kTagItemView = 11,
  kTagLeft = 20,
  kTagRight = 21,
};

Matrix normal_table(std::size_t rows, std::size_t cols, double stddev, std::uint64_t seed) {
  Matrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : m.values()) v = dist(rng);
  return m;
}

std::vector<std::uint8_t> draw_mask(std::size_t n, double ratio, std::uint64_t seed) {
  std::vector<std::uint8_t> keep(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& k : keep) k = u(rng) >= ratio ? 1 : 0;
  return keep;
}

void apply_mask(Matrix& m, const std::vector<std::uint8_t>& keep, double scale) {
  auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = keep[i] ? v[i] * scale : 0.0;
}

void check_inputs(const NormalizedBipartiteGraph& g, const Matrix& left, const Matrix& right) {
  if (left.rows() != g.left_count || right.rows() != g.right_count ||
      left.cols() != right.cols()) {
    throw std::invalid_argument("propagate: tables " + left.shape_string() + " / " +
                                right.shape_string() + " do not match graph " +
                                std::to_string(g.left_count) + "x" + std::to_string(g.right_count));
  }
}

}  // namespace

std::string to_string(AugmentationMode mode) {
  switch (mode) {
    case AugmentationMode::kOriginal:
      return "OP";
    case AugmentationMode::kEdgeDropout:
      return "ED";
    case AugmentationMode::kMessageDropout:
      return "MD";
  }
  return "?";
}

AugmentationMode parse_augmentation_mode(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "OP") return AugmentationMode::kOriginal;
  if (t == "ED") return AugmentationMode::kEdgeDropout;
  if (t == "MD") return AugmentationMode::kMessageDropout;
  throw std::invalid_argument("unknown augmentation mode '" + text + "' (expected OP, ED or MD)");
}

double xavier_normal_std(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

EmbeddingState init_embeddings(std::size_t users, std::size_t bundles, std::size_t items,
                               std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  const double stddev = xavier_normal_std(dim, dim);
  return EmbeddingState{
      normal_table(users, dim, stddev, derive_seed(seed, {kTagUserTable})),
      normal_table(bundles, dim, stddev, derive_seed(seed, {kTagBundleTable})),
      normal_table(items, dim, stddev, derive_seed(seed, {kTagItemTable})),
  };
}

ModelGraphs build_model_graphs(const SplitDataset& split, const GraphOptions& options) {
  return ModelGraphs{
      build_ub_graph(split.base, split.train, options),
      build_ui_graph(split.base),
      bundle_items(split.base),
  };
}

ModelGraphs augment_graphs(const ModelGraphs& graphs, const AugmentationConfig& aug,
                           std::uint64_t seed) {
  if (aug.mode != AugmentationMode::kEdgeDropout) return graphs;
  return ModelGraphs{
      edge_dropout(graphs.user_bundle, aug.dropout_ratio, derive_seed(seed, {kTagBundleView})),
      edge_dropout(graphs.user_item, aug.dropout_ratio, derive_seed(seed, {kTagItemView})),
      graphs.bundle_items,
  };
}

Propagation propagate(const NormalizedBipartiteGraph& graph, const Matrix& left0,
                      const Matrix& right0, std::size_t layers,
                      std::optional<MessageDropout> dropout) {
  check_inputs(graph, left0, right0);
  if (dropout && !(dropout->ratio >= 0.0 && dropout->ratio < 1.0)) {
    throw std::invalid_argument("message dropout ratio must lie in [0, 1)");
  }
  const std::size_t d = left0.cols();
  Propagation out;
  auto& cache = out.cache;
  cache.left_layers.reserve(layers + 1);
  cache.right_layers.reserve(layers + 1);
  cache.left_layers.push_back(left0);
  cache.right_layers.push_back(right0);
  if (dropout) cache.keep_scale = 1.0 / (1.0 - dropout->ratio);

  for (std::size_t k = 1; k <= layers; ++k) {
    const Matrix& prev_left = cache.left_layers[k - 1];
    const Matrix& prev_right = cache.right_layers[k - 1];
    Matrix left(graph.left_count, d);
    Matrix right(graph.right_count, d);
    kernels::spmm_add(graph.left_from_right, prev_right, left);
    kernels::spmm_add(graph.left_from_left, prev_left, left);
    kernels::spmm_add(graph.right_from_left, prev_left, right);
    kernels::spmm_add(graph.right_from_right, prev_right, right);
    if (dropout) {
      cache.left_masks.push_back(
          draw_mask(left.size(), dropout->ratio, derive_seed(dropout->seed, {kTagLeft, k})));
      cache.right_masks.push_back(
          draw_mask(right.size(), dropout->ratio, derive_seed(dropout->seed, {kTagRight, k})));
      apply_mask(left, cache.left_masks.back(), cache.keep_scale);
      apply_mask(right, cache.right_masks.back(), cache.keep_scale);
    }
    cache.left_layers.push_back(std::move(left));
    cache.right_layers.push_back(std::move(right));
  }

  out.left = cache.left_layers[0];
  out.right = cache.right_layers[0];
  for (std::size_t k = 1; k <= layers; ++k) {
    out.left += cache.left_layers[k];
    out.right += cache.right_layers[k];
  }
  return out;
}

PropagationGradient propagate_backward(const NormalizedBipartiteGraph& graph,
                                       const PropagationCache& cache, const Matrix& grad_left,
                                       const Matrix& grad_right) {
  check_inputs(graph, grad_left, grad_right);
  const std::size_t layers = cache.left_layers.size() - 1;
  const bool masked = !cache.left_masks.empty();

  // Total gradient w.r.t. layer k, starting from k = K and walking down.
  Matrix g_left = grad_left;
  Matrix g_right = grad_right;
  for (std::size_t k = layers; k >= 1; --k) {
    Matrix h_left = g_left;
    Matrix h_right = g_right;
    if (masked) {
      apply_mask(h_left, cache.left_masks[k - 1], cache.keep_scale);
      apply_mask(h_right, cache.right_masks[k - 1], cache.keep_scale);
    }
    Matrix next_left = grad_left;
    Matrix next_right = grad_right;
    kernels::spmm_add(graph.left_from_right, h_right, next_left);
    kernels::spmm_add(graph.left_from_left, h_left, next_left);
    kernels::spmm_add(graph.right_from_left, h_left, next_right);
    kernels::spmm_add(graph.right_from_right, h_right, next_right);
    g_left = std::move(next_left);
    g_right = std::move(next_right);
  }
  return {std::move(g_left), std::move(g_right)};
}

Matrix pool_bundle_item(const Matrix& item_reps,
                        const std::vector<std::vector<Id>>& bundle_items) {
  Matrix out(bundle_items.size(), item_reps.cols());
  for (std::size_t b = 0; b < bundle_items.size(); ++b) {
    const auto& items = bundle_items[b];
    if (items.empty()) {
      throw std::invalid_argument("bundle " + std::to_string(b) + " has no items to pool");
    }
    auto dst = out.row(b);
    for (Id i : items) {
      const auto src = item_reps.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    const double inv = 1.0 / static_cast<double>(items.size());
    for (auto& v : dst) v *= inv;
  }
  return out;
}

Matrix pool_bundle_item_backward(const Matrix& grad_bundles,
                                 const std::vector<std::vector<Id>>& bundle_items,
                                 std::size_t num_items) {
  Matrix out(num_items, grad_bundles.cols());
  for (std::size_t b = 0; b < bundle_items.size(); ++b) {
    const auto& items = bundle_items[b];
    if (items.empty()) continue;
    const double inv = 1.0 / static_cast<double>(items.size());
    const auto src = grad_bundles.row(b);
    for (Id i : items) {
      auto dst = out.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += inv * src[c];
    }
  }
  return out;
}

ViewRepresentations encode(const EmbeddingState& state, std::shared_ptr<const ModelGraphs> graphs,
                           std::size_t layers, std::optional<MessageDropout> dropout) {
  const auto view_dropout = [&](std::uint64_t tag) -> std::optional<MessageDropout> {
    if (!dropout) return std::nullopt;
    return MessageDropout{dropout->ratio, derive_seed(dropout->seed, {tag})};
  };
  Propagation bundle_view = propagate(graphs->user_bundle, state.users, state.bundles, layers,
                                      view_dropout(kTagBundleView));
  Propagation item_view = propagate(graphs->user_item, state.users, state.items, layers,
                                    view_dropout(kTagItemView));
  ViewRepresentations reps;
  reps.bundle_item_view = pool_bundle_item(item_view.right, graphs->bundle_items);
  reps.user_bundle_view = std::move(bundle_view.left);
  reps.bundle_bundle_view = std::move(bundle_view.right);
  reps.user_item_view = std::move(item_view.left);
  reps.item_item_view = std::move(item_view.right);
  reps.bundle_cache = std::move(bundle_view.cache);
  reps.item_cache = std::move(item_view.cache);
  reps.graphs = std::move(graphs);
  return reps;
}

ViewRepresentations forward(const EmbeddingState& state, std::shared_ptr<const ModelGraphs> graphs,
                            const ModelConfig& config, std::uint64_t seed) {
  const auto& aug = config.augmentation;
  switch (aug.mode) {
    case AugmentationMode::kOriginal:
      return encode(state, std::move(graphs), config.layers);
    case AugmentationMode::kEdgeDropout:
      return encode(state, std::make_shared<const ModelGraphs>(augment_graphs(*graphs, aug, seed)),
                    config.layers);
    case AugmentationMode::kMessageDropout:
      return encode(state, std::move(graphs), config.layers,
                    MessageDropout{aug.dropout_ratio, seed});
  }
  throw std::logic_error("unreachable augmentation mode");
}

ViewGradients zero_view_gradients(const ViewRepresentations& reps) {
  return ViewGradients{
      Matrix(reps.user_bundle_view.rows(), reps.user_bundle_view.cols()),
      Matrix(reps.bundle_bundle_view.rows(), reps.bundle_bundle_view.cols()),
      Matrix(reps.user_item_view.rows(), reps.user_item_view.cols()),
      Matrix(reps.bundle_item_view.rows(), reps.bundle_item_view.cols()),
  };
}

TableGradients backward(const ViewRepresentations& reps, const ViewGradients& grads) {
  const ModelGraphs& graphs = *reps.graphs;
  PropagationGradient bundle_view = propagate_backward(
      graphs.user_bundle, reps.bundle_cache, grads.user_bundle_view, grads.bundle_bundle_view);
  const Matrix item_grad = pool_bundle_item_backward(grads.bundle_item_view, graphs.bundle_items,
                                                     reps.item_item_view.rows());
  PropagationGradient item_view = propagate_backward(graphs.user_item, reps.item_cache,
                                                     grads.user_item_view, item_grad);
  TableGradients out;
  out.users = std::move(bundle_view.left0);
  out.users += item_view.left0;
  out.bundles = std::move(bundle_view.right0);
  out.items = std::move(item_view.right0);
  return out;
}

}  // namespace crosscbr
