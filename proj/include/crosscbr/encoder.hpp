#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/graph.hpp"
#include "crosscbr/matrix.hpp"

namespace crosscbr {

enum class AugmentationMode { kOriginal, kEdgeDropout, kMessageDropout };

std::string to_string(AugmentationMode mode);
/// Accepts OP / ED / MD (case-insensitive).
AugmentationMode parse_augmentation_mode(const std::string& text);

struct AugmentationConfig {
  AugmentationMode mode = AugmentationMode::kOriginal;
  double dropout_ratio = 0.2;  // unused in OP mode
};

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  AugmentationConfig augmentation;
  GraphOptions graph;
};

/// The only learnable parameters: layer-0 user, bundle and item embeddings.
/// The user table is shared by the bundle view and the item view.
struct EmbeddingState {
  Matrix users;
  Matrix bundles;
  Matrix items;

  std::size_t dim() const { return users.cols(); }
  std::size_t parameter_count() const { return users.size() + bundles.size() + items.size(); }

  friend bool operator==(const EmbeddingState&, const EmbeddingState&) = default;
};

/// Gradients share the table layout of the parameters.
using TableGradients = EmbeddingState;

double xavier_normal_std(std::size_t fan_in, std::size_t fan_out);

/// I.i.d. normal tables with Xavier-normal std for fan_in = fan_out = dim.
EmbeddingState init_embeddings(std::size_t users, std::size_t bundles, std::size_t items,
                               std::size_t dim, std::uint64_t seed);

/// Graphs feeding the two views.
struct ModelGraphs {
  NormalizedBipartiteGraph user_bundle;
  NormalizedBipartiteGraph user_item;
  std::vector<std::vector<Id>> bundle_items;
};

/// Builds the U-B graph from the training interactions only.
ModelGraphs build_model_graphs(const SplitDataset& split, const GraphOptions& options);

/// Edge dropout on both graphs with independent streams; returns a copy of
/// `graphs` for the other modes.
ModelGraphs augment_graphs(const ModelGraphs& graphs, const AugmentationConfig& aug,
                           std::uint64_t seed);

struct MessageDropout {
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Per-layer state kept for the backward pass. Layer 0 is never masked, so
/// masks hold entries for layers 1..K when message dropout was active.
struct PropagationCache {
  std::vector<Matrix> left_layers;
  std::vector<Matrix> right_layers;
  std::vector<std::vector<std::uint8_t>> left_masks;
  std::vector<std::vector<std::uint8_t>> right_masks;
  double keep_scale = 1.0;
};

struct Propagation {
  Matrix left;   // sum of layers 0..K
  Matrix right;
  PropagationCache cache;
};

/// K rounds of normalized message passing; the output is the plain sum of
/// all layers. With message dropout, each entry of layers >= 1 is zeroed with
/// probability `ratio` and survivors are scaled by 1 / (1 - ratio).
Propagation propagate(const NormalizedBipartiteGraph& graph, const Matrix& left0,
                      const Matrix& right0, std::size_t layers,
                      std::optional<MessageDropout> dropout = std::nullopt);

struct PropagationGradient {
  Matrix left0;
  Matrix right0;
};

/// Reverse traversal of propagate(): maps gradients of the summed outputs to
/// gradients of the layer-0 inputs.
PropagationGradient propagate_backward(const NormalizedBipartiteGraph& graph,
                                       const PropagationCache& cache, const Matrix& grad_left,
                                       const Matrix& grad_right);

/// Row b is the mean of the rows of bundle b's items.
Matrix pool_bundle_item(const Matrix& item_reps, const std::vector<std::vector<Id>>& bundle_items);
Matrix pool_bundle_item_backward(const Matrix& grad_bundles,
                                 const std::vector<std::vector<Id>>& bundle_items,
                                 std::size_t num_items);

struct ViewRepresentations {
  Matrix user_bundle_view;    // users, bundle view
  Matrix bundle_bundle_view;  // bundles, bundle view
  Matrix user_item_view;      // users, item view
  Matrix bundle_item_view;    // bundles, item view (pooled)
  Matrix item_item_view;      // items, item view

  PropagationCache bundle_cache;
  PropagationCache item_cache;
  /// Graphs the representations were propagated over (after augmentation).
  std::shared_ptr<const ModelGraphs> graphs;
};

/// Propagation over the given graphs as-is, with optional message dropout.
ViewRepresentations encode(const EmbeddingState& state, std::shared_ptr<const ModelGraphs> graphs,
                           std::size_t layers, std::optional<MessageDropout> dropout = std::nullopt);

/// Full two-view forward pass including the configured augmentation; OP mode
/// is deterministic and ignores `seed`.
ViewRepresentations forward(const EmbeddingState& state, std::shared_ptr<const ModelGraphs> graphs,
                            const ModelConfig& config, std::uint64_t seed);

/// Gradients of a scalar loss with respect to the four final representations.
struct ViewGradients {
  Matrix user_bundle_view;
  Matrix bundle_bundle_view;
  Matrix user_item_view;
  Matrix bundle_item_view;
};

ViewGradients zero_view_gradients(const ViewRepresentations& reps);

/// Chains view gradients into gradients of the three embedding tables.
TableGradients backward(const ViewRepresentations& reps, const ViewGradients& grads);

}  // namespace crosscbr
