#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/sparse.hpp"

namespace crosscbr {

struct WeightedEdge {
  Id left;
  Id right;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Symmetrically normalized adjacency of a two-sided graph (users on the left,
/// bundles or items on the right). A cross edge (a, b) carries
/// raw(a, b) / sqrt(deg(a) * deg(b)) with deg the raw row sum of the node.
///
/// The default graphs are purely bipartite. Optional same-side links (unit
/// self-loops, bundle-bundle overlap edges) live in `left_links` and
/// `right_links` and are normalized together with the cross edges.
///
/// The operator blocks mirror the edge lists and are what propagation uses:
///   left'  = left_from_right * right + left_from_left * left
///   right' = right_from_left * left  + right_from_right * right
/// The full operator is symmetric, so the same blocks serve the backward pass.
struct NormalizedBipartiteGraph {
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  std::vector<WeightedEdge> edges;  // sorted by (left, right)
  std::vector<WeightedEdge> left_links;   // both endpoints are left ids; symmetric, sorted
  std::vector<WeightedEdge> right_links;  // both endpoints are right ids; symmetric, sorted
  std::vector<double> left_degrees;
  std::vector<double> right_degrees;

  SparseRows left_from_right;
  SparseRows right_from_left;
  SparseRows left_from_left;
  SparseRows right_from_right;

  std::size_t edge_count() const { return edges.size(); }
  /// Rebuilds the operator blocks from the edge lists.
  void rebuild_operators();
};

struct GraphOptions {
  bool include_self_connections = false;
  bool include_bundle_bundle = false;
};

/// Normalizes a relation given as sorted unique pairs.
NormalizedBipartiteGraph build_bipartite_graph(const Relation& rel, std::size_t left_count,
                                               std::size_t right_count);

/// U-B graph over the given user-bundle interactions (normally the train
/// split). The bundle-bundle option links bundles p != q with raw weight
/// |items(p) ∩ items(q)|; the self-connection option adds unit loops on every
/// node. Both are added before normalization.
NormalizedBipartiteGraph build_ub_graph(const BundleDataset& ds, const Relation& user_bundle,
                                        GraphOptions options = {});
inline NormalizedBipartiteGraph build_ub_graph(const BundleDataset& ds,
                                               GraphOptions options = {}) {
  return build_ub_graph(ds, ds.user_bundle, options);
}

NormalizedBipartiteGraph build_ui_graph(const BundleDataset& ds);

/// Keeps exactly ceil((1 - ratio) * |E|) cross edges chosen uniformly without
/// replacement. Weights and degrees are those of the input graph. Same-side
/// links are kept.
NormalizedBipartiteGraph edge_dropout(const NormalizedBipartiteGraph& g, double ratio,
                                      std::uint64_t seed);

/// `left<TAB>right<TAB>weight` per cross edge.
void dump_graph(const NormalizedBipartiteGraph& g, const std::filesystem::path& file);

}  // namespace crosscbr
