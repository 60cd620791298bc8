#include "crosscbr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace crosscbr {

namespace {

struct RawGraph {
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  std::vector<WeightedEdge> cross;
  std::vector<WeightedEdge> left_links;
  std::vector<WeightedEdge> right_links;
};

NormalizedBipartiteGraph normalize(RawGraph raw) {
  NormalizedBipartiteGraph g;
  g.left_count = raw.left_count;
  g.right_count = raw.right_count;
  g.left_degrees.assign(raw.left_count, 0.0);
  g.right_degrees.assign(raw.right_count, 0.0);
  for (const auto& e : raw.cross) {
    g.left_degrees[e.left] += e.weight;
    g.right_degrees[e.right] += e.weight;
  }
  for (const auto& e : raw.left_links) g.left_degrees[e.left] += e.weight;
  for (const auto& e : raw.right_links) g.right_degrees[e.left] += e.weight;

  const auto by_ids = [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.left != b.left ? a.left < b.left : a.right < b.right;
  };
  for (auto& e : raw.cross) e.weight /= std::sqrt(g.left_degrees[e.left] * g.right_degrees[e.right]);
  for (auto& e : raw.left_links) {
    e.weight /= std::sqrt(g.left_degrees[e.left] * g.left_degrees[e.right]);
  }
  for (auto& e : raw.right_links) {
    e.weight /= std::sqrt(g.right_degrees[e.left] * g.right_degrees[e.right]);
  }
  std::sort(raw.cross.begin(), raw.cross.end(), by_ids);
  std::sort(raw.left_links.begin(), raw.left_links.end(), by_ids);
  std::sort(raw.right_links.begin(), raw.right_links.end(), by_ids);
  g.edges = std::move(raw.cross);
  g.left_links = std::move(raw.left_links);
  g.right_links = std::move(raw.right_links);
  g.rebuild_operators();
  return g;
}

SparseRows same_side_rows(const std::vector<WeightedEdge>& links, std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(links.size());
  for (const auto& e : links) t.push_back({e.left, e.right, e.weight});
  return to_rows(n, n, std::move(t));
}

}  // namespace

void NormalizedBipartiteGraph::rebuild_operators() {
  std::vector<Triplet> lr, rl;
  lr.reserve(edges.size());
  rl.reserve(edges.size());
  for (const auto& e : edges) {
    lr.push_back({e.left, e.right, e.weight});
    rl.push_back({e.right, e.left, e.weight});
  }
  left_from_right = to_rows(left_count, right_count, std::move(lr));
  right_from_left = to_rows(right_count, left_count, std::move(rl));
  left_from_left = same_side_rows(left_links, left_count);
  right_from_right = same_side_rows(right_links, right_count);
}

NormalizedBipartiteGraph build_bipartite_graph(const Relation& rel, std::size_t left_count,
                                               std::size_t right_count) {
  RawGraph raw{left_count, right_count, {}, {}, {}};
  raw.cross.reserve(rel.size());
  for (const auto& [a, b] : rel) {
    if (a >= left_count || b >= right_count) throw std::out_of_range("edge outside graph bounds");
    raw.cross.push_back({a, b, 1.0});
  }
  return normalize(std::move(raw));
}

NormalizedBipartiteGraph build_ub_graph(const BundleDataset& ds, const Relation& user_bundle,
                                        GraphOptions options) {
  if (!options.include_self_connections && !options.include_bundle_bundle) {
    return build_bipartite_graph(user_bundle, ds.num_users, ds.num_bundles);
  }
  RawGraph raw{ds.num_users, ds.num_bundles, {}, {}, {}};
  for (const auto& [u, b] : user_bundle) raw.cross.push_back({u, b, 1.0});
  if (options.include_bundle_bundle) {
    // Overlap counts through the item -> bundles inverted index.
    const auto item_bundles = [&] {
      std::vector<std::vector<Id>> idx(ds.num_items);
      for (const auto& [b, i] : ds.bundle_item) idx[i].push_back(b);
      return idx;
    }();
    std::map<std::pair<Id, Id>, double> overlap;
    for (const auto& bundles : item_bundles) {
      for (std::size_t x = 0; x < bundles.size(); ++x) {
        for (std::size_t y = x + 1; y < bundles.size(); ++y) {
          overlap[{bundles[x], bundles[y]}] += 1.0;
        }
      }
    }
    for (const auto& [key, count] : overlap) {
      raw.right_links.push_back({key.first, key.second, count});
      raw.right_links.push_back({key.second, key.first, count});
    }
  }
  if (options.include_self_connections) {
    for (std::size_t u = 0; u < ds.num_users; ++u) {
      raw.left_links.push_back({static_cast<Id>(u), static_cast<Id>(u), 1.0});
    }
    for (std::size_t b = 0; b < ds.num_bundles; ++b) {
      raw.right_links.push_back({static_cast<Id>(b), static_cast<Id>(b), 1.0});
    }
  }
  return normalize(std::move(raw));
}

NormalizedBipartiteGraph build_ui_graph(const BundleDataset& ds) {
  return build_bipartite_graph(ds.user_item, ds.num_users, ds.num_items);
}

NormalizedBipartiteGraph edge_dropout(const NormalizedBipartiteGraph& g, double ratio,
                                      std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("dropout ratio must lie in [0, 1)");
  const std::size_t n = g.edges.size();
  // The epsilon absorbs representation error in products such as 0.8 * 10.
  const auto keep = static_cast<std::size_t>(
      std::ceil((1.0 - ratio) * static_cast<double>(n) - 1e-9));
  if (keep >= n) return g;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  NormalizedBipartiteGraph out;
  out.left_count = g.left_count;
  out.right_count = g.right_count;
  out.left_degrees = g.left_degrees;
  out.right_degrees = g.right_degrees;
  out.left_links = g.left_links;
  out.right_links = g.right_links;
  out.edges.reserve(keep);
  for (std::size_t idx : order) out.edges.push_back(g.edges[idx]);
  out.rebuild_operators();
  return out;
}

void dump_graph(const NormalizedBipartiteGraph& g, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << std::setprecision(17);
  for (const auto& e : g.edges) out << e.left << '\t' << e.right << '\t' << e.weight << '\n';
}

}  // namespace crosscbr
