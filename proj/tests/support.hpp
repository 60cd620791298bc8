#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/encoder.hpp"
#include "crosscbr/matrix.hpp"
#include "crosscbr/objectives.hpp"

namespace crosscbr::testing {

using Dense = std::vector<std::vector<double>>;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

inline Relation random_relation(std::size_t left, std::size_t right, double density,
                                std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  Relation rel;
  for (std::size_t a = 0; a < left; ++a) {
    for (std::size_t b = 0; b < right; ++b) {
      if (keep(rng)) rel.emplace_back(static_cast<Id>(a), static_cast<Id>(b));
    }
  }
  return rel;
}

// Random dataset in which every bundle owns at least one item.
inline BundleDataset random_dataset(std::size_t users, std::size_t bundles, std::size_t items,
                                    double density, std::mt19937_64& rng) {
  BundleDataset ds;
  ds.name = "random";
  ds.num_users = users;
  ds.num_bundles = bundles;
  ds.num_items = items;
  ds.user_bundle = random_relation(users, bundles, density, rng);
  ds.user_item = random_relation(users, items, density, rng);
  ds.bundle_item = random_relation(bundles, items, density, rng);
  std::uniform_int_distribution<std::size_t> pick(0, items - 1);
  for (std::size_t b = 0; b < bundles; ++b) {
    ds.bundle_item.emplace_back(static_cast<Id>(b), static_cast<Id>(pick(rng)));
  }
  normalize_relation(ds.bundle_item);
  return ds;
}

inline SplitDataset train_only(const BundleDataset& ds) {
  return SplitDataset{ds, ds.user_bundle, {}, {}};
}

// Dense symmetric adjacency over left nodes [0, L) followed by right nodes.
struct DenseGraph {
  std::size_t left = 0, right = 0;
  Dense adj;

  explicit DenseGraph(std::size_t l, std::size_t r)
      : left(l), right(r), adj(l + r, std::vector<double>(l + r, 0.0)) {}

  void add_cross(const Relation& rel) {
    for (const auto& [a, b] : rel) {
      adj[a][left + b] = 1.0;
      adj[left + b][a] = 1.0;
    }
  }

  // D^{-1/2} A D^{-1/2} with degrees as weighted row sums.
  Dense normalized() const {
    const std::size_t n = left + right;
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) deg[i] += adj[i][j];
    }
    Dense out(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (adj[i][j] != 0.0) out[i][j] = adj[i][j] / std::sqrt(deg[i] * deg[j]);
      }
    }
    return out;
  }
};

// Layer sum of powers of the normalized adjacency applied to the stacked
// embeddings [left0; right0].
inline std::pair<Matrix, Matrix> dense_propagate(const Dense& norm, const Matrix& left0,
                                                 const Matrix& right0, std::size_t layers) {
  const std::size_t l = left0.rows(), n = left0.rows() + right0.rows(), d = left0.cols();
  Dense cur(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) cur[i][c] = i < l ? left0(i, c) : right0(i - l, c);
  }
  Dense sum = cur;
  for (std::size_t k = 0; k < layers; ++k) {
    Dense next(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (norm[i][j] == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) next[i][c] += norm[i][j] * cur[j][c];
      }
    }
    cur = std::move(next);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) sum[i][c] += cur[i][c];
    }
  }
  Matrix left(l, d), right(n - l, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) (i < l ? left(i, c) : right(i - l, c)) = sum[i][c];
  }
  return {left, right};
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// Brute-force Recall/NDCG for one user from a full score row: sort every
// unmasked bundle by (score desc, id asc) and read off the first k.
struct OracleMetrics {
  std::size_t hits = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

inline OracleMetrics oracle_metrics(const std::vector<double>& scores, const std::set<Id>& masked,
                                    const std::set<Id>& truth, std::size_t k) {
  std::vector<Id> order;
  for (Id b = 0; b < scores.size(); ++b) {
    if (!masked.count(b)) order.push_back(b);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Id a, Id b) { return scores[a] > scores[b]; });
  OracleMetrics m;
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    if (truth.count(order[r])) {
      ++m.hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, truth.size()); ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  m.recall = static_cast<double>(m.hits) / static_cast<double>(truth.size());
  m.ndcg = dcg / idcg;
  return m;
}

// Central finite differences of `f` with respect to every entry of every
// table, compared with `analytic`. Returns the largest relative error
// |a - n| / max(|a|, |n|, floor).
inline double max_gradient_error(EmbeddingState state, const TableGradients& analytic,
                                 const std::function<double(const EmbeddingState&)>& f,
                                 double h = 1e-5, double floor = 1e-5) {
  double worst = 0.0;
  const auto check = [&](Matrix EmbeddingState::*table) {
    Matrix& m = state.*table;
    const Matrix& g = analytic.*table;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double saved = m.values()[i];
      m.values()[i] = saved + h;
      const double up = f(state);
      m.values()[i] = saved - h;
      const double down = f(state);
      m.values()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = g.values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  };
  check(&EmbeddingState::users);
  check(&EmbeddingState::bundles);
  check(&EmbeddingState::items);
  return worst;
}

inline TrainBatch random_batch(std::size_t size, std::size_t users, std::size_t bundles,
                               std::mt19937_64& rng) {
  std::uniform_int_distribution<Id> pu(0, static_cast<Id>(users - 1));
  std::uniform_int_distribution<Id> pb(0, static_cast<Id>(bundles - 1));
  std::vector<Triple> t;
  for (std::size_t i = 0; i < size; ++i) t.push_back({pu(rng), pb(rng), pb(rng)});
  return TrainBatch::from_triples(std::move(t));
}

// One random gradient-check instance of the full loss (encoder + objective).
struct GradientInstance {
  EmbeddingState state;
  std::shared_ptr<const ModelGraphs> graphs;
  std::size_t layers = 0;
  std::optional<MessageDropout> dropout;
  TrainBatch batch;
  LossConfig loss;

  double loss_at(const EmbeddingState& s) const {
    const ViewRepresentations reps = encode(s, graphs, layers, dropout);
    return total_loss(reps, s, batch, loss).breakdown.total;
  }

  TableGradients gradient() const {
    const ViewRepresentations reps = encode(state, graphs, layers, dropout);
    return total_gradient(reps, total_loss(reps, state, batch, loss));
  }

  double max_error() const {
    return max_gradient_error(state, gradient(), [this](const EmbeddingState& s) { return loss_at(s); });
  }
};

inline GradientInstance random_gradient_instance(std::mt19937_64& rng, LossMode mode,
                                                 std::size_t layers) {
  std::uniform_int_distribution<std::size_t> count(2, 8), dim(1, 5);
  const std::size_t m = count(rng), n = count(rng), o = count(rng), d = dim(rng);
  const BundleDataset ds = random_dataset(m, n, o, 0.4, rng);
  GradientInstance g;
  g.state = EmbeddingState{random_matrix(m, d, rng), random_matrix(n, d, rng),
                           random_matrix(o, d, rng)};
  g.graphs = std::make_shared<const ModelGraphs>(build_model_graphs(train_only(ds), {}));
  g.layers = layers;
  g.batch = random_batch(std::uniform_int_distribution<std::size_t>(2, 6)(rng), m, n, rng);
  std::uniform_real_distribution<double> tau(0.2, 1.0), lambda(0.05, 1.0);
  g.loss.mode = mode;
  g.loss.tau = tau(rng);
  g.loss.lambda1 = lambda(rng);
  g.loss.lambda2 = lambda(rng) * 0.1;
  return g;
}

}  // namespace crosscbr::testing
