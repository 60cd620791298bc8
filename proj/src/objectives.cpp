#include "crosscbr/objectives.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace crosscbr {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix gather(const Matrix& m, std::span<const Id> ids) {
  Matrix out(ids.size(), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy(m.row(ids[r]).begin(), m.row(ids[r]).end(), out.row(r).begin());
  }
  return out;
}

void scatter_add(Matrix& dst, std::span<const Id> ids, const Matrix& rows, double scale) {
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto d = dst.row(ids[r]);
    const auto s = rows.row(r);
    for (std::size_t c = 0; c < d.size(); ++c) d[c] += scale * s[c];
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t c = 0; c < y.size(); ++c) y[c] += a * x[c];
}

// Unit rows plus the original norms.
Matrix unit_rows(const Matrix& m, std::vector<double>& norms, const char* which) {
  Matrix out = m;
  norms.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = std::sqrt(dot(m.row(r), m.row(r)));
    if (!(n > 0.0)) {
      throw std::domain_error(std::string("contrastive loss: zero-norm row ") + std::to_string(r) +
                              " in " + which + " view");
    }
    norms[r] = n;
    for (auto& v : out.row(r)) v /= n;
  }
  return out;
}

// Chain d/d(unit row) back through the normalization x / |x|.
Matrix through_normalization(const Matrix& grad_unit, const Matrix& unit,
                             const std::vector<double>& norms) {
  Matrix out(unit.rows(), unit.cols());
  for (std::size_t r = 0; r < unit.rows(); ++r) {
    const double radial = dot(grad_unit.row(r), unit.row(r));
    auto o = out.row(r);
    const auto g = grad_unit.row(r);
    const auto u = unit.row(r);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = (g[c] - radial * u[c]) / norms[r];
  }
  return out;
}

}  // namespace

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kFull:
      return "full";
    case LossMode::kNoContrastive:
      return "no_CL";
    case LossMode::kAlignOnly:
      return "align_only";
    case LossMode::kDisperseOnly:
      return "disperse_only";
  }
  return "?";
}

LossMode parse_loss_mode(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "full") return LossMode::kFull;
  if (t == "no_cl") return LossMode::kNoContrastive;
  if (t == "align_only") return LossMode::kAlignOnly;
  if (t == "disperse_only") return LossMode::kDisperseOnly;
  throw std::invalid_argument("unknown loss mode '" + text +
                              "' (expected full, no_CL, align_only or disperse_only)");
}

TrainBatch TrainBatch::from_triples(std::vector<Triple> triples) {
  TrainBatch batch;
  std::unordered_set<Id> seen_users, seen_bundles;
  for (const auto& t : triples) {
    if (seen_users.insert(t.user).second) batch.users.push_back(t.user);
    if (seen_bundles.insert(t.positive).second) batch.bundles.push_back(t.positive);
  }
  batch.triples = std::move(triples);
  return batch;
}

std::vector<ViewScores> predict_scores(const ViewRepresentations& reps,
                                       std::span<const Pair> pairs) {
  std::vector<ViewScores> out;
  out.reserve(pairs.size());
  const std::size_t m = reps.user_bundle_view.rows();
  const std::size_t n = reps.bundle_bundle_view.rows();
  for (const auto& [u, b] : pairs) {
    if (u >= m || b >= n) {
      throw std::out_of_range("predict_scores: pair (" + std::to_string(u) + ", " +
                              std::to_string(b) + ") out of range");
    }
    out.push_back({dot(reps.user_bundle_view.row(u), reps.bundle_bundle_view.row(b)),
                   dot(reps.user_item_view.row(u), reps.bundle_item_view.row(b))});
  }
  return out;
}

BprResult bpr_loss(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.size() != scores_neg.size()) {
    throw std::invalid_argument("bpr_loss: score lists differ in length");
  }
  BprResult r;
  r.grad_pos.resize(scores_pos.size());
  r.grad_neg.resize(scores_pos.size());
  for (std::size_t t = 0; t < scores_pos.size(); ++t) {
    const double delta = scores_pos[t] - scores_neg[t];
    r.loss += softplus(-delta);
    const double g = sigmoid(-delta);
    r.grad_pos[t] = -g;
    r.grad_neg[t] = g;
  }
  return r;
}

ContrastiveResult contrastive_loss(const Matrix& anchor, const Matrix& other, double tau,
                                   LossMode mode) {
  anchor.require_same_shape(other, "contrastive_loss");
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t n = anchor.rows();
  if (n < 2) throw std::invalid_argument("contrastive loss needs at least two entities");

  std::vector<double> norm_a, norm_b;
  const Matrix unit_a = unit_rows(anchor, norm_a, "anchor");
  const Matrix unit_b = unit_rows(other, norm_b, "other");
  const double inv_n = 1.0 / static_cast<double>(n);

  // dL/dS for the cosine matrix S(e, j) = <unit_a_e, unit_b_j>.
  Matrix grad_sim(n, n);
  ContrastiveResult res;
  if (mode == LossMode::kAlignOnly) {
    for (std::size_t e = 0; e < n; ++e) {
      res.loss -= dot(unit_a.row(e), unit_b.row(e)) * inv_n;
      grad_sim(e, e) = -inv_n;
    }
  } else {
    const bool pinned = mode == LossMode::kDisperseOnly;
    std::vector<double> logits(n);
    for (std::size_t e = 0; e < n; ++e) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        logits[j] = dot(unit_a.row(e), unit_b.row(j)) / tau;
        peak = std::max(peak, logits[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) denom += std::exp(logits[j] - peak);
      const double log_denom = peak + std::log(denom);
      const double numerator = pinned ? 1.0 / tau : logits[e];
      res.loss += (log_denom - numerator) * inv_n;
      for (std::size_t j = 0; j < n; ++j) {
        grad_sim(e, j) = std::exp(logits[j] - log_denom) * inv_n / tau;
      }
      if (!pinned) grad_sim(e, e) -= inv_n / tau;
    }
  }

  Matrix grad_unit_a(n, anchor.cols());
  Matrix grad_unit_b(n, anchor.cols());
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = grad_sim(e, j);
      if (g == 0.0) continue;
      axpy(g, unit_b.row(j), grad_unit_a.row(e));
      axpy(g, unit_a.row(e), grad_unit_b.row(j));
    }
  }
  res.grad_anchor = through_normalization(grad_unit_a, unit_a, norm_a);
  res.grad_other = through_normalization(grad_unit_b, unit_b, norm_b);
  return res;
}

ContrastiveResult infonce_loss(const Matrix& anchor, const Matrix& other, double tau) {
  return contrastive_loss(anchor, other, tau, LossMode::kFull);
}

L2Result l2_term(const EmbeddingState& state, const TrainBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("l2_term: empty batch");
  L2Result r;
  r.grad = TableGradients{Matrix(state.users.rows(), state.dim()),
                          Matrix(state.bundles.rows(), state.dim()),
                          Matrix(state.items.rows(), state.dim())};
  const double inv_t = 1.0 / static_cast<double>(batch.size());
  std::vector<char> user_seen(state.users.rows(), 0), bundle_seen(state.bundles.rows(), 0);
  const auto add_row = [&](const Matrix& table, Matrix& grad, Id id) {
    r.value += dot(table.row(id), table.row(id)) * inv_t;
    axpy(2.0 * inv_t, table.row(id), grad.row(id));
  };
  for (const auto& t : batch.triples) {
    if (!user_seen[t.user]) {
      user_seen[t.user] = 1;
      add_row(state.users, r.grad.users, t.user);
    }
    for (Id b : {t.positive, t.negative}) {
      if (!bundle_seen[b]) {
        bundle_seen[b] = 1;
        add_row(state.bundles, r.grad.bundles, b);
      }
    }
  }
  return r;
}

LossResult total_loss(const ViewRepresentations& reps, const EmbeddingState& state,
                      const TrainBatch& batch, const LossConfig& config) {
  if (batch.size() == 0) throw std::invalid_argument("total_loss: empty batch");
  if (config.lambda1 < 0 || config.lambda2 < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  const std::size_t t_count = batch.size();
  LossResult out;
  out.view_grads = zero_view_gradients(reps);
  auto& g = out.view_grads;
  auto& br = out.breakdown;

  // Ranking term.
  std::vector<double> pos(t_count), neg(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto& tr = batch.triples[t];
    const std::array<Pair, 2> pairs{Pair{tr.user, tr.positive}, Pair{tr.user, tr.negative}};
    const auto s = predict_scores(reps, pairs);
    pos[t] = s[0].total();
    neg[t] = s[1].total();
  }
  const BprResult bpr = bpr_loss(pos, neg);
  const double scale = config.bpr_mean ? 1.0 / static_cast<double>(t_count) : 1.0;
  br.bpr = bpr.loss * scale;
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto& tr = batch.triples[t];
    const double gp = bpr.grad_pos[t] * scale;
    const double gn = bpr.grad_neg[t] * scale;
    axpy(gp, reps.bundle_bundle_view.row(tr.positive), g.user_bundle_view.row(tr.user));
    axpy(gn, reps.bundle_bundle_view.row(tr.negative), g.user_bundle_view.row(tr.user));
    axpy(gp, reps.user_bundle_view.row(tr.user), g.bundle_bundle_view.row(tr.positive));
    axpy(gn, reps.user_bundle_view.row(tr.user), g.bundle_bundle_view.row(tr.negative));
    axpy(gp, reps.bundle_item_view.row(tr.positive), g.user_item_view.row(tr.user));
    axpy(gn, reps.bundle_item_view.row(tr.negative), g.user_item_view.row(tr.user));
    axpy(gp, reps.user_item_view.row(tr.user), g.bundle_item_view.row(tr.positive));
    axpy(gn, reps.user_item_view.row(tr.user), g.bundle_item_view.row(tr.negative));
  }

  // Cross-view terms; a group with fewer than two distinct entities has no
  // in-batch negatives and contributes zero.
  const double weight = config.mode == LossMode::kNoContrastive ? 0.0 : config.lambda1;
  const auto cross_view = [&](const Matrix& view_b, const Matrix& view_i, std::span<const Id> ids,
                              Matrix& grad_b, Matrix& grad_i) -> double {
    if (ids.size() < 2) return 0.0;
    const ContrastiveResult c =
        contrastive_loss(gather(view_b, ids), gather(view_i, ids), config.tau, config.mode);
    if (weight != 0.0) {
      scatter_add(grad_b, ids, c.grad_anchor, 0.5 * weight);
      scatter_add(grad_i, ids, c.grad_other, 0.5 * weight);
    }
    return c.loss;
  };
  br.contrastive_user = cross_view(reps.user_bundle_view, reps.user_item_view, batch.users,
                                   g.user_bundle_view, g.user_item_view);
  br.contrastive_bundle = cross_view(reps.bundle_bundle_view, reps.bundle_item_view, batch.bundles,
                                     g.bundle_bundle_view, g.bundle_item_view);
  br.contrastive = 0.5 * (br.contrastive_user + br.contrastive_bundle);

  L2Result l2 = l2_term(state, batch);
  br.l2 = l2.value;
  out.l2_grads = std::move(l2.grad);
  out.l2_grads.users *= config.lambda2;
  out.l2_grads.bundles *= config.lambda2;
  out.l2_grads.items *= config.lambda2;

  br.total = br.bpr + weight * br.contrastive + config.lambda2 * br.l2;
  return out;
}

TableGradients total_gradient(const ViewRepresentations& reps, const LossResult& loss) {
  TableGradients g = backward(reps, loss.view_grads);
  g.users += loss.l2_grads.users;
  g.bundles += loss.l2_grads.bundles;
  g.items += loss.l2_grads.items;
  return g;
}

}  // namespace crosscbr
