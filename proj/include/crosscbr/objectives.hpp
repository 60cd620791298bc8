#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/encoder.hpp"
#include "crosscbr/matrix.hpp"

namespace crosscbr {

/// Which cross-view term enters the objective.
///   full          InfoNCE between the bundle view and the item view
///   no_cl         contrastive terms are reported but weighted by zero
///   align_only    negative mean cross-view cosine of matched entities
///   disperse_only InfoNCE with the numerator similarity pinned to 1
enum class LossMode { kFull, kNoContrastive, kAlignOnly, kDisperseOnly };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& text);

struct LossConfig {
  double lambda1 = 0.1;  // contrastive weight
  double lambda2 = 2e-5; // L2 weight
  double tau = 0.2;      // temperature
  LossMode mode = LossMode::kFull;
  bool bpr_mean = true;  // divide the BPR sum by the batch size
};

struct Triple {
  Id user;
  Id positive;
  Id negative;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TrainBatch {
  std::vector<Triple> triples;
  std::vector<Id> users;    // distinct, in order of first appearance
  std::vector<Id> bundles;  // distinct positive bundles, in order of first appearance

  std::size_t size() const { return triples.size(); }
  static TrainBatch from_triples(std::vector<Triple> triples);
};

struct LossBreakdown {
  double bpr = 0.0;
  double contrastive_user = 0.0;
  double contrastive_bundle = 0.0;
  double contrastive = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

struct ViewScores {
  double bundle_view = 0.0;
  double item_view = 0.0;
  double total() const { return bundle_view + item_view; }
};

/// Inner-product scores summed over both views; per-view parts are kept.
std::vector<ViewScores> predict_scores(const ViewRepresentations& reps, std::span<const Pair> pairs);

struct BprResult {
  double loss = 0.0;  // sum over triples
  std::vector<double> grad_pos;
  std::vector<double> grad_neg;
};

/// Sum of -ln sigmoid(pos - neg) and its derivatives w.r.t. each score.
BprResult bpr_loss(std::span<const double> scores_pos, std::span<const double> scores_neg);

struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad_anchor;
  Matrix grad_other;
};

/// Row e of `anchor` and row e of `other` are the two views of entity e; the
/// other rows act as in-batch negatives. Mean over entities of
/// -log softmax_e(cos(anchor_e, other_*) / tau). Requires >= 2 rows and
/// non-zero rows.
ContrastiveResult infonce_loss(const Matrix& anchor, const Matrix& other, double tau);

/// Variant selected by mode (full / no_cl use InfoNCE).
ContrastiveResult contrastive_loss(const Matrix& anchor, const Matrix& other, double tau,
                                   LossMode mode);

struct L2Result {
  double value = 0.0;
  TableGradients grad;
};

/// Squared norm of the layer-0 rows of the batch's distinct users and
/// bundles (positive and negative), divided by the batch size.
L2Result l2_term(const EmbeddingState& state, const TrainBatch& batch);

struct LossResult {
  LossBreakdown breakdown;
  ViewGradients view_grads;  // w.r.t. the final representations
  TableGradients l2_grads;   // already weighted by lambda2
};

LossResult total_loss(const ViewRepresentations& reps, const EmbeddingState& state,
                      const TrainBatch& batch, const LossConfig& config);

/// Gradient of the total loss w.r.t. the three embedding tables.
TableGradients total_gradient(const ViewRepresentations& reps, const LossResult& loss);

}  // namespace crosscbr
