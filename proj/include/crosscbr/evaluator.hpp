#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/encoder.hpp"

namespace crosscbr {

enum class ScoreView { kBundle, kItem, kBoth };
enum class EvalTarget { kValidation, kTest };

std::string to_string(ScoreView view);
ScoreView parse_score_view(const std::string& text);
std::string to_string(EvalTarget target);
EvalTarget parse_eval_target(const std::string& text);

struct EvaluationOptions {
  bool mask_validation_at_test = true;
};

struct ViewMetrics {
  std::map<int, double> recall_at;
  std::map<int, double> ndcg_at;
};

struct MetricsReport {
  EvalTarget target = EvalTarget::kValidation;
  ScoreView view = ScoreView::kBoth;  // view behind recall_at / ndcg_at
  std::map<int, double> recall_at;
  std::map<int, double> ndcg_at;
  std::map<ScoreView, ViewMetrics> per_view;
  std::size_t evaluated_users = 0;
};

struct UserRanking {
  Id user;
  std::vector<Id> top;  // best first
};

/// Full-catalog top-k for every user with at least one target bundle. Train
/// bundles (and validation bundles when ranking for test with the masking
/// option on) are excluded.
std::vector<UserRanking> rank_users(const ViewRepresentations& reps, const SplitDataset& split,
                                    EvalTarget target, std::size_t k, ScoreView view,
                                    const EvaluationOptions& options = {});

struct RankingMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

/// Binary-gain Recall@k and NDCG@k of one ranked list; `truth` sorted.
RankingMetrics ranking_metrics(std::span<const Id> ranked, std::span<const Id> truth,
                               std::size_t k);

MetricsReport rank_and_score(const ViewRepresentations& reps, const SplitDataset& split,
                             EvalTarget target, std::span<const int> ks, ScoreView view,
                             const EvaluationOptions& options = {});

/// Runs rank_and_score for each view; the headline numbers come from the
/// combined score.
MetricsReport evaluate_views(const ViewRepresentations& reps, const SplitDataset& split,
                             EvalTarget target, std::span<const int> ks,
                             std::span<const ScoreView> views,
                             const EvaluationOptions& options = {});

/// Cosine-based geometry diagnostics.
///   align_*      mean cosine between an entity's bundle-view and item-view rows
///   disperse_*   mean cosine between distinct entities within one view
struct AlignmentDispersionReport {
  double align_users = 0.0;                 // A_U^C
  double align_bundles = 0.0;               // A_B^C
  double disperse_users_bundle_view = 0.0;  // D_U^B
  double disperse_users_item_view = 0.0;    // D_U^I
  double disperse_bundles_bundle_view = 0.0;  // D_B^B
  double disperse_bundles_item_view = 0.0;    // D_B^I
  std::size_t user_pairs = 0;
  std::size_t bundle_pairs = 0;
  bool exact = false;
};

/// `sample` = 0, or at least the number of distinct pairs, enumerates all
/// pairs; otherwise `sample` unordered pairs of distinct entities are drawn
/// uniformly (with replacement) from a seeded stream.
AlignmentDispersionReport alignment_dispersion(const ViewRepresentations& reps, std::size_t sample,
                                               std::uint64_t seed);

}  // namespace crosscbr
