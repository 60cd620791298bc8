#include "crosscbr/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "crosscbr/kernels.hpp"

namespace crosscbr {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

kernels::ScoreFactors factors(const ViewRepresentations& reps, ScoreView view) {
  switch (view) {
    case ScoreView::kBundle:
      return {&reps.user_bundle_view, &reps.bundle_bundle_view, nullptr, nullptr};
    case ScoreView::kItem:
      return {&reps.user_item_view, &reps.bundle_item_view, nullptr, nullptr};
    case ScoreView::kBoth:
      return {&reps.user_bundle_view, &reps.bundle_bundle_view, &reps.user_item_view,
              &reps.bundle_item_view};
  }
  throw std::invalid_argument("unknown score view");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw std::domain_error("alignment_dispersion: zero-norm representation row");
  }
  return dot(a, b) / (na * nb);
}

double mean_alignment(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) s += cosine(a.row(r), b.row(r));
  return s / static_cast<double>(a.rows());
}

std::vector<std::pair<std::size_t, std::size_t>> pick_pairs(std::size_t n, std::size_t sample,
                                                            std::mt19937_64& rng, bool& exact) {
  if (n < 2) throw std::invalid_argument("alignment_dispersion: need at least two entities");
  const std::size_t total = n * (n - 1) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (sample == 0 || sample >= total) {
    exact = true;
    pairs.reserve(total);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }
  exact = false;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  pairs.reserve(sample);
  while (pairs.size() < sample) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    if (i != j) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  return pairs;
}

double mean_pair_cosine(const Matrix& m,
                        const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double s = 0.0;
  for (const auto& [i, j] : pairs) s += cosine(m.row(i), m.row(j));
  return s / static_cast<double>(pairs.size());
}

}  // namespace

std::string to_string(ScoreView view) {
  switch (view) {
    case ScoreView::kBundle:
      return "bundle";
    case ScoreView::kItem:
      return "item";
    case ScoreView::kBoth:
      return "both";
  }
  return "?";
}

ScoreView parse_score_view(const std::string& text) {
  const std::string t = lower(text);
  if (t == "bundle") return ScoreView::kBundle;
  if (t == "item") return ScoreView::kItem;
  if (t == "both") return ScoreView::kBoth;
  throw std::invalid_argument("unknown view '" + text + "' (expected bundle, item or both)");
}

std::string to_string(EvalTarget target) {
  return target == EvalTarget::kValidation ? "validation" : "test";
}

EvalTarget parse_eval_target(const std::string& text) {
  const std::string t = lower(text);
  if (t == "validation" || t == "val" || t == "tune") return EvalTarget::kValidation;
  if (t == "test") return EvalTarget::kTest;
  throw std::invalid_argument("unknown evaluation target '" + text + "'");
}

std::vector<UserRanking> rank_users(const ViewRepresentations& reps, const SplitDataset& split,
                                    EvalTarget target, std::size_t k, ScoreView view,
                                    const EvaluationOptions& options) {
  const std::size_t m = split.base.num_users;
  const Relation& truth_rel = target == EvalTarget::kTest ? split.test : split.validation;
  const auto truth = group_by_left(truth_rel, m);
  auto masked = group_by_left(split.train, m);
  if (target == EvalTarget::kTest && options.mask_validation_at_test) {
    for (const auto& [u, b] : split.validation) masked[u].push_back(b);
  }

  std::vector<Id> users;
  std::vector<std::vector<Id>> user_masks;
  for (std::size_t u = 0; u < m; ++u) {
    if (truth[u].empty()) continue;
    users.push_back(static_cast<Id>(u));
    user_masks.push_back(std::move(masked[u]));
  }
  auto top = kernels::top_k(factors(reps, view), users, user_masks, k);
  std::vector<UserRanking> out;
  out.reserve(users.size());
  for (std::size_t j = 0; j < users.size(); ++j) out.push_back({users[j], std::move(top[j])});
  return out;
}

RankingMetrics ranking_metrics(std::span<const Id> ranked, std::span<const Id> truth,
                               std::size_t k) {
  RankingMetrics r;
  if (truth.empty()) return r;
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < depth; ++pos) {
    if (std::binary_search(truth.begin(), truth.end(), ranked[pos])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, truth.size());
  for (std::size_t pos = 0; pos < ideal; ++pos) idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  r.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
  r.ndcg = dcg / idcg;
  return r;
}

MetricsReport rank_and_score(const ViewRepresentations& reps, const SplitDataset& split,
                             EvalTarget target, std::span<const int> ks, ScoreView view,
                             const EvaluationOptions& options) {
  if (ks.empty()) throw std::invalid_argument("no cutoffs given");
  int max_k = 0;
  for (int k : ks) {
    if (k <= 0) throw std::invalid_argument("cutoff K must be positive");
    if (static_cast<std::size_t>(k) > split.base.num_bundles) {
      throw std::invalid_argument("cutoff K=" + std::to_string(k) + " exceeds the " +
                                  std::to_string(split.base.num_bundles) + " bundles");
    }
    max_k = std::max(max_k, k);
  }
  const auto rankings =
      rank_users(reps, split, target, static_cast<std::size_t>(max_k), view, options);
  const auto truth = group_by_left(target == EvalTarget::kTest ? split.test : split.validation,
                                   split.base.num_users);

  MetricsReport report;
  report.target = target;
  report.view = view;
  report.evaluated_users = rankings.size();
  for (int k : ks) {
    double recall = 0.0, ndcg = 0.0;
    for (const auto& r : rankings) {
      const auto m = ranking_metrics(r.top, truth[r.user], static_cast<std::size_t>(k));
      recall += m.recall;
      ndcg += m.ndcg;
    }
    const double denom = rankings.empty() ? 1.0 : static_cast<double>(rankings.size());
    report.recall_at[k] = recall / denom;
    report.ndcg_at[k] = ndcg / denom;
  }
  report.per_view[view] = ViewMetrics{report.recall_at, report.ndcg_at};
  return report;
}

MetricsReport evaluate_views(const ViewRepresentations& reps, const SplitDataset& split,
                             EvalTarget target, std::span<const int> ks,
                             std::span<const ScoreView> views, const EvaluationOptions& options) {
  if (views.empty()) throw std::invalid_argument("no views requested");
  MetricsReport out;
  bool headline = false;
  for (ScoreView v : views) {
    MetricsReport r = rank_and_score(reps, split, target, ks, v, options);
    out.per_view[v] = r.per_view[v];
    if (!headline || v == ScoreView::kBoth) {
      out.view = v;
      out.recall_at = r.recall_at;
      out.ndcg_at = r.ndcg_at;
      headline = true;
    }
    out.target = target;
    out.evaluated_users = r.evaluated_users;
  }
  return out;
}

AlignmentDispersionReport alignment_dispersion(const ViewRepresentations& reps, std::size_t sample,
                                               std::uint64_t seed) {
  if (sample == 1) throw std::invalid_argument("dispersion sample must be 0 (exact) or >= 2");
  AlignmentDispersionReport r;
  r.align_users = mean_alignment(reps.user_bundle_view, reps.user_item_view);
  r.align_bundles = mean_alignment(reps.bundle_bundle_view, reps.bundle_item_view);

  std::mt19937_64 rng(seed);
  bool exact_users = false, exact_bundles = false;
  const auto user_pairs = pick_pairs(reps.user_bundle_view.rows(), sample, rng, exact_users);
  const auto bundle_pairs = pick_pairs(reps.bundle_bundle_view.rows(), sample, rng, exact_bundles);
  r.disperse_users_bundle_view = mean_pair_cosine(reps.user_bundle_view, user_pairs);
  r.disperse_users_item_view = mean_pair_cosine(reps.user_item_view, user_pairs);
  r.disperse_bundles_bundle_view = mean_pair_cosine(reps.bundle_bundle_view, bundle_pairs);
  r.disperse_bundles_item_view = mean_pair_cosine(reps.bundle_item_view, bundle_pairs);
  r.user_pairs = user_pairs.size();
  r.bundle_pairs = bundle_pairs.size();
  r.exact = exact_users && exact_bundles;
  return r;
}

}  // namespace crosscbr
