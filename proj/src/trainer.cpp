#include "crosscbr/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "crosscbr/errors.hpp"
#include "crosscbr/evaluator.hpp"
#include "crosscbr/rng.hpp"

namespace crosscbr {

namespace {

enum SeedTag : std::uint64_t { kTagInit = 100, kTagSampler = 101, kTagEdges = 102, kTagMessages = 103 };

std::string describe(const LossBreakdown& l) {
  std::ostringstream os;
  os.precision(17);
  os << "bpr=" << l.bpr << " cl_u=" << l.contrastive_user << " cl_b=" << l.contrastive_bundle
     << " l2=" << l.l2 << " total=" << l.total;
  return os.str();
}

}  // namespace

void TrainerConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (batch_size < 2) fail("batch_size must be at least 2");
  if (patience < 1) fail("patience must be at least 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) fail("adam_eps must be positive");
  if (selection_k <= 0) fail("selection_k must be positive");
  if (model.dim < 1) fail("dim must be at least 1");
  const double rho = model.augmentation.dropout_ratio;
  if (!(rho >= 0 && rho < 1)) fail("dropout ratio must lie in [0, 1)");
  if (!(loss.tau > 0)) fail("tau must be positive");
  if (loss.lambda1 < 0 || loss.lambda2 < 0) fail("lambda1 and lambda2 must be non-negative");
}

TripleSampler::TripleSampler(const Relation& train, std::size_t num_users,
                             std::size_t num_bundles)
    : train_(&train), num_bundles_(num_bundles), positives_(group_by_left(train, num_users)) {
  if (train.empty()) throw DatasetError("training split is empty");
  for (std::size_t u = 0; u < positives_.size(); ++u) {
    if (positives_[u].size() >= num_bundles) {
      throw DatasetError("user " + std::to_string(u) +
                         " interacted with every bundle; no negative can be sampled");
    }
  }
}

Id TripleSampler::sample_negative(Id user, std::mt19937_64& rng) const {
  const auto& pos = positives_[user];
  std::uniform_int_distribution<std::size_t> pick(0, num_bundles_ - 1);
  while (true) {
    const auto b = static_cast<Id>(pick(rng));
    if (!std::binary_search(pos.begin(), pos.end(), b)) return b;
  }
}

TrainBatch TripleSampler::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, train_->size() - 1);
  std::vector<Triple> triples;
  triples.reserve(batch_size);
  for (std::size_t t = 0; t < batch_size; ++t) {
    const auto& [u, b] = (*train_)[pick(rng)];
    triples.push_back({u, b, sample_negative(u, rng)});
  }
  return TrainBatch::from_triples(std::move(triples));
}

EmbeddingState initial_state(const SplitDataset& split, const TrainerConfig& cfg) {
  const auto& ds = split.base;
  return init_embeddings(ds.num_users, ds.num_bundles, ds.num_items, cfg.model.dim,
                         derive_seed(cfg.seed, {kTagInit}));
}

TrainResult train(const SplitDataset& split, const TrainerConfig& cfg,
                  const TrainObserver& observer) {
  cfg.validate();
  TrainResult result;
  EmbeddingState state = initial_state(split, cfg);
  result.adam = init_adam(state);
  result.best_state = state;
  result.best_adam = result.adam;
  if (cfg.max_epochs == 0) {
    result.last_state = std::move(state);
    return result;
  }

  const auto base_graphs =
      std::make_shared<const ModelGraphs>(build_model_graphs(split, cfg.model.graph));
  const TripleSampler sampler(split.train, split.base.num_users, split.base.num_bundles);
  std::mt19937_64 rng(derive_seed(cfg.seed, {kTagSampler}));
  const auto& aug = cfg.model.augmentation;
  const std::size_t steps_per_epoch = (split.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const int sel_k =
      static_cast<int>(std::min<std::size_t>(cfg.selection_k, split.base.num_bundles));
  const std::array<int, 1> ks{sel_k};
  const AdamConfig adam_cfg = cfg.adam();

  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::uint64_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto graphs = base_graphs;
    if (aug.mode == AugmentationMode::kEdgeDropout) {
      graphs = std::make_shared<const ModelGraphs>(
          augment_graphs(*base_graphs, aug, derive_seed(cfg.seed, {kTagEdges, epoch})));
    }
    double sum_bpr = 0.0, sum_total = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      ++global_step;
      const TrainBatch batch = sampler.sample(cfg.batch_size, rng);
      std::optional<MessageDropout> md;
      if (aug.mode == AugmentationMode::kMessageDropout) {
        md = MessageDropout{aug.dropout_ratio, derive_seed(cfg.seed, {kTagMessages, global_step})};
      }
      const ViewRepresentations reps = encode(state, graphs, cfg.model.layers, md);
      const LossResult loss = total_loss(reps, state, batch, cfg.loss);
      if (!std::isfinite(loss.breakdown.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(global_step) + ": " + describe(loss.breakdown));
      }
      try {
        adam_step(state, result.adam, total_gradient(reps, loss), adam_cfg);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(global_step) + ": " +
                             describe(loss.breakdown));
      }
      StepRecord rec{global_step, epoch, loss.breakdown};
      sum_bpr += rec.loss.bpr;
      sum_total += rec.loss.total;
      if (observer.on_step) observer.on_step(rec);
      result.steps.push_back(rec);
    }

    const ViewRepresentations val_reps = encode(state, base_graphs, cfg.model.layers);
    const MetricsReport report =
        rank_and_score(val_reps, split, EvalTarget::kValidation, ks, ScoreView::kBoth);
    const double ndcg = report.ndcg_at.at(sel_k);
    if (ndcg > best) {
      best = ndcg;
      result.best_state = state;
      result.best_adam = result.adam;
      result.best_epoch = epoch;
      result.best_val_ndcg = ndcg;
      since_best = 0;
    } else {
      ++since_best;
    }
    EpochRecord er;
    er.epoch = epoch;
    er.k = sel_k;
    er.val_recall = report.recall_at.at(sel_k);
    er.val_ndcg = ndcg;
    er.mean_bpr = sum_bpr / static_cast<double>(steps_per_epoch);
    er.mean_total = sum_total / static_cast<double>(steps_per_epoch);
    er.best_epoch = result.best_epoch;
    if (observer.on_epoch) observer.on_epoch(er);
    result.epochs.push_back(er);
    result.epochs_run = epoch;
    if (since_best >= cfg.patience) break;
  }
  result.last_state = std::move(state);
  return result;
}

}  // namespace crosscbr
