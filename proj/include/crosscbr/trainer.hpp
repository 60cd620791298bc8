#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/encoder.hpp"
#include "crosscbr/objectives.hpp"
#include "crosscbr/optimizer.hpp"

namespace crosscbr {

struct TrainerConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 2048;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 2022;
  /// Cutoff of the validation NDCG used for model selection (clamped to the
  /// number of bundles).
  int selection_k = 20;
  ModelConfig model;
  LossConfig loss;

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Draws BPR triples: positives uniformly (with replacement) from the
/// training pairs, negatives uniformly among the user's non-interacted
/// bundles by rejection.
class TripleSampler {
 public:
  /// Throws DatasetError if some user has interacted with every bundle.
  TripleSampler(const Relation& train, std::size_t num_users, std::size_t num_bundles);

  TrainBatch sample(std::size_t batch_size, std::mt19937_64& rng) const;
  Id sample_negative(Id user, std::mt19937_64& rng) const;

 private:
  const Relation* train_;
  std::size_t num_bundles_;
  std::vector<std::vector<Id>> positives_;
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  LossBreakdown loss;
};

struct EpochRecord {
  std::size_t epoch = 0;
  int k = 20;
  double val_recall = 0.0;
  double val_ndcg = 0.0;
  double mean_bpr = 0.0;
  double mean_total = 0.0;
  std::size_t best_epoch = 0;
};

struct TrainResult {
  EmbeddingState best_state;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_ndcg = 0.0;
  AdamState best_adam;  // optimizer state at the best epoch
  EmbeddingState last_state;
  AdamState adam;
  std::size_t epochs_run = 0;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct TrainObserver {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Initial embeddings for a run with the given config.
EmbeddingState initial_state(const SplitDataset& split, const TrainerConfig& cfg);

/// Epoch loop with per-epoch edge-dropout redraws, OP-mode validation after
/// every epoch, selection of the epoch with the highest validation NDCG
/// (earliest on ties) and early stopping after `patience` epochs without
/// improvement. Throws NumericalError on a non-finite loss.
TrainResult train(const SplitDataset& split, const TrainerConfig& cfg,
                  const TrainObserver& observer = {});

}  // namespace crosscbr
