#include <doctest.h>

#include <algorithm>
#include <map>

#include "crosscbr/errors.hpp"
#include "crosscbr/evaluator.hpp"
#include "crosscbr/trainer.hpp"

using namespace crosscbr;

namespace {

SplitDataset synthetic_split(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  return split(generate_synthetic(spec), {}, seed);
}

double val_ndcg(const EmbeddingState& state, const SplitDataset& sd, const TrainerConfig& cfg) {
  const auto graphs = std::make_shared<const ModelGraphs>(build_model_graphs(sd, cfg.model.graph));
  const std::vector<int> ks{20};
  return rank_and_score(encode(state, graphs, cfg.model.layers), sd, EvalTarget::kValidation, ks,
                        ScoreView::kBoth)
      .ndcg_at.at(20);
}

}  // namespace

TEST_CASE("a user with one free bundle always gets it as negative") {
  const Relation train{{0, 0}, {0, 1}, {0, 3}, {1, 2}};
  const TripleSampler sampler(train, 2, 4);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) CHECK(sampler.sample_negative(0, rng) == 2);
  const TrainBatch b = sampler.sample(50, rng);
  for (const auto& t : b.triples) {
    if (t.user == 0) CHECK(t.negative == 2);
    CHECK(std::binary_search(train.begin(), train.end(), Pair{t.user, t.positive}));
  }
}

TEST_CASE("negatives are uniform over the non-interacted bundles") {
  const Relation train{{0, 1}, {0, 4}};
  const TripleSampler sampler(train, 1, 10);
  std::mt19937_64 rng(2);
  std::map<Id, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[sampler.sample_negative(0, rng)];
  CHECK(counts.size() == 8);
  CHECK(counts.count(1) == 0);
  CHECK(counts.count(4) == 0);
  double chi2 = 0.0;
  const double expected = draws / 8.0;
  for (const auto& [b, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 24.32);  // 0.999 quantile of chi-square with 7 degrees of freedom
}

TEST_CASE("sampling is reproducible and rejects saturated users") {
  const Relation train{{0, 0}, {1, 1}, {1, 2}};
  const TripleSampler sampler(train, 2, 4);
  std::mt19937_64 a(3), b(3);
  for (int i = 0; i < 10; ++i) CHECK(sampler.sample(8, a).triples == sampler.sample(8, b).triples);
  const Relation full{{0, 0}, {0, 1}};
  CHECK_THROWS_AS(TripleSampler(full, 1, 2), DatasetError);
  CHECK_THROWS_AS(TripleSampler(Relation{}, 1, 2), DatasetError);
}

TEST_CASE("config validation") {
  TrainerConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.model.augmentation.dropout_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero epochs return the initial state and an empty log") {
  const SplitDataset sd = synthetic_split(7);
  TrainerConfig cfg;
  cfg.max_epochs = 0;
  const TrainResult r = train(sd, cfg);
  CHECK(r.best_state == initial_state(sd, cfg));
  CHECK(r.steps.empty());
  CHECK(r.epochs.empty());
  CHECK(r.best_epoch == 0);
}

TEST_CASE("training is deterministic in every augmentation mode") {
  const SplitDataset sd = synthetic_split(3);
  for (auto mode : {AugmentationMode::kOriginal, AugmentationMode::kEdgeDropout,
                    AugmentationMode::kMessageDropout}) {
    TrainerConfig cfg;
    cfg.max_epochs = 4;
    cfg.batch_size = 128;
    cfg.model.augmentation.mode = mode;
    const TrainResult a = train(sd, cfg);
    const TrainResult b = train(sd, cfg);
    CHECK(a.last_state == b.last_state);
    CHECK(a.adam == b.adam);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].loss.total == b.steps[i].loss.total);
  }
}

TEST_CASE("epochs run ceil(|train| / T) steps and the observer sees them") {
  const SplitDataset sd = synthetic_split(4);
  TrainerConfig cfg;
  cfg.max_epochs = 2;
  cfg.batch_size = 100;
  std::size_t steps = 0, epochs = 0;
  TrainObserver obs{[&](const StepRecord&) { ++steps; }, [&](const EpochRecord&) { ++epochs; }};
  const TrainResult r = train(sd, cfg, obs);
  const std::size_t per_epoch = (sd.train.size() + 99) / 100;
  CHECK(steps == 2 * per_epoch);
  CHECK(epochs == 2);
  CHECK(r.steps.back().step == 2 * per_epoch);
  CHECK(r.adam.step == 2 * per_epoch);
}

TEST_CASE("training beats the untrained model and selects the best epoch") {
  const SplitDataset sd = synthetic_split(7);
  TrainerConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  const double untrained = val_ndcg(initial_state(sd, cfg), sd, cfg);
  const TrainResult r = train(sd, cfg);
  CHECK(r.best_val_ndcg > untrained);

  const auto best = std::max_element(r.epochs.begin(), r.epochs.end(),
                                     [](const auto& a, const auto& b) { return a.val_ndcg < b.val_ndcg; });
  CHECK(r.best_epoch == best->epoch);
  CHECK(r.best_val_ndcg == best->val_ndcg);
  CHECK(val_ndcg(r.best_state, sd, cfg) == r.best_val_ndcg);
  for (const auto& e : r.epochs) CHECK(e.best_epoch <= e.epoch);
}

TEST_CASE("early stopping after patience epochs without improvement") {
  const SplitDataset sd = synthetic_split(5);
  TrainerConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 2;
  cfg.learning_rate = 0.05;
  const TrainResult r = train(sd, cfg);
  REQUIRE(r.epochs_run < 200);
  CHECK(r.epochs_run == r.best_epoch + 2);
}

TEST_CASE("BPR loss trends down") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const SplitDataset sd = synthetic_split(seed);
    TrainerConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = 50;
    cfg.patience = 50;
    const TrainResult r = train(sd, cfg);
    REQUIRE(r.epochs.size() == 50);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      first += r.epochs[i].mean_bpr;
      last += r.epochs[40 + i].mean_bpr;
    }
    CHECK(last < first);
  }
}

TEST_CASE("non-finite losses abort with a numerical error") {
  const SplitDataset sd = synthetic_split(6);
  TrainerConfig cfg;
  cfg.max_epochs = 1;
  cfg.loss.tau = 1e-320;
  CHECK_THROWS_AS(train(sd, cfg), NumericalError);
}
