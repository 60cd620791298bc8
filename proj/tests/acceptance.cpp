// Acceptance suite: one PASS/FAIL line per criterion; exit status is nonzero
// if any gating criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cli.hpp"
#include "crosscbr/evaluator.hpp"
#include "crosscbr/graph.hpp"
#include "crosscbr/trainer.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

using namespace crosscbr;
namespace t = crosscbr::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " (" << detail
            << ")" << std::endl;
  if (!ok) ++failures;
}

void gradient_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20221);
  double worst = 0.0;
  std::size_t instances = 0;
  for (LossMode mode : {LossMode::kFull, LossMode::kNoContrastive, LossMode::kAlignOnly,
                        LossMode::kDisperseOnly}) {
    for (std::size_t k : {0, 1, 2}) {
      for (int trial = 0; trial < 5; ++trial) {
        worst = std::max(worst, t::random_gradient_instance(rng, mode, k).max_error());
        ++instances;
      }
    }
  }
  const double elapsed = seconds_since(start);
  report(1, "analytic gradients match central finite differences", worst < 1e-4 && elapsed < 60,
         fmt("%zu instances, max rel err %.3g < 1e-4, %.2fs < 60s", instances, worst, elapsed));
}

void propagation_oracle() {
  std::mt19937_64 rng(20222);
  double worst = 0.0;
  std::size_t instances = 0;
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 50);
    const std::size_t l = size(rng), r = size(rng);
    const Relation rel = t::random_relation(l, r, 0.12, rng);
    const auto g = build_bipartite_graph(rel, l, r);
    t::DenseGraph dense(l, r);
    dense.add_cross(rel);
    const auto norm = dense.normalized();
    const Matrix l0 = t::random_matrix(l, 4, rng), r0 = t::random_matrix(r, 4, rng);
    for (std::size_t k = 0; k <= 3; ++k) {
      const Propagation p = propagate(g, l0, r0, k);
      const auto [dl, dr] = t::dense_propagate(norm, l0, r0, k);
      worst = std::max({worst, t::max_abs_diff(p.left, dl), t::max_abs_diff(p.right, dr)});
      ++instances;
    }
  }
  report(2, "sparse propagation equals dense normalized adjacency", worst <= 1e-12,
         fmt("%zu graph/K pairs, max abs diff %.3g <= 1e-12", instances, worst));
}

void metric_oracle() {
  std::mt19937_64 rng(20223);
  std::size_t instances = 0, recall_mismatch = 0;
  double ndcg_worst = 0.0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t m = 1 + rng() % 10, n = 1 + rng() % 10, d = 3;
    SplitDataset sd;
    sd.base.num_users = m;
    sd.base.num_bundles = n;
    for (Id u = 0; u < m; ++u) {
      for (Id b = 0; b < n; ++b) {
        const auto r = rng() % 5;
        if (r == 0) sd.train.emplace_back(u, b);
        if (r == 1) sd.validation.emplace_back(u, b);
        if (r == 2) sd.test.emplace_back(u, b);
      }
    }
    ViewRepresentations reps;
    // Small integer embeddings produce plenty of score ties.
    const auto ints = [&](std::size_t rows) {
      Matrix x(rows, d);
      for (auto& v : x.values()) v = static_cast<double>(rng() % 3);
      return x;
    };
    reps.user_bundle_view = ints(m);
    reps.bundle_bundle_view = ints(n);
    reps.user_item_view = ints(m);
    reps.bundle_item_view = ints(n);
    const int k = static_cast<int>(1 + rng() % n);
    const std::vector<int> ks{k};
    const MetricsReport rep = rank_and_score(reps, sd, EvalTarget::kTest, ks, ScoreView::kBoth);

    double recall = 0.0, ndcg = 0.0;
    std::size_t users = 0;
    for (Id u = 0; u < m; ++u) {
      std::set<Id> truth, masked;
      for (const auto& [a, b] : sd.test) if (a == u) truth.insert(b);
      for (const auto& [a, b] : sd.train) if (a == u) masked.insert(b);
      for (const auto& [a, b] : sd.validation) if (a == u) masked.insert(b);
      if (truth.empty()) continue;
      std::vector<double> scores(n);
      for (Id b = 0; b < n; ++b) {
        scores[b] = dot(reps.user_bundle_view.row(u), reps.bundle_bundle_view.row(b)) +
                    dot(reps.user_item_view.row(u), reps.bundle_item_view.row(b));
      }
      const auto o = t::oracle_metrics(scores, masked, truth, static_cast<std::size_t>(k));
      recall += o.recall;
      ndcg += o.ndcg;
      ++users;
    }
    if (users == 0) continue;
    ++instances;
    if (rep.recall_at.at(k) != recall / users || rep.evaluated_users != users) ++recall_mismatch;
    ndcg_worst = std::max(ndcg_worst, std::abs(rep.ndcg_at.at(k) - ndcg / users));
  }
  report(3, "Recall/NDCG equal a brute-force ranking oracle",
         instances >= 100 && recall_mismatch == 0 && ndcg_worst <= 1e-12,
         fmt("%zu instances, %zu recall mismatches, max NDCG diff %.3g <= 1e-12", instances,
             recall_mismatch, ndcg_worst));
}

void closed_forms() {
  const std::vector<double> same{0.3};
  const double bpr = bpr_loss(same, same).loss;
  Matrix two(2, 2);
  two(0, 0) = two(1, 1) = 1.0;
  const double nce = infonce_loss(two, two, 1.0).loss;
  const bool ok = std::abs(bpr - std::log(2.0)) <= 1e-12 && std::abs(nce - 0.313262) <= 1e-6;
  report(4, "closed-form BPR and InfoNCE values", ok,
         fmt("BPR(delta=0) = %.9f vs ln2, InfoNCE = %.7f vs 0.313262 +- 1e-6", bpr, nce));
}

struct SeedOutcome {
  double untrained = 0.0, full = 0.0, no_cl = 0.0;
  AlignmentDispersionReport ad_full, ad_no_cl;
};

// Synthetic protocol shared by criteria 5 and 6: for each seed the dataset,
// split and training all use that seed; every hyperparameter keeps its
// default. Test Recall@5 uses the sum of both views' scores.
std::vector<SeedOutcome> synthetic_runs(double& elapsed) {
  const auto start = Clock::now();
  std::vector<SeedOutcome> out;
  const std::vector<int> ks{5};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const SplitDataset sd = split(generate_synthetic(spec), {}, seed);
    const auto graphs = std::make_shared<const ModelGraphs>(build_model_graphs(sd, {}));
    const auto recall = [&](const EmbeddingState& s, std::size_t layers) {
      return rank_and_score(encode(s, graphs, layers), sd, EvalTarget::kTest, ks, ScoreView::kBoth)
          .recall_at.at(5);
    };

    TrainerConfig cfg;
    cfg.seed = seed;
    SeedOutcome o;
    o.untrained = recall(initial_state(sd, cfg), cfg.model.layers);
    const TrainResult full = train(sd, cfg);
    o.full = recall(full.best_state, cfg.model.layers);
    o.ad_full = alignment_dispersion(encode(full.best_state, graphs, cfg.model.layers), 0, seed);

    cfg.loss.mode = LossMode::kNoContrastive;
    const TrainResult plain = train(sd, cfg);
    o.no_cl = recall(plain.best_state, cfg.model.layers);
    o.ad_no_cl = alignment_dispersion(encode(plain.best_state, graphs, cfg.model.layers), 0, seed);
    std::cout << fmt("  seed %llu: Recall@5 untrained %.4f, full %.4f, no_CL %.4f; "
                     "A_U^C %.4f vs %.4f; D_U^B %.4f vs %.4f",
                     static_cast<unsigned long long>(seed), o.untrained, o.full, o.no_cl,
                     o.ad_full.align_users, o.ad_no_cl.align_users,
                     o.ad_full.disperse_users_bundle_view, o.ad_no_cl.disperse_users_bundle_view)
              << std::endl;
    out.push_back(o);
  }
  elapsed = seconds_since(start);
  return out;
}

void synthetic_criteria() {
  double elapsed = 0.0;
  const auto runs = synthetic_runs(elapsed);
  const auto mean = [&](double SeedOutcome::*field) {
    double s = 0.0;
    for (const auto& r : runs) s += r.*field;
    return s / static_cast<double>(runs.size());
  };
  const double untrained = mean(&SeedOutcome::untrained), full = mean(&SeedOutcome::full),
               no_cl = mean(&SeedOutcome::no_cl);
  report(5, "mean test Recall@5: full > no_CL > untrained on planted-block data",
         full > no_cl && no_cl > untrained && full > untrained && elapsed < 300,
         fmt("5 seeds, full %.4f, no_CL %.4f, untrained %.4f, %.1fs < 300s", full, no_cl, untrained,
             elapsed));

  int wins = 0;
  for (const auto& r : runs) {
    wins += r.ad_full.align_users > r.ad_no_cl.align_users &&
            r.ad_full.disperse_users_bundle_view < r.ad_no_cl.disperse_users_bundle_view;
  }
  report(6, "contrastive training raises A_U^C and lowers D_U^B", wins >= 4,
         fmt("%d of 5 seeds, need >= 4", wins));
}

void space_audit() {
  std::mt19937_64 rng(20227);
  std::size_t checked = 0, bad = 0;
  for (bool sc : {false, true}) {
    for (bool bb : {false, true}) {
      for (auto aug : {AugmentationMode::kOriginal, AugmentationMode::kEdgeDropout,
                       AugmentationMode::kMessageDropout}) {
        const std::size_t m = 5 + rng() % 10, n = 5 + rng() % 10, o = 5 + rng() % 10;
        SplitDataset sd;
        sd.base = t::random_dataset(m, n, o, 0.3, rng);
        sd.train = sd.base.user_bundle;
        // One validation pair per user keeps the selection metric defined.
        for (std::size_t u = 0; u < m && !sd.train.empty(); u += 3) {
          sd.validation.push_back(sd.train.back());
          sd.train.pop_back();
        }
        std::sort(sd.validation.begin(), sd.validation.end());
        TrainerConfig cfg;
        cfg.max_epochs = 1;
        cfg.batch_size = 16;
        cfg.model.dim = 1 + rng() % 16;
        cfg.model.layers = rng() % 4;
        cfg.model.graph = {sc, bb};
        cfg.model.augmentation.mode = aug;
        bool saturated = false;
        for (const auto& users : group_by_left(sd.train, m)) saturated |= users.size() >= n;
        if (saturated || sd.train.empty()) continue;
        const TrainResult r = train(sd, cfg);
        const std::size_t expect = (m + n + o) * cfg.model.dim;
        bad += r.best_state.parameter_count() != expect || r.last_state.parameter_count() != expect;
        ++checked;
      }
    }
  }
  report(7, "learnable parameter count equals (M+N+O)*d", checked >= 8 && bad == 0,
         fmt("%zu configurations, %zu mismatches", checked, bad));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism() {
  t::TempDir tmp;
  std::ostringstream sink;
  std::size_t compared = 0, differing = 0;
  for (const std::string aug : {"OP", "ED"}) {
    for (int copy = 0; copy < 2; ++copy) {
      const auto dir = tmp / (aug + std::to_string(copy));
      const int code = cli::run({"train", "--synthetic", "100,50,200,5,0.1", "--epochs", "10",
                                 "--seed", "1", "--aug", aug, "--run-dir", dir.string(), "--quiet"},
                                sink, sink);
      if (code != 0) ++differing;
    }
    for (const char* file : {"train_log.jsonl", "best.ckpt", "last.ckpt"}) {
      ++compared;
      const std::string a = slurp(tmp / (aug + "0") / file), b = slurp(tmp / (aug + "1") / file);
      differing += a.empty() || a != b;
    }
  }
  report(8, "identical config and seed give byte-identical logs and checkpoints (OP, ED)",
         differing == 0, fmt("%zu artifact pairs compared, %zu differ", compared, differing));
}

void full_scale() {
  const char* dir = std::getenv("CROSSCBR_YOUSHU_DIR");
  std::cout << "SKIP criterion 9: full-scale Youshu reproduction (non-gating; "
            << (dir ? "requires hours of training and a hyperparameter search"
                    : "set CROSSCBR_YOUSHU_DIR and run `crosscbr train --data` manually")
            << ")" << std::endl;
}

}  // namespace

int main() {
  gradient_correctness();
  propagation_oracle();
  metric_oracle();
  closed_forms();
  synthetic_criteria();
  space_audit();
  determinism();
  full_scale();
  std::cout << (failures == 0 ? "all gating criteria passed" : std::to_string(failures) + " gating criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
