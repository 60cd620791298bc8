#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "crosscbr/checkpoint.hpp"
#include "crosscbr/config.hpp"
#include "crosscbr/dataset.hpp"
#include "crosscbr/errors.hpp"
#include "crosscbr/evaluator.hpp"
#include "crosscbr/report.hpp"
#include "crosscbr/trainer.hpp"

namespace crosscbr::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kConfigFile = "config.ini";
constexpr const char* kLogFile = "train_log.jsonl";
constexpr const char* kBestCheckpoint = "best.ckpt";
constexpr const char* kLastCheckpoint = "last.ckpt";
constexpr const char* kSplitDir = "split";

struct DataOptions {
  std::string data;
  std::string synthetic;
  std::uint64_t synthetic_seed = 7;
  std::string split_dir;
};

// Config-field flags are collected as strings and applied on top of the
// config file, in registry order.
struct FieldFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void apply(RunConfig& cfg) const {
    for (const auto& f : config_fields()) {
      const auto it = options.find(f.key);
      if (it != options.end() && it->second->count() > 0) apply_setting(cfg, f.key, values.at(f.key));
    }
  }
};

void add_field_flags(CLI::App& app, FieldFlags& flags) {
  for (const auto& f : config_fields()) {
    flags.options[f.key] = app.add_option(flag_name(f), flags.values[f.key], f.help)
                               ->group("Configuration")
                               ->type_name("VALUE");
  }
}

void add_data_options(CLI::App& app, DataOptions& data) {
  app.add_option("--data", data.data,
                 "dataset directory (size.txt, user_bundle.txt, user_item.txt, bundle_item.txt)")
      ->group("Dataset");
  app.add_option("--synthetic", data.synthetic,
                 "planted-block synthetic dataset: users,bundles,items,blocks,noise")
      ->group("Dataset");
  app.add_option("--synthetic-seed", data.synthetic_seed, "seed of the synthetic generator")
      ->group("Dataset")
      ->capture_default_str();
  app.add_option("--split-dir", data.split_dir,
                 "directory with train.txt, tune.txt and test.txt")
      ->group("Dataset");
}

DatasetSource source_of(const DataOptions& data) {
  DatasetSource src;
  if (!data.synthetic.empty()) {
    src.kind = "synthetic";
    src.synthetic = data.synthetic;
    src.synthetic_seed = data.synthetic_seed;
  } else if (!data.data.empty()) {
    src.kind = "directory";
    src.path = data.data;
  } else {
    throw ConfigError("a dataset is required: pass --data DIR or --synthetic SPEC");
  }
  return src;
}

BundleDataset load_source(const DatasetSource& src) {
  if (src.kind == "synthetic") {
    SyntheticSpec spec = parse_synthetic_spec(src.synthetic);
    spec.seed = src.synthetic_seed;
    BundleDataset ds = generate_synthetic(spec);
    ds.name = "synthetic";
    return ds;
  }
  return load_dataset(src.path);
}

SplitDataset resolve_split(const BundleDataset& ds, const DatasetSource& src,
                           const std::string& split_dir, const RunConfig& cfg) {
  if (!split_dir.empty()) return load_split(ds, split_dir);
  if (src.kind == "directory" && has_split_files(src.path)) return load_split(ds, src.path);
  return split(ds, cfg.split_ratios, cfg.split_seed);
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      ks.push_back(k);
    } catch (const std::logic_error&) {
      throw ConfigError("invalid cutoff '" + tok + "' in --k");
    }
  }
  if (ks.empty()) throw ConfigError("--k needs at least one cutoff");
  return ks;
}

std::vector<ScoreView> parse_views(const std::string& text) {
  if (text == "all") return {ScoreView::kBundle, ScoreView::kItem, ScoreView::kBoth};
  try {
    return {parse_score_view(text)};
  } catch (const std::invalid_argument&) {
    throw ConfigError("unknown view '" + text + "' (expected bundle, item, both or all)");
  }
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

fs::path make_run_dir(const std::string& out, const std::string& tag) {
  const std::string stem = timestamp() + "-" + tag;
  fs::path dir = fs::path(out) / stem;
  for (int n = 1; fs::exists(dir); ++n) dir = fs::path(out) / (stem + "-" + std::to_string(n));
  return dir;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << text;
}

Json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

void check_dimensions(const EmbeddingState& state, const BundleDataset& ds) {
  const auto mismatch = [&](const char* table, std::size_t rows, std::size_t want) {
    if (rows != want) {
      throw DimensionMismatch(std::string("checkpoint has ") + std::to_string(rows) + " " + table +
                              " but the dataset has " + std::to_string(want));
    }
  };
  mismatch("users", state.users.rows(), ds.num_users);
  mismatch("bundles", state.bundles.rows(), ds.num_bundles);
  mismatch("items", state.items.rows(), ds.num_items);
  if (state.bundles.cols() != state.users.cols() || state.items.cols() != state.users.cols()) {
    throw DimensionMismatch("checkpoint tables disagree on the embedding dimension");
  }
}

// Shared by train's final report, evaluate and diagnose.
struct LoadedModel {
  RunConfig config;
  SplitDataset split;
  Checkpoint checkpoint;
  std::shared_ptr<const ModelGraphs> graphs;
};

struct ModelOptions {
  std::string run;
  std::string checkpoint;
  std::string config;
  DataOptions data;
  FieldFlags fields;
};

void add_model_options(CLI::App& app, ModelOptions& opts) {
  app.add_option("--run", opts.run, "run directory written by `train`");
  app.add_option("--checkpoint", opts.checkpoint, "checkpoint file (default: <run>/best.ckpt)");
  app.add_option("--config", opts.config, "config file");
  add_data_options(app, opts.data);
  add_field_flags(app, opts.fields);
}

LoadedModel load_model(const ModelOptions& opts) {
  LoadedModel m;
  DatasetSource src;
  std::string split_dir = opts.data.split_dir;
  if (!opts.run.empty()) {
    const RunManifest manifest = manifest_from_json(read_json(fs::path(opts.run) / kManifestFile));
    m.config = manifest.config;
    src = manifest.source;
    if (split_dir.empty()) split_dir = (fs::path(opts.run) / kSplitDir).string();
  }
  if (opts.run.empty() || !opts.data.data.empty() || !opts.data.synthetic.empty()) {
    src = source_of(opts.data);
  }
  if (!opts.config.empty()) load_config_file(m.config, opts.config);
  opts.fields.apply(m.config);

  std::string ckpt = opts.checkpoint;
  if (ckpt.empty()) {
    if (opts.run.empty()) throw ConfigError("pass --run DIR or --checkpoint FILE");
    ckpt = (fs::path(opts.run) / kBestCheckpoint).string();
  }
  const BundleDataset ds = load_source(src);
  m.checkpoint = load_checkpoint(ckpt);
  check_dimensions(m.checkpoint.state, ds);
  m.split = resolve_split(ds, src, split_dir, m.config);
  m.graphs = std::make_shared<const ModelGraphs>(
      build_model_graphs(m.split, m.config.trainer.model.graph));
  return m;
}

void emit(std::ostream& out, const std::string& format, const Json& json, const std::string& table) {
  if (format == "json") {
    out << json.dump(2) << '\n';
  } else {
    out << table;
  }
}

void add_format_options(CLI::App& app, std::string& format, std::string& json_path) {
  app.add_option("--format", format, "stdout format")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();
  app.add_option("--json", json_path, "also write the JSON report to this file");
}

int cmd_train(const std::string& config_path, const DataOptions& data, const FieldFlags& fields,
              const std::string& out_root, const std::string& tag, const std::string& run_dir_opt,
              bool quiet, std::ostream& out) {
  RunConfig cfg;
  if (!config_path.empty()) load_config_file(cfg, config_path);
  fields.apply(cfg);
  cfg.trainer.validate();
  for (int k : cfg.eval_ks) {
    if (k <= 0) throw ConfigError("eval_ks must be positive");
  }

  RunManifest manifest;
  manifest.config = cfg;
  manifest.source = source_of(data);
  const BundleDataset ds = load_source(manifest.source);
  const SplitDataset sd = resolve_split(ds, manifest.source, data.split_dir, cfg);
  manifest.dataset_name = ds.name;
  manifest.dataset_checksum = checksum(ds);
  manifest.users = ds.num_users;
  manifest.bundles = ds.num_bundles;
  manifest.items = ds.num_items;
  manifest.artifacts = {{"config", kConfigFile},
                        {"split", kSplitDir},
                        {"log", kLogFile},
                        {"best_checkpoint", kBestCheckpoint},
                        {"last_checkpoint", kLastCheckpoint},
                        {"test_metrics", "test_metrics.json"},
                        {"test_table", "test_metrics.txt"},
                        {"test_csv", "test_metrics.csv"}};

  const fs::path run_dir = run_dir_opt.empty() ? make_run_dir(out_root, tag) : fs::path(run_dir_opt);
  fs::create_directories(run_dir / kSplitDir);
  write_text(run_dir / kManifestFile, to_json(manifest).dump(2) + "\n");
  write_text(run_dir / kConfigFile, to_config_text(cfg));
  write_split(sd, run_dir / kSplitDir);

  std::ofstream log(run_dir / kLogFile, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + (run_dir / kLogFile).string());
  TrainObserver observer;
  observer.on_step = [&log](const StepRecord& rec) { log << to_json(rec).dump() << '\n'; };
  observer.on_epoch = [&log, &out, quiet](const EpochRecord& rec) {
    const Json j = to_json(rec);
    log << j.dump() << '\n';
    log.flush();
    if (!quiet) out << j.dump() << '\n';
  };
  if (!quiet) out << "run directory: " << run_dir.string() << '\n';
  const TrainResult result = train(sd, cfg.trainer, observer);
  log.close();

  save_checkpoint({result.best_state, result.best_epoch, result.best_adam}, run_dir / kBestCheckpoint);
  save_checkpoint({result.last_state, result.epochs_run, result.adam}, run_dir / kLastCheckpoint);

  const auto graphs = std::make_shared<const ModelGraphs>(build_model_graphs(sd, cfg.trainer.model.graph));
  const ViewRepresentations reps = encode(result.best_state, graphs, cfg.trainer.model.layers);
  std::vector<int> ks;
  for (int k : cfg.eval_ks) ks.push_back(std::min<int>(k, static_cast<int>(ds.num_bundles)));
  const std::array views{ScoreView::kBundle, ScoreView::kItem, ScoreView::kBoth};
  const MetricsReport report = evaluate_views(reps, sd, EvalTarget::kTest, ks, views,
                                              {cfg.mask_validation_at_test});
  Json j = to_json(report);
  j["best_epoch"] = result.best_epoch;
  j["best_val_ndcg"] = result.best_val_ndcg;
  write_text(run_dir / "test_metrics.json", j.dump(2) + "\n");
  write_text(run_dir / "test_metrics.txt", to_table(report));
  write_text(run_dir / "test_metrics.csv", to_csv(report));
  if (!quiet) {
    out << "best epoch " << result.best_epoch << " of " << result.epochs_run << '\n'
        << to_table(report);
  }
  return kExitOk;
}

struct InspectRow {
  const char* name;
  std::size_t users, items, bundles, user_item, user_bundle;
  double items_per_bundle;
};

// Published statistics of the three public bundle datasets.
constexpr std::array<InspectRow, 3> kReference{{
    {"Youshu", 8039, 32770, 4771, 138515, 51377, 37.03},
    {"NetEase", 18528, 123628, 22864, 1128065, 302303, 77.80},
    {"iFashion", 53897, 27694, 42563, 2290645, 1679708, 3.86},
}};

const InspectRow* reference_for(const std::string& name) {
  const auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  for (const auto& row : kReference) {
    if (lower(row.name) == lower(name)) return &row;
  }
  return nullptr;
}

int cmd_inspect(const DataOptions& data, const std::string& format, const std::string& json_path,
                std::ostream& out) {
  const DatasetSource src = source_of(data);
  const BundleDataset ds = load_source(src);
  const double per_bundle =
      ds.num_bundles == 0 ? 0.0 : static_cast<double>(ds.bundle_item.size()) / ds.num_bundles;
  const InspectRow* ref = reference_for(ds.name);

  Json j;
  j["name"] = ds.name;
  j["checksum"] = checksum(ds);
  const auto stats = [](std::size_t u, std::size_t i, std::size_t b, std::size_t ui, std::size_t ub,
                        double ib) {
    return Json{{"users", u},       {"items", i},        {"bundles", b},
                {"user_item", ui}, {"user_bundle", ub}, {"items_per_bundle", ib}};
  };
  j["stats"] = stats(ds.num_users, ds.num_items, ds.num_bundles, ds.user_item.size(),
                     ds.user_bundle.size(), per_bundle);
  j["bundle_item"] = ds.bundle_item.size();
  if (ref != nullptr) {
    j["reference"] = stats(ref->users, ref->items, ref->bundles, ref->user_item, ref->user_bundle,
                           ref->items_per_bundle);
  }

  std::ostringstream t;
  t << std::left << std::setw(18) << "statistic" << std::right << std::setw(12) << "value";
  if (ref != nullptr) t << std::setw(12) << "reference";
  t << '\n';
  const auto row = [&](const char* name, double v, double r, int precision) {
    t << std::left << std::setw(18) << name << std::right << std::fixed << std::setprecision(precision)
      << std::setw(12) << v;
    if (ref != nullptr) t << std::setw(12) << r;
    t << '\n';
  };
  const auto count = [](std::size_t v) { return static_cast<double>(v); };
  row("users", count(ds.num_users), ref ? count(ref->users) : 0, 0);
  row("items", count(ds.num_items), ref ? count(ref->items) : 0, 0);
  row("bundles", count(ds.num_bundles), ref ? count(ref->bundles) : 0, 0);
  row("user-item", count(ds.user_item.size()), ref ? count(ref->user_item) : 0, 0);
  row("user-bundle", count(ds.user_bundle.size()), ref ? count(ref->user_bundle) : 0, 0);
  row("items/bundle", per_bundle, ref ? ref->items_per_bundle : 0, 2);
  t << "dataset: " << ds.name << ", bundle-item pairs: " << ds.bundle_item.size() << '\n';

  if (!json_path.empty()) write_text(json_path, j.dump(2) + "\n");
  emit(out, format, j, t.str());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-view contrastive bundle recommendation: training, evaluation and diagnostics",
               "crosscbr"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write a run directory");
  std::string train_config, out_root = "runs", tag = "run", run_dir;
  bool quiet = false;
  DataOptions train_data;
  FieldFlags train_fields;
  train_cmd->add_option("--config", train_config, "config file (key = value lines)");
  train_cmd->add_option("--out", out_root, "parent of new run directories")->capture_default_str();
  train_cmd->add_option("--tag", tag, "suffix of the run directory name")->capture_default_str();
  train_cmd->add_option("--run-dir", run_dir, "exact run directory (overrides --out/--tag)");
  train_cmd->add_flag("--quiet", quiet, "print nothing on success");
  add_data_options(*train_cmd, train_data);
  add_field_flags(*train_cmd, train_fields);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "ranking metrics of a checkpoint");
  ModelOptions eval_opts;
  std::string eval_ks = "20,40", eval_view = "all", eval_target = "test", eval_format = "table",
              eval_json;
  add_model_options(*eval_cmd, eval_opts);
  eval_cmd->add_option("--k", eval_ks, "comma-separated cutoffs")->capture_default_str();
  eval_cmd->add_option("--view", eval_view, "scores: bundle, item, both or all")
      ->capture_default_str();
  eval_cmd->add_option("--target", eval_target, "split to rank: validation or test")
      ->capture_default_str();
  add_format_options(*eval_cmd, eval_format, eval_json);

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "cross-view alignment and within-view dispersion");
  ModelOptions diag_opts;
  std::optional<std::size_t> diag_sample;
  std::uint64_t diag_seed = 0;
  std::string diag_format = "table", diag_json;
  add_model_options(*diag_cmd, diag_opts);
  diag_cmd->add_option("--sample", diag_sample,
                       "pairs sampled per dispersion term (0 = all pairs; default: diagnose_sample)");
  diag_cmd->add_option("--pair-seed", diag_seed, "pair-sampling seed")->capture_default_str();
  add_format_options(*diag_cmd, diag_format, diag_json);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a planted-block synthetic dataset");
  std::string synth_spec = "100,50,200,5,0.1", synth_out, synth_name = "synthetic";
  std::uint64_t synth_seed = 7;
  synth_cmd->add_option("--spec", synth_spec, "users,bundles,items,blocks,noise")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--name", synth_name, "dataset name")->capture_default_str();

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "dataset statistics against published ones");
  DataOptions inspect_data;
  std::string inspect_format = "table", inspect_json;
  add_data_options(*inspect_cmd, inspect_data);
  add_format_options(*inspect_cmd, inspect_format, inspect_json);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(train_config, train_data, train_fields, out_root, tag, run_dir, quiet, out);
    }
    if (eval_cmd->parsed()) {
      const LoadedModel m = load_model(eval_opts);
      const std::vector<int> ks = parse_ks(eval_ks);
      const std::vector<ScoreView> views = parse_views(eval_view);
      EvalTarget target;
      try {
        target = parse_eval_target(eval_target);
      } catch (const std::invalid_argument&) {
        throw ConfigError("unknown target '" + eval_target + "'");
      }
      const ViewRepresentations reps =
          encode(m.checkpoint.state, m.graphs, m.config.trainer.model.layers);
      const MetricsReport report =
          evaluate_views(reps, m.split, target, ks, views, {m.config.mask_validation_at_test});
      Json j = to_json(report);
      j["checkpoint_epoch"] = m.checkpoint.epoch;
      if (!eval_json.empty()) write_text(eval_json, j.dump(2) + "\n");
      emit(out, eval_format, j, to_table(report));
      return kExitOk;
    }
    if (diag_cmd->parsed()) {
      const LoadedModel m = load_model(diag_opts);
      const ViewRepresentations reps =
          encode(m.checkpoint.state, m.graphs, m.config.trainer.model.layers);
      const std::size_t sample = diag_sample.value_or(m.config.diagnose_sample);
      if (sample == 1) throw ConfigError("--sample must be 0 (all pairs) or at least 2");
      const AlignmentDispersionReport report = alignment_dispersion(reps, sample, diag_seed);
      const Json j = to_json(report);
      if (!diag_json.empty()) write_text(diag_json, j.dump(2) + "\n");
      emit(out, diag_format, j, to_table(report));
      return kExitOk;
    }
    if (synth_cmd->parsed()) {
      SyntheticSpec spec = parse_synthetic_spec(synth_spec);
      spec.seed = synth_seed;
      BundleDataset ds = generate_synthetic(spec);
      ds.name = synth_name;
      write_dataset(ds, synth_out);
      out << "wrote " << ds.num_users << " users, " << ds.num_bundles << " bundles, "
          << ds.num_items << " items to " << synth_out << " (checksum " << checksum(ds) << ")\n";
      return kExitOk;
    }
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_data, inspect_format, inspect_json, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DimensionMismatch& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return kExitDimension;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace crosscbr::cli
