#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/report.hpp"
#include "crosscbr/trainer.hpp"

namespace crosscbr {

/// Everything a run needs besides the data itself.
struct RunConfig {
  TrainerConfig trainer;
  SplitRatios split_ratios;
  std::uint64_t split_seed = 2022;
  std::vector<int> eval_ks{20, 40};
  bool mask_validation_at_test = true;
  std::size_t diagnose_sample = 100000;
};

/// One configurable field. The table of fields drives the config-file
/// parser, the command-line flags and the manifest, so the three always
/// cover the same set.
struct ConfigField {
  std::string key;   // config-file key; the flag is --key with '_' -> '-'
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<Json(const RunConfig&)> get;
};

const std::vector<ConfigField>& config_fields();
const ConfigField* find_config_field(const std::string& key);
std::string flag_name(const ConfigField& field);

/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// INI-style file: `key = value` lines, `#` or `;` comments, optional
/// `[section]` headers (ignored). Keys are the field keys.
void load_config_file(RunConfig& cfg, const std::filesystem::path& file);
std::string to_config_text(const RunConfig& cfg);

Json to_json(const RunConfig& cfg);

struct DatasetSource {
  std::string kind;  // "directory" or "synthetic"
  std::string path;  // directory source
  std::string synthetic;  // synthetic spec string
  std::uint64_t synthetic_seed = 0;
};

/// Reproducibility record written before training starts.
struct RunManifest {
  RunConfig config;
  DatasetSource source;
  std::string dataset_name;
  std::uint64_t dataset_checksum = 0;
  std::size_t users = 0, bundles = 0, items = 0;
  std::vector<std::pair<std::string, std::string>> artifacts;
};

Json to_json(const RunManifest& manifest);
/// Inverse of to_json for the parts needed to rebuild a run.
RunManifest manifest_from_json(const Json& j);

std::string tool_version();

}  // namespace crosscbr
