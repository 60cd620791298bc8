#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace crosscbr {

using Id = std::uint32_t;
using Pair = std::pair<Id, Id>;

/// A binary relation between two id spaces, stored as sorted unique pairs.
using Relation = std::vector<Pair>;

/// Users, bundles and items with the three relations between them:
/// user-bundle interactions, user-item interactions, bundle-item affiliation.
struct BundleDataset {
  std::string name;
  std::size_t num_users = 0;
  std::size_t num_bundles = 0;
  std::size_t num_items = 0;
  Relation user_bundle;
  Relation user_item;
  Relation bundle_item;

  friend bool operator==(const BundleDataset&, const BundleDataset&) = default;
};

/// User-bundle interactions partitioned into train/validation/test. The other
/// two relations stay fully visible through `base`.
struct SplitDataset {
  BundleDataset base;
  Relation train;
  Relation validation;
  Relation test;
};

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

struct SyntheticSpec {
  std::size_t users = 100;
  std::size_t bundles = 50;
  std::size_t items = 200;
  std::size_t blocks = 5;
  double noise_rate = 0.1;
  std::uint64_t seed = 7;
  std::size_t items_per_bundle = 5;
  std::size_t bundles_per_user = 8;
  std::size_t items_per_user = 12;
};

/// Sorts and deduplicates in place.
void normalize_relation(Relation& rel);

/// Throws DatasetError when ids are out of range, pairs repeat, or a bundle
/// that users interact with has no items.
void validate(const BundleDataset& ds);

/// Reads `<root>/<name>/{size,user_bundle,user_item,bundle_item}.txt`.
BundleDataset load_dataset(const std::filesystem::path& root, const std::string& name);
BundleDataset load_dataset(const std::filesystem::path& dir);

void write_dataset(const BundleDataset& ds, const std::filesystem::path& dir);

Relation read_pairs(const std::filesystem::path& file);
void write_pairs(const Relation& rel, const std::filesystem::path& file);

/// Uniform random partition of the user-bundle pairs. Validation and test
/// sizes are floor(n * ratio); the remainder goes to train.
SplitDataset split(const BundleDataset& ds, SplitRatios ratios, std::uint64_t seed);

/// Writes train.txt / tune.txt / test.txt.
void write_split(const SplitDataset& sd, const std::filesystem::path& dir);
bool has_split_files(const std::filesystem::path& dir);
/// Reads the three split files and checks they partition ds.user_bundle.
SplitDataset load_split(const BundleDataset& ds, const std::filesystem::path& dir);

/// Planted-community dataset for desk-scale experiments.
BundleDataset generate_synthetic(const SyntheticSpec& spec);

/// Parses "users,bundles,items,blocks,noise".
SyntheticSpec parse_synthetic_spec(const std::string& text);

/// Community of an entity in a dataset produced by generate_synthetic.
std::size_t synthetic_block(std::size_t id, std::size_t count, std::size_t blocks);

/// Stable FNV-1a digest over counts and relations.
std::uint64_t checksum(const BundleDataset& ds);

/// Per-bundle item lists (bundle_item as adjacency).
std::vector<std::vector<Id>> bundle_items(const BundleDataset& ds);
/// Per-user bundle lists of a relation, sorted.
std::vector<std::vector<Id>> group_by_left(const Relation& rel, std::size_t left_count);

}  // namespace crosscbr
