#include "crosscbr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "crosscbr/errors.hpp"

namespace crosscbr {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSizeFile = "size.txt";
constexpr const char* kUserBundleFile = "user_bundle.txt";
constexpr const char* kUserItemFile = "user_item.txt";
constexpr const char* kBundleItemFile = "bundle_item.txt";

void check_range(const Relation& rel, std::size_t left, std::size_t right, const char* what) {
  for (const auto& [a, b] : rel) {
    if (a >= left || b >= right) {
      throw DatasetError(std::string(what) + ": pair (" + std::to_string(a) + ", " +
                         std::to_string(b) + ") out of declared range " + std::to_string(left) +
                         "x" + std::to_string(right));
    }
  }
}

void require_file(const fs::path& file) {
  if (!fs::exists(file)) throw DatasetError("missing file: " + file.string());
}

// Draws `count` distinct ids. Each draw comes from `block` with probability
// 1 - noise, otherwise uniformly from the whole id space.
std::vector<Id> draw_community(std::mt19937_64& rng, std::size_t count, std::size_t total,
                               std::size_t block, std::size_t block_size, double noise) {
  std::bernoulli_distribution cross(noise);
  std::uniform_int_distribution<std::size_t> any(0, total - 1);
  std::uniform_int_distribution<std::size_t> local(0, block_size - 1);
  std::vector<Id> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t id = cross(rng) ? any(rng) : block * block_size + local(rng);
    if (std::find(out.begin(), out.end(), static_cast<Id>(id)) == out.end()) {
      out.push_back(static_cast<Id>(id));
    }
  }
  return out;
}

}  // namespace

void normalize_relation(Relation& rel) {
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
}

void validate(const BundleDataset& ds) {
  check_range(ds.user_bundle, ds.num_users, ds.num_bundles, "user_bundle");
  check_range(ds.user_item, ds.num_users, ds.num_items, "user_item");
  check_range(ds.bundle_item, ds.num_bundles, ds.num_items, "bundle_item");
  for (const Relation* rel : {&ds.user_bundle, &ds.user_item, &ds.bundle_item}) {
    if (!std::is_sorted(rel->begin(), rel->end()) ||
        std::adjacent_find(rel->begin(), rel->end()) != rel->end()) {
      throw DatasetError("relation is not sorted and duplicate-free");
    }
  }
  std::vector<char> has_items(ds.num_bundles, 0);
  for (const auto& [b, i] : ds.bundle_item) has_items[b] = 1;
  for (const auto& [u, b] : ds.user_bundle) {
    if (!has_items[b]) {
      throw DatasetError("bundle " + std::to_string(b) +
                         " appears in user_bundle but has no items in bundle_item");
    }
  }
}

Relation read_pairs(const fs::path& file) {
  require_file(file);
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  Relation rel;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long a = -1, b = -1;
    if (!(ls >> a >> b) || a < 0 || b < 0 || a > UINT32_MAX || b > UINT32_MAX) {
      throw DatasetError(file.string() + ":" + std::to_string(lineno) + ": malformed pair '" +
                         line + "'");
    }
    rel.emplace_back(static_cast<Id>(a), static_cast<Id>(b));
  }
  normalize_relation(rel);
  return rel;
}

void write_pairs(const Relation& rel, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + file.string());
  for (const auto& [a, b] : rel) out << a << '\t' << b << '\n';
}

BundleDataset load_dataset(const fs::path& root, const std::string& name) {
  BundleDataset ds = load_dataset(root / name);
  ds.name = name;
  return ds;
}

BundleDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DatasetError("dataset directory not found: " + dir.string());
  const fs::path size_file = dir / kSizeFile;
  require_file(size_file);
  std::ifstream in(size_file);
  long long m = -1, n = -1, o = -1;
  if (!(in >> m >> n >> o) || m < 0 || n < 0 || o < 0) {
    throw DatasetError(size_file.string() + ": expected 'M<TAB>N<TAB>O'");
  }
  BundleDataset ds;
  ds.name = dir.filename().string();
  ds.num_users = static_cast<std::size_t>(m);
  ds.num_bundles = static_cast<std::size_t>(n);
  ds.num_items = static_cast<std::size_t>(o);
  ds.user_bundle = read_pairs(dir / kUserBundleFile);
  ds.user_item = read_pairs(dir / kUserItemFile);
  ds.bundle_item = read_pairs(dir / kBundleItemFile);
  validate(ds);
  return ds;
}

void write_dataset(const BundleDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / kSizeFile, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + (dir / kSizeFile).string());
    out << ds.num_users << '\t' << ds.num_bundles << '\t' << ds.num_items << '\n';
  }
  write_pairs(ds.user_bundle, dir / kUserBundleFile);
  write_pairs(ds.user_item, dir / kUserItemFile);
  write_pairs(ds.bundle_item, dir / kBundleItemFile);
}

SplitDataset split(const BundleDataset& ds, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw std::invalid_argument("split ratios must all be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const std::size_t n = ds.user_bundle.size();
  // The epsilon keeps exact products such as 10 * 0.1 from flooring below.
  const auto part = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  const std::size_t n_val = part(ratios.validation);
  const std::size_t n_test = part(ratios.test);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitDataset sd;
  sd.base = ds;
  for (std::size_t k = 0; k < n; ++k) {
    const Pair& p = ds.user_bundle[order[k]];
    if (k < n_val) {
      sd.validation.push_back(p);
    } else if (k < n_val + n_test) {
      sd.test.push_back(p);
    } else {
      sd.train.push_back(p);
    }
  }
  normalize_relation(sd.train);
  normalize_relation(sd.validation);
  normalize_relation(sd.test);
  return sd;
}

void write_split(const SplitDataset& sd, const fs::path& dir) {
  fs::create_directories(dir);
  write_pairs(sd.train, dir / "train.txt");
  write_pairs(sd.validation, dir / "tune.txt");
  write_pairs(sd.test, dir / "test.txt");
}

bool has_split_files(const fs::path& dir) {
  return fs::exists(dir / "train.txt") && fs::exists(dir / "tune.txt") &&
         fs::exists(dir / "test.txt");
}

SplitDataset load_split(const BundleDataset& ds, const fs::path& dir) {
  SplitDataset sd;
  sd.base = ds;
  sd.train = read_pairs(dir / "train.txt");
  sd.validation = read_pairs(dir / "tune.txt");
  sd.test = read_pairs(dir / "test.txt");
  Relation all;
  all.reserve(sd.train.size() + sd.validation.size() + sd.test.size());
  for (const Relation* r : {&sd.train, &sd.validation, &sd.test}) {
    all.insert(all.end(), r->begin(), r->end());
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw DatasetError("split files in " + dir.string() + " are not disjoint");
  }
  if (all != ds.user_bundle) {
    throw DatasetError("split files in " + dir.string() + " do not cover user_bundle exactly");
  }
  return sd;
}

std::size_t synthetic_block(std::size_t id, std::size_t count, std::size_t blocks) {
  return id / (count / blocks);
}

BundleDataset generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0)) {
    throw std::invalid_argument("noise_rate must lie in [0, 1]");
  }
  if (spec.blocks == 0 || spec.users == 0 || spec.bundles == 0 || spec.items == 0 ||
      spec.users % spec.blocks || spec.bundles % spec.blocks || spec.items % spec.blocks) {
    throw std::invalid_argument("blocks must be positive and divide users, bundles and items");
  }
  if (spec.bundles < 2) throw std::invalid_argument("need at least two bundles");

  const std::size_t user_block = spec.users / spec.blocks;
  const std::size_t bundle_block = spec.bundles / spec.blocks;
  const std::size_t item_block = spec.items / spec.blocks;
  // Clamp so that distinct draws always terminate and every user keeps at
  // least one non-interacted bundle.
  const std::size_t per_bundle = std::clamp<std::size_t>(spec.items_per_bundle, 1, item_block);
  const std::size_t per_user_b =
      std::clamp<std::size_t>(spec.bundles_per_user, 1, std::min(bundle_block, spec.bundles - 1));
  const std::size_t per_user_i = std::min(spec.items_per_user, item_block);

  std::mt19937_64 rng(spec.seed);
  BundleDataset ds;
  ds.name = "synthetic";
  ds.num_users = spec.users;
  ds.num_bundles = spec.bundles;
  ds.num_items = spec.items;

  for (std::size_t b = 0; b < spec.bundles; ++b) {
    const std::size_t block = b / bundle_block;
    for (Id i : draw_community(rng, per_bundle, spec.items, block, item_block, spec.noise_rate)) {
      ds.bundle_item.emplace_back(static_cast<Id>(b), i);
    }
  }
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::size_t block = u / user_block;
    for (Id b :
         draw_community(rng, per_user_b, spec.bundles, block, bundle_block, spec.noise_rate)) {
      ds.user_bundle.emplace_back(static_cast<Id>(u), b);
    }
    if (per_user_i > 0) {
      for (Id i :
           draw_community(rng, per_user_i, spec.items, block, item_block, spec.noise_rate)) {
        ds.user_item.emplace_back(static_cast<Id>(u), i);
      }
    }
  }
  normalize_relation(ds.user_bundle);
  normalize_relation(ds.user_item);
  normalize_relation(ds.bundle_item);
  validate(ds);
  return ds;
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) parts.push_back(tok);
  if (parts.size() != 5) {
    throw std::invalid_argument("synthetic spec must be users,bundles,items,blocks,noise: '" +
                                text + "'");
  }
  SyntheticSpec spec;
  try {
    spec.users = std::stoul(parts[0]);
    spec.bundles = std::stoul(parts[1]);
    spec.items = std::stoul(parts[2]);
    spec.blocks = std::stoul(parts[3]);
    spec.noise_rate = std::stod(parts[4]);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed synthetic spec '" + text + "'");
  }
  return spec;
}

std::uint64_t checksum(const BundleDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(ds.num_users);
  feed(ds.num_bundles);
  feed(ds.num_items);
  for (const Relation* rel : {&ds.user_bundle, &ds.user_item, &ds.bundle_item}) {
    feed(rel->size());
    for (const auto& [a, b] : *rel) feed((std::uint64_t{a} << 32) | b);
  }
  return h;
}

std::vector<std::vector<Id>> group_by_left(const Relation& rel, std::size_t left_count) {
  std::vector<std::vector<Id>> out(left_count);
  for (const auto& [a, b] : rel) out[a].push_back(b);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::vector<Id>> bundle_items(const BundleDataset& ds) {
  return group_by_left(ds.bundle_item, ds.num_bundles);
}

}  // namespace crosscbr
