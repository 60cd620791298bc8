#include <doctest.h>

#include <fstream>
#include <set>

#include "crosscbr/dataset.hpp"
#include "crosscbr/errors.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

using namespace crosscbr;
using crosscbr::testing::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

void write_tiny(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "size.txt", "3\t2\t5\n");
  write_file(dir / "user_bundle.txt", "0\t1\n2\t0\n0\t1\n");
  write_file(dir / "user_item.txt", "");
  write_file(dir / "bundle_item.txt", "0\t4\n1\t0\n1\t2\n");
}

std::set<Pair> as_set(const Relation& r) { return {r.begin(), r.end()}; }

}  // namespace

TEST_CASE("loader deduplicates pairs and accepts an empty user-item file") {
  TempDir tmp;
  write_tiny(tmp / "tiny");
  const BundleDataset ds = load_dataset(tmp.path(), "tiny");
  CHECK(ds.name == "tiny");
  CHECK(ds.num_users == 3);
  CHECK(ds.num_bundles == 2);
  CHECK(ds.num_items == 5);
  CHECK(ds.user_bundle == Relation{{0, 1}, {2, 0}});
  CHECK(ds.user_item.empty());
  CHECK(ds.bundle_item.size() == 3);
}

TEST_CASE("loader errors name the offending file") {
  TempDir tmp;
  write_tiny(tmp / "tiny");
  std::filesystem::remove(tmp / "tiny" / "bundle_item.txt");
  try {
    load_dataset(tmp / "tiny");
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("bundle_item.txt") != std::string::npos);
  }
}

TEST_CASE("loader rejects out-of-range ids, malformed lines and itemless bundles") {
  TempDir tmp;
  write_tiny(tmp / "a");
  write_file(tmp / "a" / "user_bundle.txt", "0\t2\n");
  CHECK_THROWS_AS(load_dataset(tmp / "a"), DatasetError);

  write_tiny(tmp / "b");
  write_file(tmp / "b" / "user_item.txt", "0 x\n");
  CHECK_THROWS_AS(load_dataset(tmp / "b"), DatasetError);

  write_tiny(tmp / "c");
  write_file(tmp / "c" / "bundle_item.txt", "1\t0\n");
  CHECK_THROWS_AS(load_dataset(tmp / "c"), DatasetError);

  CHECK_THROWS_AS(load_dataset(tmp / "missing"), DatasetError);
}

TEST_CASE("write/load round trip") {
  TempDir tmp;
  std::mt19937_64 rng(3);
  BundleDataset ds = crosscbr::testing::random_dataset(7, 6, 9, 0.3, rng);
  ds.name = "rt";
  write_dataset(ds, tmp / "rt");
  CHECK(load_dataset(tmp / "rt") == ds);
}

TEST_CASE("split sizes follow floor arithmetic with the remainder in train") {
  BundleDataset ds;
  ds.num_users = 10;
  ds.num_bundles = 1;
  ds.num_items = 1;
  for (Id u = 0; u < 10; ++u) ds.user_bundle.emplace_back(u, 0);
  ds.bundle_item = {{0, 0}};
  const SplitDataset sd = split(ds, {0.7, 0.1, 0.2}, 1);
  CHECK(sd.train.size() == 7);
  CHECK(sd.validation.size() == 1);
  CHECK(sd.test.size() == 2);

  BundleDataset big;
  big.num_users = 51377;
  big.num_bundles = 1;
  big.num_items = 1;
  for (Id u = 0; u < 51377; ++u) big.user_bundle.emplace_back(u, 0);
  big.bundle_item = {{0, 0}};
  const SplitDataset bs = split(big, {0.7, 0.1, 0.2}, 5);
  CHECK(bs.train.size() == 35965);
  CHECK(bs.validation.size() == 5137);
  CHECK(bs.test.size() == 10275);
}

TEST_CASE("split is a deterministic partition") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const BundleDataset ds = crosscbr::testing::random_dataset(9, 8, 5, 0.4, rng);
    const SplitDataset a = split(ds, {0.7, 0.1, 0.2}, trial);
    const SplitDataset b = split(ds, {0.7, 0.1, 0.2}, trial);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);

    std::set<Pair> all;
    for (const auto* part : {&a.train, &a.validation, &a.test}) {
      for (const auto& p : *part) CHECK(all.insert(p).second);
      CHECK(std::is_sorted(part->begin(), part->end()));
    }
    CHECK(all == as_set(ds.user_bundle));
  }
}

TEST_CASE("split rejects bad ratios") {
  BundleDataset ds;
  CHECK_THROWS_AS(split(ds, {0.7, 0.1, 0.1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, {0.9, 0.0, 0.1}, 1), std::invalid_argument);
}

TEST_CASE("split files round trip and are validated") {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const BundleDataset ds = crosscbr::testing::random_dataset(8, 6, 5, 0.5, rng);
  const SplitDataset sd = split(ds, {0.7, 0.1, 0.2}, 9);
  write_split(sd, tmp.path());
  CHECK(has_split_files(tmp.path()));
  const SplitDataset back = load_split(ds, tmp.path());
  CHECK(back.train == sd.train);
  CHECK(back.validation == sd.validation);
  CHECK(back.test == sd.test);

  Relation partial = sd.train;
  partial.pop_back();
  write_pairs(partial, tmp / "train.txt");
  CHECK_THROWS_AS(load_split(ds, tmp.path()), DatasetError);
}

TEST_CASE("synthetic generator satisfies the dataset invariants") {
  SyntheticSpec spec;
  const BundleDataset ds = generate_synthetic(spec);
  CHECK(ds.num_users == 100);
  CHECK(ds.num_bundles == 50);
  CHECK(ds.num_items == 200);
  CHECK_NOTHROW(validate(ds));
  CHECK(generate_synthetic(spec) == ds);
  spec.seed = 8;
  CHECK_FALSE(generate_synthetic(spec) == ds);
}

TEST_CASE("synthetic noise rate controls the within-block share") {
  const auto within_rate = [](double noise) {
    SyntheticSpec spec;
    spec.users = 1000;
    spec.bundles = 500;
    spec.items = 1000;
    spec.noise_rate = noise;
    const BundleDataset ds = generate_synthetic(spec);
    std::size_t within = 0;
    for (const auto& [u, b] : ds.user_bundle) {
      within += synthetic_block(u, spec.users, spec.blocks) ==
                synthetic_block(b, spec.bundles, spec.blocks);
    }
    return static_cast<double>(within) / static_cast<double>(ds.user_bundle.size());
  };
  CHECK(within_rate(0.0) == 1.0);
  CHECK(within_rate(1.0) == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("synthetic spec parsing") {
  const SyntheticSpec s = parse_synthetic_spec("100,50,200,5,0.1");
  CHECK(s.users == 100);
  CHECK(s.bundles == 50);
  CHECK(s.items == 200);
  CHECK(s.blocks == 5);
  CHECK(s.noise_rate == 0.1);
  CHECK_THROWS_AS(parse_synthetic_spec("100,50,200"), std::invalid_argument);
  CHECK_THROWS_AS(parse_synthetic_spec("100,50,x,5,0.1"), std::invalid_argument);
  SyntheticSpec bad;
  bad.blocks = 3;
  CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
}

TEST_CASE("checksum is sensitive to content") {
  SyntheticSpec spec;
  BundleDataset ds = generate_synthetic(spec);
  const auto c = checksum(ds);
  CHECK(checksum(ds) == c);
  ds.user_item.pop_back();
  CHECK(checksum(ds) != c);
}
