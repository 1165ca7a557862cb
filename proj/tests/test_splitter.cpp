#include <doctest.h>

#include <array>
#include <fstream>
#include <random>
#include <set>

#include "dsprof/splitter.hpp"
#include "support.hpp"

using namespace dsprof;

using testing::write_grid;

TEST_CASE("union of 20% sites and 15% times holds out 32% of the grid") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 10, 100));
  SplitSpec spec;
  spec.spatial_fraction = 0.2;
  spec.temporal_fraction = 0.15;
  const auto a = assign_splits(ds, spec);
  const auto report = verify_ood(a, ds);
  CHECK(a.sampled.spatial.size() == 2);
  CHECK(a.sampled.temporal[0].size() == 15);
  CHECK(report.counts[0] == 680);
  CHECK(report.counts[1] + report.counts[2] == 320);
  CHECK(report.shares[1] + report.shares[2] == doctest::Approx(0.32));

  spec.combination = Combination::intersection_of;
  const auto i = assign_splits(ds, spec);
  CHECK(i.counts()[0] == 1000 - 30);
  CHECK_NOTHROW(verify_ood(i, ds));
}

TEST_CASE("fractions of zero keep everything in train") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 3, 10));
  const auto a = assign_splits(ds, SplitSpec{});
  CHECK(a.counts()[0] == 30);
  CHECK(a.warnings.empty());
}

TEST_CASE("a larger fraction samples a superset") {
  std::vector<std::string> sites;
  for (int i = 0; i < 200; ++i) sites.push_back("s" + std::to_string(i));
  std::vector<double> times;
  for (int i = 0; i < 300; ++i) times.push_back(i * 0.5);
  SplitSpec small;
  small.spatial_fraction = 0.1;
  small.temporal_fraction = 0.1;
  small.seed = 77;
  SplitSpec large = small;
  large.spatial_fraction = 0.4;
  large.temporal_fraction = 0.3;
  const auto a = sample_coordinates(sites, {times}, small);
  const auto b = sample_coordinates(sites, {times}, large);
  CHECK(a.spatial.size() == 20);
  CHECK(b.spatial.size() == 80);
  CHECK(std::includes(b.spatial.begin(), b.spatial.end(), a.spatial.begin(), a.spatial.end()));
  CHECK(std::includes(b.temporal[0].begin(), b.temporal[0].end(), a.temporal[0].begin(), a.temporal[0].end()));

  large.seed = 78;
  CHECK(sample_coordinates(sites, {times}, large).spatial != b.spatial);
}

TEST_CASE("temporal blocks are contiguous") {
  std::vector<double> times;
  for (int i = 0; i < 100; ++i) times.push_back(i);
  SplitSpec spec;
  spec.temporal_fraction = 0.2;
  spec.temporal_block = 7;
  const auto s = sample_coordinates({}, {times}, spec);
  // ceil(20 / 7) = 3 whole blocks; the last block of the domain holds only 2 values.
  CHECK(s.temporal[0].size() >= 15);
  CHECK(s.temporal[0].size() <= 21);
  for (double v : s.temporal[0]) {
    const int block = static_cast<int>(v) / 7;
    for (int j = block * 7; j < std::min(100, block * 7 + 7); ++j) {
      CHECK(std::binary_search(s.temporal[0].begin(), s.temporal[0].end(), double(j)));
    }
  }
}

TEST_CASE("empty domains and bad fractions") {
  SplitSpec spec;
  spec.spatial_fraction = 0.5;
  try {
    sample_coordinates({}, {}, spec);
    FAIL("expected empty-domain");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_domain);
  }
  spec.spatial_fraction = 1.5;
  CHECK_THROWS_AS(validate_split_spec(spec), Error);
}

TEST_CASE("all-held-out split warns") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 4, 5));
  SplitSpec spec;
  spec.spatial_fraction = 1.0;
  const auto a = assign_splits(ds, spec);
  CHECK(a.counts()[0] == 0);
  REQUIRE(a.warnings.size() == 1);
  CHECK(a.warnings[0].find("no training points") != std::string::npos);
}

TEST_CASE("a moved point is reported as leakage") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 10, 20));
  SplitSpec spec;
  spec.spatial_fraction = 0.3;
  auto a = assign_splits(ds, spec);
  std::size_t moved = 0;
  for (std::size_t r = 0; r < a.labels[0].size(); ++r) {
    if (a.labels[0][r] != SplitLabel::train) {
      a.labels[0][r] = SplitLabel::train;
      moved = r;
      break;
    }
  }
  try {
    verify_ood(a, ds);
    FAIL("expected leakage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::leakage);
    CHECK(std::string(e.what()).find("row " + std::to_string(moved)) != std::string::npos);
  }
}

TEST_CASE("assignment is independent of threads and batching") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 13, 57, 3));
  SplitSpec spec;
  spec.spatial_fraction = 0.25;
  spec.temporal_fraction = 0.1;
  spec.seed = 5;
  const auto a = assign_splits(ds, spec, 1, 4096);
  const auto b = assign_splits(ds, spec, 4, 17);
  CHECK(a.labels == b.labels);
  CHECK(a.sampled.spatial == b.sampled.spatial);
  CHECK(a.sources.size() == 3);
}

TEST_CASE("val and test split the held-out points") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 20, 50));
  SplitSpec spec;
  spec.spatial_fraction = 0.5;
  spec.val_ratio = 0.0;
  CHECK(assign_splits(ds, spec).counts()[1] == 0);
  spec.val_ratio = 1.0;
  CHECK(assign_splits(ds, spec).counts()[2] == 0);
  spec.val_ratio = 0.5;
  const auto c = assign_splits(ds, spec).counts();
  CHECK(c[1] + c[2] == 500);
  CHECK(c[1] > 150);
  CHECK(c[2] > 150);
}

TEST_CASE("forced coordinates are always held out") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir.path(), 5, 10));
  SplitSpec spec;
  spec.forced_spatial = {"3"};
  spec.forced_temporal["t"] = {0.0, 1.0};
  const auto a = assign_splits(ds, spec);
  // site 3: 10 points; times 0 and 1 at the other 4 sites: 8 points.
  CHECK(a.size() - a.counts()[0] == 18);
  spec.forced_temporal["nope"] = {1.0};
  CHECK_THROWS_AS(assign_splits(ds, spec), Error);
}

TEST_CASE("written and materialized splits") {
  testing::TempDir dir;
  const auto ds = Dataset::open(write_grid(dir / "in", 6, 30));
  SplitSpec spec;
  spec.spatial_fraction = 0.34;
  spec.seed = 3;
  const auto a = assign_splits(ds, spec);
  write_assignment(a, dir / "out");
  std::ifstream csv(dir / "out" / "assignment.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "source,row,split");
  std::ifstream meta(dir / "out" / "assignment.json");
  const auto j = nlohmann::json::parse(meta);
  CHECK(j["spec"]["seed"] == 3);
  CHECK(j["sampled"]["spatial"].size() == 2);

  const auto manifest = materialize_splits(a, ds, dir / "split");
  const auto split = Dataset::open(manifest);
  const auto counts = a.counts();
  CHECK(split.row_count("train") == counts[0]);
  CHECK(split.row_count("val") == counts[1]);
  CHECK(split.row_count("test") == counts[2]);
  REQUIRE(split.schema().shares.has_value());
  CHECK(split.schema().shares->train == doctest::Approx(counts[0] / 180.0));
  // No site appears in both train and a held-out table.
  std::set<double> train_sites, held_sites;
  for (const char* name : {"train", "val", "test"}) {
    const auto slice = read_split(split, name);
    for (double v : slice.numeric("site")) (std::string(name) == "train" ? train_sites : held_sites).insert(v);
  }
  for (double v : held_sites) CHECK_FALSE(train_sites.contains(v));
}
