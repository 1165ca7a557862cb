#include <doctest.h>

#include <fstream>
#include <random>

#include "dsprof/storage.hpp"
#include "support.hpp"

using namespace dsprof;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::parse;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Dataset with a regular mapped vector, an irregular nested block and a
/// token sequence, plus one numeric label.
InMemoryDataset mapped_dataset(std::size_t rows, std::uint64_t seed) {
  InMemoryDataset data;
  auto& s = data.schema;
  s.name = "mapped";
  s.features.push_back({ComponentKind::space, {SubFeature{"profile", Dimension::exactly(3), ValueClass::numeric, {}}}});
  s.features.push_back({ComponentKind::space_time,
                        {SubFeature{"atoms", Dimension::between(1, 30), ValueClass::numeric, {1, 2}},
                         SubFeature{"notes", Dimension::between(1, 8), ValueClass::token_sequence, {}},
                         testing::scalar("x")}});
  s.labels.push_back({ComponentKind::space_time, {testing::scalar("y")}});
  s.mappings = {{"profile", "profile.csv", true}, {"atoms", "atoms.json", false}, {"notes", "notes.json", false}};
  s.tables = {{"train", "train.csv"}, {"test", "test.csv"}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0, 1e3);
  SideStore profile(true), atoms(false), notes(false);
  for (const char* split : {"train", "test"}) {
    DataFrameSlice slice;
    slice.split = split;
    slice.rows = rows;
    slice.names = {"profile", "atoms", "notes", "x", "y"};
    TextColumn p_ids, a_ids, n_ids;
    Eigen::VectorXd x(static_cast<Eigen::Index>(rows)), y(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string id = std::string(split) + "-" + std::to_string(r);
      // Identifiers with commas and quotes exercise CSV quoting.
      const std::string pid = "p," + id + "\"q\"";
      profile.insert(pid, Eigen::VectorXd(Eigen::Vector3d(normal(rng), normal(rng), 1.0 / 3.0)));
      Eigen::MatrixXd a(1 + static_cast<Eigen::Index>(rng() % 6), 3);
      for (Eigen::Index i = 0; i < a.rows(); ++i) a.row(i) << double(rng() % 9), normal(rng), normal(rng) * 1e-9;
      atoms.insert(id, a);
      std::vector<Token> tokens;
      for (std::size_t k = 0; k <= rng() % 4; ++k) {
        tokens.push_back({static_cast<std::int64_t>(k * 10), static_cast<std::int64_t>(k * 10 + 3), "w\"ord, " + std::to_string(rng() % 100) + "\n"});
      }
      notes.insert(id, tokens);
      p_ids.push_back(pid);
      a_ids.push_back(id);
      n_ids.push_back(id);
      x(static_cast<Eigen::Index>(r)) = normal(rng);
      y(static_cast<Eigen::Index>(r)) = std::nextafter(normal(rng), 0.0);
    }
    slice.columns = {p_ids, a_ids, n_ids, x, y};
    data.tables[split] = slice;
  }
  data.side_stores = {{"profile", profile}, {"atoms", atoms}, {"notes", notes}};
  return data;
}

}  // namespace

TEST_CASE("CSV quoting round trip") {
  testing::TempDir dir;
  const auto path = dir / "q.csv";
  const std::vector<std::vector<std::string>> rows{
      {"a", "b", "c"}, {"plain", "with,comma", "with \"quote\""}, {"multi\nline", "", "\r\n"}, {"x", "y", "z"}};
  {
    CsvWriter w(path);
    for (const auto& r : rows) w.write_row(r);
    w.close();
  }
  CsvReader reader(path);
  CHECK(reader.header() == rows[0]);
  std::vector<std::string> fields;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(reader.next(fields));
    CHECK(fields == rows[i]);
    CHECK(reader.row_index() == i - 1);
  }
  CHECK_FALSE(reader.next(fields));
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("plain") == "plain");

  write_text(dir / "bad.csv", "a,b\n\"open,1\n");
  CsvReader bad(dir / "bad.csv");
  CHECK(kind_of([&] { bad.next(fields); }) == ErrorKind::parse);
}

TEST_CASE("doubles round trip through text") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double v = std::bit_cast<double>(bits(rng));
    if (!std::isfinite(v)) continue;
    double back = 0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  double out = 0;
  CHECK_FALSE(parse_double("", out));
  CHECK_FALSE(parse_double("1.5x", out));
  CHECK(parse_double("-2e3", out));
  CHECK(out == -2000.0);
}

TEST_CASE("datasets with side stores round trip") {
  testing::TempDir dir;
  const auto data = mapped_dataset(40, 7);
  write_dataset(data, dir.path());
  const auto ds = Dataset::open(dir / "manifest.json");
  CHECK(ds.split_names() == std::vector<std::string>{"train", "test"});
  CHECK(ds.row_count("train") == 40);
  CHECK(ds.total_rows() == 80);

  for (const char* split : {"train", "test"}) {
    const auto slice = read_split(ds, split);
    const auto& original = data.tables.at(split);
    CHECK(slice.rows == original.rows);
    CHECK(slice.numeric("x") == original.numeric("x"));
    CHECK(slice.numeric("y") == original.numeric("y"));
    CHECK(slice.text("profile") == original.text("profile"));
    for (const char* column : {"atoms", "notes", "profile"}) {
      const auto& stored = ds.side_store(column);
      const auto& given = data.side_stores.at(column);
      CHECK(stored.ids() == given.ids());
      for (const auto& id : given.ids()) CHECK(blocks_equal(stored.at(id), given.at(id)));
    }
  }
}

TEST_CASE("streaming batches reassemble the table") {
  testing::TempDir dir;
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd m = testing::random_matrix(rng, 257, 3);
  const auto ds = Dataset::open(testing::write_numeric(dir.path(), "n", {{"train", m}}, 2));
  for (std::size_t batch : {1, 7, 256, 257, 1000}) {
    auto stream = ds.stream("train", batch);
    std::size_t seen = 0;
    while (auto slice = stream.next()) {
      CHECK(slice->first_row == seen);
      CHECK(slice->rows <= batch);
      const auto block = numeric_matrix(ds, *slice, Target::joint);
      CHECK(block == m.middleRows(static_cast<Eigen::Index>(seen), static_cast<Eigen::Index>(slice->rows)));
      seen += slice->rows;
    }
    CHECK(seen == 257);
  }
  CHECK(kind_of([&] { ds.stream("train", 0); }) == ErrorKind::configuration);
  CHECK(kind_of([&] { ds.stream("nope", 1); }) == ErrorKind::not_found);
  CHECK(numeric_column_names(ds, Target::features) == std::vector<std::string>{"x0", "x1"});
  CHECK(numeric_column_names(ds, Target::labels) == std::vector<std::string>{"y0"});
}

TEST_CASE("eager and deferred mapping resolution agree") {
  testing::TempDir dir;
  const auto data = mapped_dataset(25, 11);
  write_dataset(data, dir.path());
  const auto ds = Dataset::open(dir / "manifest.json");
  const auto slice = read_split(ds, "test");

  const auto eager = resolve_eager(slice, "profile", ds.side_store("profile"));
  CHECK(eager.has("profile_0"));
  CHECK(eager.has("profile_2"));
  CHECK_FALSE(eager.has("profile"));
  const auto deferred = resolve_deferred(slice, "profile", ds.side_store("profile"));
  REQUIRE(deferred.size() == 25);
  for (std::size_t r = 0; r < 25; ++r) {
    const auto& v = std::get<Eigen::VectorXd>(deferred.at(r));
    CHECK(v(0) == eager.numeric("profile_0")(static_cast<Eigen::Index>(r)));
    CHECK(v(2) == eager.numeric("profile_2")(static_cast<Eigen::Index>(r)));
  }

  const auto atoms = resolve_eager(slice, "atoms", ds.side_store("atoms"));
  const auto& blocks = atoms.blocks("atoms");
  const auto cursor = std::get<MappingCursor>(resolve_mapping(slice, "atoms", ds.side_store("atoms"), MappingMode::deferred));
  for (std::size_t r = 0; r < 25; ++r) CHECK(blocks_equal(blocks[r], cursor.at(r)));

  CHECK(kind_of([&] { numeric_column_names(ds, Target::features); }) == ErrorKind::unsupported_feature);
}

TEST_CASE("unknown identifiers are dangling references") {
  testing::TempDir dir;
  auto data = mapped_dataset(5, 2);
  std::get<TextColumn>(data.tables["train"].columns[1])[3] = "missing-id";
  write_dataset(data, dir.path());
  const auto ds = Dataset::open(dir / "manifest.json");
  const auto slice = read_split(ds, "train");
  CHECK(kind_of([&] { resolve_eager(slice, "atoms", ds.side_store("atoms")); }) == ErrorKind::dangling_reference);
  CHECK(kind_of([&] { resolve_deferred(slice, "atoms", ds.side_store("atoms")); }) == ErrorKind::dangling_reference);
  CHECK(message_of([&] { ds.side_store("atoms").at("missing-id"); }).find("missing-id") != std::string::npos);
}

TEST_CASE("malformed tables are rejected") {
  testing::TempDir dir;
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const auto manifest = testing::write_numeric(dir.path(), "n", {{"train", m}}, 1);

  write_text(dir / "train.csv", "x0,zz\n1,2\n");
  CHECK(kind_of([&] { Dataset::open(manifest); }) == ErrorKind::schema_mismatch);

  write_text(dir / "train.csv", "x0,y0\n1,2\n3\n");
  CHECK(kind_of([&] { Dataset::open(manifest); }) == ErrorKind::schema_mismatch);

  write_text(dir / "train.csv", "y0,x0\n1,2\nabc,4\n");
  const auto ds = Dataset::open(manifest);
  const auto msg = message_of([&] { read_split(ds, "train"); });
  CHECK(msg.find("row 1") != std::string::npos);
  CHECK(msg.find("column y0") != std::string::npos);
  CHECK(kind_of([&] { read_split(ds, "train"); }) == ErrorKind::parse);

  // Columns may appear in any order.
  write_text(dir / "train.csv", "y0,x0\n1,2\n");
  const auto swapped = read_split(Dataset::open(manifest), "train");
  CHECK(swapped.numeric("x0")(0) == 2.0);

  std::filesystem::remove(dir / "train.csv");
  CHECK(kind_of([&] { Dataset::open(manifest); }) == ErrorKind::not_found);
  write_text(dir / "manifest.json", "{\"features\": [");
  CHECK(kind_of([&] { Dataset::open(manifest); }) == ErrorKind::parse);
}

TEST_CASE("regular side stores enforce one width") {
  SideStore s(true);
  s.insert("a", Eigen::VectorXd(Eigen::Vector2d(1, 2)));
  CHECK(s.width() == 2);
  CHECK(kind_of([&] { s.insert("b", Eigen::VectorXd(Eigen::Vector3d(1, 2, 3))); }) == ErrorKind::shape);
  CHECK(kind_of([&] { s.insert("a", Eigen::VectorXd(Eigen::Vector2d(1, 2))); }) == ErrorKind::schema);
  CHECK(block_length(SideBlock{std::vector<Token>{{0, 1, "a"}, {2, 3, "b"}}}) == 2);
}
