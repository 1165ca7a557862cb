#include <doctest.h>

#include <random>

#include "dsprof/data_model.hpp"
#include "dsprof/error.hpp"
#include "support.hpp"

using namespace dsprof;

namespace {

bool mentions(const std::vector<std::string>& messages, const std::string& needle) {
  return std::any_of(messages.begin(), messages.end(),
                     [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

DatasetSchema example_schema() {
  DatasetSchema s;
  s.name = "example";
  s.features.push_back({ComponentKind::space_time, {testing::scalar("load"), SubFeature{"spectrum", Dimension::exactly(3), ValueClass::numeric, {}}}});
  s.features.push_back({ComponentKind::time, {testing::scalar("t")}});
  s.features.push_back({ComponentKind::space, {SubFeature{"cell", Dimension::exactly(2), ValueClass::one_hot, {}}}});
  s.labels.push_back({ComponentKind::space_time, {testing::scalar("y")}});
  s.coordinates = {{"t"}, {"site"}};
  s.shares = SplitShares{0.6, 0.2, 0.2};
  s.tables = {{"train", "train.csv"}, {"val", "val.csv"}, {"test", "test.csv"}};
  return s;
}

}  // namespace

TEST_CASE("a well-formed schema has no violations") {
  CHECK(validate_schema(example_schema()).empty());
}

TEST_CASE("schema violations name the offending field") {
  DatasetSchema empty;
  CHECK(mentions(validate_schema(empty), "features: at least one feature component required"));

  auto s = example_schema();
  s.shares = SplitShares{0.6, 0.3, 0.2};
  CHECK(mentions(validate_schema(s), "split_shares: split shares sum to 1.1"));

  s = example_schema();
  s.features[0].sub_features[0].dimension = Dimension::between(0, 3);
  CHECK(mentions(validate_schema(s), "features.load: dimension must be positive"));

  s = example_schema();
  s.features[0].sub_features[1].dimension = Dimension::between(1, 30);
  CHECK(mentions(validate_schema(s), "variable-length sub-features must be mapped to a side store"));
  s.mappings.push_back({"spectrum", "spectrum.csv", true});
  CHECK(mentions(validate_schema(s), "needs an irregular side store"));
  s.mappings.back().regular = false;
  CHECK(validate_schema(s).empty());

  s = example_schema();
  s.features[0].sub_features[0].value_class = ValueClass::token_sequence;
  CHECK(mentions(validate_schema(s), "token sequences must be mapped"));

  s = example_schema();
  s.features.push_back({ComponentKind::time, {testing::scalar("t2")}});
  CHECK(mentions(validate_schema(s), "more than one time component"));

  s = example_schema();
  s.labels[0].sub_features.push_back(testing::scalar("load"));
  CHECK(mentions(validate_schema(s), "sub-feature load: declared more than once"));

  s = example_schema();
  s.mappings.push_back({"ghost", "ghost.json", false});
  CHECK(mentions(validate_schema(s), "mappings.ghost: no sub-feature with this name"));
}

TEST_CASE("manifest round trip") {
  const auto s = example_schema();
  const auto text = dump_schema(s);
  const auto back = parse_schema(text);
  CHECK(back.name == s.name);
  CHECK(back.tables == s.tables);
  CHECK(back.coordinates.time == s.coordinates.time);
  CHECK(back.coordinates.space == s.coordinates.space);
  REQUIRE(back.shares.has_value());
  CHECK(back.shares->train == 0.6);
  REQUIRE(back.features.size() == 3);
  CHECK(back.features[0].sub_features[1].dimension == Dimension::exactly(3));
  CHECK(back.features[2].sub_features[0].value_class == ValueClass::one_hot);
  CHECK(dump_schema(back) == text);

  auto ranged = example_schema();
  ranged.features[0].sub_features.push_back(SubFeature{"atoms", Dimension::between(2, 40), ValueClass::numeric, {1, 3}});
  ranged.mappings.push_back({"atoms", "atoms.json", false});
  const auto again = parse_schema(dump_schema(ranged));
  CHECK(again.features[0].sub_features[2].dimension == Dimension::between(2, 40));
  CHECK(again.features[0].sub_features[2].nested == std::vector<std::size_t>{1, 3});
  CHECK_FALSE(again.mappings[0].regular);
}

TEST_CASE("manifest syntax errors carry line and column") {
  try {
    parse_schema("{\n  \"features\": [\n    {\"kind\": }\n  ]\n}");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_schema(R"({"features": [{"kind": "space", "sub_features": [{"name": "a", "dimension": "x"}]}]})");
    FAIL("expected a structural error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("$.features[0].sub_features[0].dimension") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_schema(R"({"labels": []})"), Error);
  CHECK_THROWS_AS(parse_schema(R"({"features": [{"kind": "orbit", "sub_features": []}]})"), Error);
  CHECK_THROWS_AS(load_schema("/nonexistent/manifest.json"), Error);
}

TEST_CASE("main table layout order") {
  auto s = example_schema();
  const auto layout = main_table_layout(s);
  std::vector<std::string> names;
  for (const auto& c : layout) names.push_back(c.name);
  // time, space, space-time, labels, then coordinate-only columns.
  CHECK(names == std::vector<std::string>{"t", "cell_0", "cell_1", "load", "spectrum_0", "spectrum_1", "spectrum_2", "y", "site"});
  CHECK(layout.back().role == ColumnRole::coordinate);
  CHECK(layout[7].role == ColumnRole::label);
  CHECK(layout[5].element == 1);
  CHECK(max_feature_dimension(s) == 7);
  CHECK(max_label_dimension(s) == 1);
}

TEST_CASE("flatten concatenates components in order") {
  const auto s = example_schema();
  DataPoint p;
  p.values["t"] = Eigen::VectorXd::Constant(1, 5.0);
  p.values["cell"] = Eigen::Vector2d(0, 1);
  p.values["load"] = Eigen::VectorXd::Constant(1, 2.5);
  p.values["spectrum"] = Eigen::Vector3d(7, 8, 9);
  p.values["y"] = Eigen::VectorXd::Constant(1, -1.0);
  const auto flat = flatten_point(p, s);
  Eigen::VectorXd expected(7);
  expected << 5, 0, 1, 2.5, 7, 8, 9;
  CHECK(flat.features == expected);
  REQUIRE(flat.labels.has_value());
  CHECK((*flat.labels)(0) == -1.0);

  // Flattened length equals the summed dimensions for random fixed schemas.
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    DatasetSchema r;
    DataPoint q;
    std::size_t total = 0;
    for (auto kind : {ComponentKind::space_time, ComponentKind::time}) {
      Component c{kind, {}};
      const int subs = std::uniform_int_distribution<int>(1, 4)(rng);
      for (int k = 0; k < subs; ++k) {
        const auto d = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const std::string name = "f" + std::to_string(t) + "_" + std::to_string(static_cast<int>(kind)) + "_" + std::to_string(k);
        c.sub_features.push_back({name, Dimension::exactly(d), ValueClass::numeric, {}});
        q.values[name] = Eigen::VectorXd::Random(static_cast<Eigen::Index>(d));
        total += d;
      }
      r.features.push_back(c);
    }
    CHECK(static_cast<std::size_t>(flatten_point(q, r).features.size()) == total);
    CHECK(max_feature_dimension(r) == total);
  }

  p.values["spectrum"] = Eigen::Vector2d(7, 8);
  try {
    flatten_point(p, s);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
    CHECK(std::string(e.what()).find("spectrum") != std::string::npos);
  }
}

TEST_CASE("polygon centroid ignores orientation and starting vertex") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    // Star-shaped polygon around a random centre, vertices by increasing angle.
    const int n = std::uniform_int_distribution<int>(3, 12)(rng);
    const LatLong<double> centre(u(rng) * 40, u(rng) * 100);
    Polygon p;
    for (int i = 0; i < n; ++i) {
      const double a = 2 * std::numbers::pi * (i + 0.5 * (u(rng) + 1) * 0.9) / n;
      const double r = 1 + 0.5 * (u(rng) + 1);
      p.vertices.emplace_back(centre.x() + r * std::cos(a), centre.y() + r * std::sin(a));
    }
    const auto c = polygon_centroid(p);
    Polygon reversed{{p.vertices.rbegin(), p.vertices.rend()}};
    Polygon rotated = p;
    std::rotate(rotated.vertices.begin(), rotated.vertices.begin() + 1 + t % n, rotated.vertices.end());
    Polygon closed = p;
    closed.vertices.push_back(p.vertices.front());
    CHECK((polygon_centroid(reversed) - c).norm() <= 1e-12);
    CHECK((polygon_centroid(rotated) - c).norm() <= 1e-12);
    CHECK((polygon_centroid(closed) - c).norm() <= 1e-12);
    CHECK(signed_area(reversed) == doctest::Approx(-signed_area(p)));
  }

  Polygon square{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
  CHECK(polygon_centroid(square) == LatLong<double>(1, 1));
  Polygon line{{{0, 0}, {1, 1}, {2, 2}}};
  CHECK_THROWS_AS(polygon_centroid(line), Error);
  Polygon two{{{0, 0}, {1, 1}}};
  CHECK_THROWS_AS(polygon_centroid(two), Error);
}

TEST_CASE("unit sphere mapping") {
  CHECK((to_unit_sphere(0.0, 0.0) - Eigen::Vector3d(1, 0, 0)).norm() <= 1e-15);
  CHECK((to_unit_sphere(90.0, 0.0) - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-15);
  CHECK((to_unit_sphere(0.0, 90.0) - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-15);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const double lat = std::uniform_real_distribution<double>(-90, 90)(rng);
    const double lon = std::uniform_real_distribution<double>(-180, 180)(rng);
    CHECK(to_unit_sphere(lat, lon).norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
  try {
    to_unit_sphere(91.0, 0.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(to_unit_sphere(0.0, -180.5), Error);
}
