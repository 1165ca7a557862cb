#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Core>

#include "dsprof/storage.hpp"

namespace dsprof::testing {

/// Directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dsprof-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline SubFeature scalar(std::string name, ValueClass vc = ValueClass::numeric) {
  return SubFeature{std::move(name), Dimension::exactly(1), vc, {}};
}

/// Schema with one space-time feature component holding one scalar sub-feature
/// per feature column and one space-time label component, splits train/val/test.
inline DatasetSchema numeric_schema(const std::string& name, const std::vector<std::string>& features,
                                    const std::vector<std::string>& labels, std::vector<std::string> splits = {"train", "val", "test"}) {
  DatasetSchema s;
  s.name = name;
  Component f{ComponentKind::space_time, {}};
  for (const auto& n : features) f.sub_features.push_back(scalar(n));
  s.features.push_back(f);
  if (!labels.empty()) {
    Component l{ComponentKind::space_time, {}};
    for (const auto& n : labels) l.sub_features.push_back(scalar(n));
    s.labels.push_back(l);
  }
  for (const auto& sp : splits) s.tables.emplace_back(sp, sp + ".csv");
  return s;
}

inline std::vector<std::string> column_names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Slice whose numeric columns are the columns of m, named in order.
inline DataFrameSlice numeric_slice(const std::string& split, const Eigen::MatrixXd& m,
                                    const std::vector<std::string>& names) {
  DataFrameSlice s;
  s.split = split;
  s.rows = static_cast<std::size_t>(m.rows());
  s.names = names;
  for (Eigen::Index c = 0; c < m.cols(); ++c) s.columns.emplace_back(Eigen::VectorXd(m.col(c)));
  return s;
}

/// Writes a purely numeric dataset. Each table holds features then labels.
inline std::filesystem::path write_numeric(const std::filesystem::path& dir, const std::string& name,
                                           const std::vector<std::pair<std::string, Eigen::MatrixXd>>& tables,
                                           std::size_t feature_count) {
  std::vector<std::string> splits;
  for (const auto& t : tables) splits.push_back(t.first);
  const auto width = static_cast<std::size_t>(tables.front().second.cols());
  const auto features = column_names("x", feature_count);
  const auto labels = column_names("y", width - feature_count);
  InMemoryDataset data;
  data.schema = numeric_schema(name, features, labels, splits);
  auto names = features;
  names.insert(names.end(), labels.begin(), labels.end());
  for (const auto& [split, m] : tables) data.tables[split] = numeric_slice(split, m, names);
  write_dataset(data, dir);
  return dir / "manifest.json";
}

/// Draws a column from one of several shapes: uniform, normal, heavy tails,
/// few distinct integers, or constant.
inline Eigen::VectorXd random_column(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  const int shape = std::uniform_int_distribution<int>(0, 5)(rng);
  std::normal_distribution<double> normal(std::uniform_real_distribution<double>(-5, 5)(rng),
                                          std::uniform_real_distribution<double>(0.1, 3)(rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int levels = std::uniform_int_distribution<int>(2, 8)(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (shape) {
      case 0: v(i) = unit(rng) * 10.0 - 3.0; break;
      case 1: v(i) = normal(rng); break;
      case 2: v(i) = std::exp(normal(rng) * 0.8); break;
      case 3: v(i) = std::floor(unit(rng) * levels); break;
      case 4: v(i) = unit(rng) < 0.95 ? normal(rng) : normal(rng) * 40.0; break;
      default: v(i) = 2.5; break;
    }
  }
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) m.col(c) = random_column(rng, rows);
  return m;
}

/// sites x times grid with feature x = site + t / 1000 and label y = 2x. Rows
/// are spread over `tables` input tables round-robin.
inline std::filesystem::path write_grid(const std::filesystem::path& dir, int sites, int times, int tables = 1) {
  InMemoryDataset data;
  auto& s = data.schema;
  s.name = "grid";
  s.features.push_back({ComponentKind::time, {scalar("t")}});
  s.features.push_back({ComponentKind::space, {scalar("site", ValueClass::ordinal)}});
  s.features.push_back({ComponentKind::space_time, {scalar("x")}});
  s.labels.push_back({ComponentKind::space_time, {scalar("y")}});
  s.coordinates = {{"t"}, {"site"}};
  std::vector<std::vector<std::array<double, 4>>> cells(static_cast<std::size_t>(tables));
  int k = 0;
  for (int site = 0; site < sites; ++site) {
    for (int t = 0; t < times; ++t, ++k) {
      const double x = site + t / 1000.0;
      cells[static_cast<std::size_t>(k % tables)].push_back({double(t), double(site), x, 2 * x});
    }
  }
  for (int i = 0; i < tables; ++i) {
    const std::string name = "part" + std::to_string(i);
    s.tables.emplace_back(name, name + ".csv");
    const auto& c = cells[static_cast<std::size_t>(i)];
    Eigen::MatrixXd m(static_cast<Eigen::Index>(c.size()), 4);
    for (std::size_t r = 0; r < c.size(); ++r) {
      for (int j = 0; j < 4; ++j) m(static_cast<Eigen::Index>(r), j) = c[r][static_cast<std::size_t>(j)];
    }
    data.tables[name] = numeric_slice(name, m, {"t", "site", "x", "y"});
  }
  write_dataset(data, dir);
  return dir / "manifest.json";
}

}  // namespace dsprof::testing
