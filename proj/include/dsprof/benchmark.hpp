#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsprof/error.hpp"
#include "dsprof/forest.hpp"
#include "dsprof/storage.hpp"

namespace dsprof {

/// 1 - sum((y - yhat)^2) / sum((y - mean)^2) over all entries, with one global
/// mean. Throws undefined_variance when the labels have no variance.
template <typename A, typename B>
double r2(const Eigen::DenseBase<A>& y, const Eigen::DenseBase<B>& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) throw Error(ErrorKind::shape, "r2 inputs differ in shape");
  if (y.size() == 0) throw Error(ErrorKind::empty_input, "r2 of zero labels");
  const auto& yd = y.derived();
  const double mean = yd.mean();
  const double total = (yd.array() - mean).square().sum();
  if (total == 0.0) throw Error(ErrorKind::undefined_variance, "labels have zero variance");
  const double residual = (yd.array() - yhat.derived().array()).square().sum();
  return 1.0 - residual / total;
}

/// Share of entries where the prediction equals the label.
template <typename A, typename B>
double accuracy(const Eigen::DenseBase<A>& y, const Eigen::DenseBase<B>& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) throw Error(ErrorKind::shape, "accuracy inputs differ in shape");
  if (y.size() == 0) throw Error(ErrorKind::empty_input, "accuracy of zero labels");
  const auto hits = (y.derived().array() == yhat.derived().array()).count();
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

/// Fixed-length features and labels ready for a model.
struct Featurized {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  std::string featurizer;
};

/// Sorted distinct tokens of the given sequences.
std::vector<std::string> build_vocabulary(const std::vector<std::vector<std::string>>& sequences);

/// One row per sequence holding counts of each vocabulary entry. Tokens outside
/// the vocabulary are dropped. Throws configuration for an empty vocabulary.
Eigen::MatrixXd bag_of_words(const std::vector<std::vector<std::string>>& sequences,
                             const std::vector<std::string>& vocabulary);

/// Atoms are rows; column 0 holds the element id and the remaining columns
/// numeric properties. Returns element counts over `elements`, then the mean
/// and population standard deviation of each property. Throws empty_input for
/// a molecule without atoms.
Eigen::VectorXd molecule_aggregate(const Eigen::Ref<const Eigen::MatrixXd>& atoms, const std::vector<double>& elements);

enum class FeaturizerKind { flatten, automatic };

struct BenchmarkConfig {
  RFConfig forest;
  FeaturizerKind featurizer = FeaturizerKind::automatic;
  // Unset: classification when the labels are a single ordinal or one-hot column.
  std::optional<TaskKind> task;
  std::string train_split = "train";
  std::string test_split = "test";
};

/// Builds fixed-length features for every table from statistics of the train
/// table (vocabularies and element sets). Flatten accepts fixed-length numeric
/// sub-features only. Automatic also maps token sequences to bag-of-words,
/// nested blocks to molecule aggregates and flat variable-length vectors to
/// [length, mean, std]. Labels must be fixed-length numeric; otherwise throws
/// unsupported_task.
class Featurizer {
 public:
  Featurizer(const Dataset& dataset, FeaturizerKind kind, const std::string& fit_split);
  Featurized transform(const DataFrameSlice& table) const;
  TaskKind inferred_task() const;
  std::string id() const;

 private:
  struct Column {
    const ColumnInfo* info = nullptr;
    const SideStore* store = nullptr;
    enum class Mode { numeric, regular, tokens, nested, flat } mode = Mode::numeric;
    std::vector<std::string> vocabulary;
    std::vector<double> elements;
    std::size_t width = 1;
  };

  const Dataset* dataset_;
  FeaturizerKind kind_;
  std::vector<Column> features_;
  std::vector<Column> labels_;
};

struct BenchmarkResult {
  std::string dataset;
  std::string metric;  // "r2" or "accuracy"
  double value = 0.0;
  double fit_seconds = 0.0;
  double seconds_per_1000 = 0.0;
  std::size_t train_rows = 0;  // after subsampling
  std::size_t test_rows = 0;
  std::string featurizer;
  TaskKind task = TaskKind::regression;
  RFConfig config;
};

/// Rows kept by a seeded subsample of round(ratio * n) rows (at least 2), sorted.
std::vector<std::size_t> subsample_rows(std::size_t n, double ratio, std::uint64_t seed);

/// Fits on the (subsampled) train table and evaluates on the test table. Only
/// the fit is timed.
BenchmarkResult run_benchmark(const Dataset& dataset, const BenchmarkConfig& config);

nlohmann::ordered_json to_json(const BenchmarkResult& result);
std::string benchmark_header();
std::string benchmark_row(const BenchmarkResult& result);

}  // namespace dsprof
