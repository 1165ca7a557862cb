#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsprof/stats.hpp"
#include "dsprof/storage.hpp"

namespace dsprof {

/// A re-iterable source of numeric columns delivered in row batches. Every
/// score makes one or more full passes; each pass must deliver the same rows
/// in the same order.
class ColumnScan {
 public:
  using BatchFn = std::function<void(const Eigen::Ref<const Eigen::MatrixXd>&)>;

  virtual ~ColumnScan() = default;
  virtual const std::vector<std::string>& names() const = 0;
  virtual std::vector<std::string> sources() const = 0;
  virtual void scan(const BatchFn& fn) const = 0;
};

/// In-memory columns, delivered in batches of batch_size rows.
class MatrixScan final : public ColumnScan {
 public:
  MatrixScan(Eigen::MatrixXd data, std::vector<std::string> names, std::string source = "memory",
             std::size_t batch_size = 4096);

  const std::vector<std::string>& names() const override { return names_; }
  std::vector<std::string> sources() const override { return {source_}; }
  void scan(const BatchFn& fn) const override;

 private:
  Eigen::MatrixXd data_;
  std::vector<std::string> names_;
  std::string source_;
  std::size_t batch_size_;
};

/// Streams the numeric target columns of one or more splits (concatenated in
/// the given order) straight from the main tables.
class DatasetScan final : public ColumnScan {
 public:
  DatasetScan(const Dataset& dataset, std::vector<std::string> splits, Target target, std::size_t batch_size = 4096);

  const std::vector<std::string>& names() const override { return names_; }
  std::vector<std::string> sources() const override { return splits_; }
  void scan(const BatchFn& fn) const override;

 private:
  const Dataset* dataset_;
  std::vector<std::string> splits_;
  Target target_;
  std::size_t batch_size_;
  std::vector<std::string> names_;
};

/// Several scans with identical column names, one after the other.
class ConcatScan final : public ColumnScan {
 public:
  explicit ConcatScan(std::vector<const ColumnScan*> parts);

  const std::vector<std::string>& names() const override { return parts_.front()->names(); }
  std::vector<std::string> sources() const override;
  void scan(const BatchFn& fn) const override;

 private:
  std::vector<const ColumnScan*> parts_;
};

/// Per-point outlier score given the fences of its column.
using OutlierFunction = std::function<double(double value, const TukeyFences& fences)>;

/// 0 inside the closed inner fences, linear ramp to 1 at the outer fence, 1 beyond.
double tukey_ramp(double value, const TukeyFences& fences);

struct ScoreConfig {
  std::size_t bins = Histogram::default_bins;
  std::size_t quantile_cap = 1'000'000;  // reservoir size for fences
  std::size_t io_row_cap = 100'000;
  std::size_t io_pair_cap = 10'000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  OutlierFunction outlier_function = tukey_ramp;
  std::string outlier_function_id = "tukey-linear-ramp";
};

enum class ScoreKind { simb, stood, io, outlier };
std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);

struct SubScore {
  std::string name;
  double value = 0.0;
};

struct ScoreReport {
  ScoreKind kind = ScoreKind::simb;
  std::string target;               // "features", "labels" or "features x labels"
  std::vector<std::string> splits;  // inputs, in order
  double overall = 0.0;             // mean of sub_scores
  std::vector<SubScore> sub_scores;
  std::vector<std::string> excluded;      // IO pairs without a defined ratio
  std::vector<std::uint64_t> row_counts;  // per input scan
  bool approximate = false;               // fences or IO computed from a sample
  ScoreConfig config;
};

nlohmann::ordered_json to_json(const ScoreReport& report);

/// Selection imbalance: mean JSD of each column's outlier-filtered histogram
/// against the uniform distribution over the same bins.
ScoreReport simb_score(const ColumnScan& split, const ScoreConfig& config);

/// Spatio-temporal distribution shift: mean JSD between the histograms of two
/// splits over fences and bin edges shared through their union.
ScoreReport stood_score(const ColumnScan& a, const ColumnScan& b, const ScoreConfig& config);

/// Input-output score over all (feature, label) pairs. Columns
/// [0, feature_count) of the scan are features, the rest labels.
ScoreReport io_score(const ColumnScan& joint, std::size_t feature_count, const ScoreConfig& config);

/// Mean per-point outlier score per column.
ScoreReport outlier_score(const ColumnScan& split, const ScoreConfig& config);

}  // namespace dsprof
