#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace dsprof {

enum class TaskKind { regression, classification };

struct RFConfig {
  std::size_t trees = 128;
  std::size_t max_depth = 20;
  double sample_ratio = 1.0;  // share of training rows used, drawn with a seeded subsample
  TaskKind task = TaskKind::regression;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  // Features tried per split; 0 picks sqrt(D) for classification and max(1, D/3) for regression.
  std::size_t max_features = 0;
  std::size_t threads = 1;
};

/// Throws configuration for zero trees or depth, or a ratio outside (0, 1].
void validate_rf_config(const RFConfig& config);

std::size_t resolved_max_features(const RFConfig& config, std::size_t features);

/// CART trees on bootstrap samples. Regression trees split on squared error
/// summed over all outputs and predict leaf means; classification trees split
/// on Gini impurity and predict the leaf majority. Ties go to the lowest class.
class RandomForest {
 public:
  /// Y has one column per output. For classification Y must have one column;
  /// its distinct values are the classes.
  static RandomForest fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                          const RFConfig& config);

  Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t features() const { return features_; }
  std::size_t outputs() const { return outputs_; }
  TaskKind task() const { return task_; }
  const std::vector<double>& classes() const { return classes_; }

 private:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t value = 0;  // offset into Tree::values
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<double> values;  // outputs per leaf (regression) or one class index
  };
  class Builder;

  const double* leaf(const Tree& tree, const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Index row) const;

  TaskKind task_ = TaskKind::regression;
  std::size_t features_ = 0;
  std::size_t outputs_ = 0;
  std::vector<double> classes_;
  std::vector<Tree> trees_;
};

}  // namespace dsprof
