#include "dsprof/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsprof/error.hpp"
#include "dsprof/hash.hpp"
#include "dsprof/parallel.hpp"

namespace dsprof {

void validate_rf_config(const RFConfig& c) {
  if (c.trees < 1) throw Error(ErrorKind::configuration, "tree count must be at least 1");
  if (c.max_depth < 1) throw Error(ErrorKind::configuration, "max depth must be at least 1");
  if (!(c.sample_ratio > 0.0 && c.sample_ratio <= 1.0)) {
    throw Error(ErrorKind::configuration, "sample ratio must lie in (0, 1]");
  }
}

std::size_t resolved_max_features(const RFConfig& c, std::size_t features) {
  if (features == 0) return 0;
  if (c.max_features > 0) return std::min(c.max_features, features);
  if (c.task == TaskKind::classification) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(features))));
  }
  return std::max<std::size_t>(1, features / 3);
}

class RandomForest::Builder {
 public:
  Builder(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& y, const std::vector<std::size_t>& cls,
          std::size_t class_count, const RFConfig& config, std::uint64_t seed)
      : x_(x), y_(y), cls_(cls), classes_(class_count), config_(config), rng_(seed) {
    mtry_ = resolved_max_features(config, static_cast<std::size_t>(x.cols()));
    feature_order_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
  }

  Tree build() {
    const auto n = static_cast<std::size_t>(x_.rows());
    std::vector<std::size_t> samples(n);
    if (config_.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : samples) s = pick(rng_);
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    grow(samples, 0, samples.size(), 0);
    return std::move(tree_);
  }

 private:
  bool classification() const { return config_.task == TaskKind::classification; }

  std::int32_t grow(std::vector<std::size_t>& s, std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = end - begin;
    tree_.nodes[static_cast<std::size_t>(id)].value = leaf_value(s, begin, end);

    if (depth >= config_.max_depth || n < 2 || pure(s, begin, end)) return id;
    const auto split = best_split(s, begin, end);
    if (split.feature < 0) return id;

    const auto mid = std::partition(s.begin() + static_cast<std::ptrdiff_t>(begin), s.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](std::size_t i) {
                                      return x_(static_cast<Eigen::Index>(i), split.feature) <= split.threshold;
                                    });
    const auto m = static_cast<std::size_t>(mid - s.begin());
    const auto left = grow(s, begin, m, depth + 1);
    const auto right = grow(s, m, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  std::size_t leaf_value(const std::vector<std::size_t>& s, std::size_t begin, std::size_t end) {
    const std::size_t offset = tree_.values.size();
    if (classification()) {
      std::vector<std::size_t> counts(classes_, 0);
      for (std::size_t k = begin; k < end; ++k) ++counts[cls_[s[k]]];
      const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
      tree_.values.push_back(static_cast<double>(best));
      return offset;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(y_.cols());
    for (std::size_t k = begin; k < end; ++k) mean += y_.row(static_cast<Eigen::Index>(s[k])).transpose();
    mean /= static_cast<double>(end - begin);
    tree_.values.insert(tree_.values.end(), mean.data(), mean.data() + mean.size());
    return offset;
  }

  bool pure(const std::vector<std::size_t>& s, std::size_t begin, std::size_t end) const {
    for (std::size_t k = begin + 1; k < end; ++k) {
      if (classification()) {
        if (cls_[s[k]] != cls_[s[begin]]) return false;
      } else if (y_.row(static_cast<Eigen::Index>(s[k])) != y_.row(static_cast<Eigen::Index>(s[begin]))) {
        return false;
      }
    }
    return true;
  }

  struct Split {
    Eigen::Index feature = -1;
    double threshold = 0.0;
  };

  // Maximizes sum(S_L^2)/n_L + sum(S_R^2)/n_R, which minimizes the summed squared
  // error; for classification S holds class counts, which minimizes Gini impurity.
  Split best_split(const std::vector<std::size_t>& s, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t width = classification() ? classes_ : static_cast<std::size_t>(y_.cols());
    std::vector<double> total(width, 0.0);
    auto add = [&](std::vector<double>& acc, std::size_t i, double sign) {
      if (classification()) {
        acc[cls_[i]] += sign;
      } else {
        for (std::size_t o = 0; o < width; ++o) acc[o] += sign * y_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o));
      }
    };
    for (std::size_t k = begin; k < end; ++k) add(total, s[k], 1.0);

    // Partial Fisher-Yates draw of mtry candidate features.
    for (std::size_t f = 0; f < mtry_; ++f) {
      std::uniform_int_distribution<std::size_t> pick(f, feature_order_.size() - 1);
      std::swap(feature_order_[f], feature_order_[pick(rng_)]);
    }

    Split best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, std::size_t>> sorted(n);
    std::vector<double> left(width);
    for (std::size_t f = 0; f < mtry_; ++f) {
      const auto feature = static_cast<Eigen::Index>(feature_order_[f]);
      for (std::size_t k = 0; k < n; ++k) sorted[k] = {x_(static_cast<Eigen::Index>(s[begin + k]), feature), s[begin + k]};
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        add(left, sorted[k].second, 1.0);
        if (sorted[k].first == sorted[k + 1].first) continue;
        const auto nl = static_cast<double>(k + 1);
        const auto nr = static_cast<double>(n - k - 1);
        double sl = 0.0;
        double sr = 0.0;
        for (std::size_t o = 0; o < width; ++o) {
          sl += left[o] * left[o];
          const double r = total[o] - left[o];
          sr += r * r;
        }
        const double score = sl / nl + sr / nr;
        if (score > best_score) {
          best_score = score;
          best.feature = feature;
          best.threshold = sorted[k].first + (sorted[k + 1].first - sorted[k].first) / 2.0;
        }
      }
    }
    return best;
  }

  const Eigen::Ref<const Eigen::MatrixXd>& x_;
  const Eigen::MatrixXd& y_;
  const std::vector<std::size_t>& cls_;
  std::size_t classes_;
  const RFConfig& config_;
  std::mt19937_64 rng_;
  std::size_t mtry_ = 0;
  std::vector<std::size_t> feature_order_;
  Tree tree_;
};

RandomForest RandomForest::fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                               const RFConfig& config) {
  validate_rf_config(config);
  if (x.rows() != y.rows()) throw Error(ErrorKind::shape, "feature and label row counts differ");
  if (x.rows() < 2) throw Error(ErrorKind::empty_input, "random forest needs at least 2 training rows");
  if (x.cols() < 1 || y.cols() < 1) throw Error(ErrorKind::shape, "random forest needs features and labels");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::invalid_value, "training data contains non-finite values");

  RandomForest forest;
  forest.task_ = config.task;
  forest.features_ = static_cast<std::size_t>(x.cols());
  forest.outputs_ = static_cast<std::size_t>(y.cols());

  std::vector<std::size_t> cls;
  if (config.task == TaskKind::classification) {
    if (y.cols() != 1) throw Error(ErrorKind::shape, "classification needs exactly one label column");
    forest.classes_.assign(y.data(), y.data() + y.rows());
    std::sort(forest.classes_.begin(), forest.classes_.end());
    forest.classes_.erase(std::unique(forest.classes_.begin(), forest.classes_.end()), forest.classes_.end());
    cls.reserve(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      cls.push_back(static_cast<std::size_t>(
          std::lower_bound(forest.classes_.begin(), forest.classes_.end(), y(r, 0)) - forest.classes_.begin()));
    }
  }
  const Eigen::MatrixXd targets = y;

  forest.trees_.resize(config.trees);
  parallel_for(config.trees, config.threads, [&](std::size_t t) {
    Builder builder(x, targets, cls, forest.classes_.size(), config, derive_seed(config.seed, t));
    forest.trees_[t] = builder.build();
  });
  return forest;
}

const double* RandomForest::leaf(const Tree& tree, const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Index row) const {
  std::size_t n = 0;
  while (tree.nodes[n].feature >= 0) {
    const auto& node = tree.nodes[n];
    n = static_cast<std::size_t>(x(row, node.feature) <= node.threshold ? node.left : node.right);
  }
  return tree.values.data() + tree.nodes[n].value;
}

Eigen::MatrixXd RandomForest::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (static_cast<std::size_t>(x.cols()) != features_) {
    throw Error(ErrorKind::shape, "prediction input has " + std::to_string(x.cols()) + " features, model expects " +
                                      std::to_string(features_));
  }
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(outputs_));
  if (task_ == TaskKind::classification) {
    std::vector<std::size_t> votes(classes_.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      std::fill(votes.begin(), votes.end(), 0);
      for (const auto& t : trees_) ++votes[static_cast<std::size_t>(*leaf(t, x, r))];
      out(r, 0) = classes_[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
    }
    return out;
  }
  out.setZero();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (const auto& t : trees_) {
      out.row(r) += Eigen::Map<const Eigen::RowVectorXd>(leaf(t, x, r), static_cast<Eigen::Index>(outputs_));
    }
  }
  out /= static_cast<double>(trees_.size());
  return out;
}

}  // namespace dsprof
