#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dsprof/error.hpp"

namespace dsprof {

// ---------------------------------------------------------------------------
// Quantiles

/// Linear-interpolation quantile at position q * (n - 1) of sorted values.
template <typename Scalar>
Scalar quantile_sorted(std::span<const Scalar> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::empty_input, "quantile of an empty column");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::domain, "quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const Scalar frac = static_cast<Scalar>(pos - static_cast<double>(lo));
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

template <typename Derived>
std::vector<typename Derived::Scalar> sorted_values(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> sorted(static_cast<std::size_t>(values.size()));
  Eigen::Index i = 0;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      const Scalar v = values(r, c);
      if (std::isnan(v)) throw Error(ErrorKind::invalid_value, "NaN in column");
      sorted[static_cast<std::size_t>(i++)] = v;
    }
  }
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

/// Exact quantiles of a column (full sort).
template <typename Derived>
std::vector<typename Derived::Scalar> quantiles(const Eigen::DenseBase<Derived>& values, std::span<const double> qs) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) throw Error(ErrorKind::empty_input, "quantile of an empty column");
  const auto sorted = sorted_values(values);
  std::vector<Scalar> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(quantile_sorted<Scalar>(sorted, q));
  return out;
}

// ---------------------------------------------------------------------------
// Tukey's fences

struct TukeyFences {
  double q1 = 0;
  double q3 = 0;
  double iqr = 0;
  double inner_lo = 0;
  double inner_hi = 0;
  double outer_lo = 0;
  double outer_hi = 0;

  static TukeyFences from_quartiles(double q1, double q3) {
    const double iqr = q3 - q1;
    return {q1, q3, iqr, q1 - 1.5 * iqr, q3 + 1.5 * iqr, q1 - 3.0 * iqr, q3 + 3.0 * iqr};
  }
  bool inside_inner(double v) const { return v >= inner_lo && v <= inner_hi; }
};

template <typename Scalar>
TukeyFences tukey_fences_sorted(std::span<const Scalar> sorted) {
  return TukeyFences::from_quartiles(static_cast<double>(quantile_sorted<Scalar>(sorted, 0.25)),
                                     static_cast<double>(quantile_sorted<Scalar>(sorted, 0.75)));
}

template <typename Scalar>
struct TukeyFiltered {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kept;
  TukeyFences fences;
};

/// Keeps the values inside the closed inner-fence interval, in input order.
template <typename Derived>
TukeyFiltered<typename Derived::Scalar> tukey_filter(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const auto sorted = sorted_values(values);
  if (sorted.empty()) throw Error(ErrorKind::empty_input, "Tukey filter of an empty column");
  TukeyFiltered<Scalar> out;
  out.fences = tukey_fences_sorted<Scalar>(sorted);
  std::vector<Scalar> kept;
  kept.reserve(sorted.size());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      if (out.fences.inside_inner(static_cast<double>(values(r, c)))) kept.push_back(values(r, c));
    }
  }
  out.kept = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Histogram

/// Fixed uniform-width bins over [lo, hi]. The last bin is closed on the right.
class Histogram {
 public:
  static constexpr std::size_t default_bins = 10'000;

  Histogram(double lo, double hi, std::size_t bins = default_bins);

  /// Adds v if it lies in [lo, hi]; returns whether it was counted.
  bool add(double v) {
    if (!(v >= lo_ && v <= hi_)) return false;
    ++counts_(static_cast<Eigen::Index>(bin_of(v)));
    ++total_;
    return true;
  }

  std::size_t bin_of(double v) const {
    const double pos = (v - lo_) / (hi_ - lo_) * static_cast<double>(bins());
    const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
    return std::min(b, bins() - 1);
  }

  /// Adds another histogram's counts. Throws incompatible_histogram when edges differ.
  void merge(const Histogram& other);

  std::size_t bins() const { return static_cast<std::size_t>(counts_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::int64_t total() const { return total_; }
  const Eigen::Array<std::int64_t, Eigen::Dynamic, 1>& counts() const { return counts_; }
  /// B + 1 edges; the first is lo and the last is hi exactly.
  Eigen::ArrayXd edges() const;
  bool same_edges(const Histogram& other) const {
    return lo_ == other.lo_ && hi_ == other.hi_ && bins() == other.bins();
  }

  /// Probabilities summing to 1; throws empty_input when total is 0.
  Eigen::ArrayXd normalized() const;

 private:
  double lo_;
  double hi_;
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> counts_;
  std::int64_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Divergences (base 2)

/// KL(P || Q) in bits with 0 * log(0 / q) = 0.
template <typename DerivedP, typename DerivedQ>
double kl_divergence(const Eigen::ArrayBase<DerivedP>& p, const Eigen::ArrayBase<DerivedQ>& q) {
  if (p.size() != q.size()) throw Error(ErrorKind::incompatible_histogram, "distributions differ in length");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = static_cast<double>(p(i));
    if (pi > 0.0) sum += pi * std::log2(pi / static_cast<double>(q(i)));
  }
  return sum;
}

/// Jensen-Shannon divergence in bits: 0 for identical, 1 for disjoint support.
template <typename DerivedP, typename DerivedQ>
double jsd(const Eigen::ArrayBase<DerivedP>& p, const Eigen::ArrayBase<DerivedQ>& q) {
  if (p.size() != q.size()) throw Error(ErrorKind::incompatible_histogram, "distributions differ in length");
  // Both KL terms of a bin are added together first so swapping P and Q
  // yields a bit-identical result.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = static_cast<double>(p(i));
    const double qi = static_cast<double>(q(i));
    const double mi = 0.5 * (pi + qi);
    const double tp = pi > 0.0 ? pi * std::log2(pi / mi) : 0.0;
    const double tq = qi > 0.0 ? qi * std::log2(qi / mi) : 0.0;
    sum += tp + tq;
  }
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

/// JSD between two histograms over the same edges.
double jsd(const Histogram& p, const Histogram& q);

/// JSD between a histogram and the uniform distribution over its bins.
double jsd_vs_uniform(const Histogram& h);

// ---------------------------------------------------------------------------
// Reservoir quantile sketch

/// Seeded reservoir sample (Algorithm R). Holds every value while the count is
/// within capacity, so quantiles are exact; beyond that they are approximate.
/// The sample depends only on the order values arrive in.
class QuantileSketch {
 public:
  QuantileSketch(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw Error(ErrorKind::configuration, "quantile sample capacity must be positive");
  }

  void add(double v) {
    if (std::isnan(v)) throw Error(ErrorKind::invalid_value, "NaN in column");
    if (sample_.size() < capacity_) {
      sample_.push_back(v);
    } else {
      std::uniform_int_distribution<std::uint64_t> pick(0, count_);
      const auto j = pick(rng_);
      if (j < capacity_) sample_[static_cast<std::size_t>(j)] = v;
    }
    ++count_;
  }

  std::uint64_t count() const { return count_; }
  bool exact() const { return count_ <= capacity_; }

  /// Inner and outer fences from the (sorted) sample. Throws empty_input when no values were seen.
  TukeyFences fences() const {
    if (sample_.empty()) throw Error(ErrorKind::empty_input, "quantile of an empty column");
    auto sorted = sample_;
    std::sort(sorted.begin(), sorted.end());
    return tukey_fences_sorted<double>(sorted);
  }

 private:
  std::size_t capacity_;
  std::mt19937_64 rng_;
  std::vector<double> sample_;
  std::uint64_t count_ = 0;
};

}  // namespace dsprof
