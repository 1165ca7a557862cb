#pragma once

// Direct in-memory formulations of the scores, used as oracles for the
// streaming implementation. Deliberately shares no code with the library.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dsprof::reference {

inline double quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto k = static_cast<std::size_t>(h);
  if (k + 1 >= sorted.size()) return sorted.back();
  return sorted[k] + (h - static_cast<double>(k)) * (sorted[k + 1] - sorted[k]);
}

struct Fences {
  double inner_lo, inner_hi, outer_lo, outer_hi;
};

inline Fences fences(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  const double iqr = q3 - q1;
  return {q1 - 1.5 * iqr, q3 + 1.5 * iqr, q1 - 3 * iqr, q3 + 3 * iqr};
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<double> kept(const std::vector<double>& values, const Fences& f) {
  std::vector<double> out;
  for (double v : values) {
    if (v >= f.inner_lo && v <= f.inner_hi) out.push_back(v);
  }
  return out;
}

inline std::vector<double> probabilities(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
  std::vector<double> p(bins, 0.0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::max(0.0, std::floor((v - lo) / (hi - lo) * static_cast<double>(bins))));
    p[std::min(b, bins - 1)] += 1.0;
  }
  for (auto& x : p) x /= static_cast<double>(values.size());
  return p;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s / std::numbers::ln2;
}

inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2.0;
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

inline double simb(const Eigen::MatrixXd& x, std::size_t bins) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto values = to_vector(x.col(c));
    const auto k = kept(values, fences(values));
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    if (*lo == *hi) {
      total += 1.0;
      continue;
    }
    total += jsd(probabilities(k, *lo, *hi, bins), std::vector<double>(bins, 1.0 / static_cast<double>(bins)));
  }
  return total / static_cast<double>(x.cols());
}

inline double stood(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t bins) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const auto va = to_vector(a.col(c));
    const auto vb = to_vector(b.col(c));
    auto both = va;
    both.insert(both.end(), vb.begin(), vb.end());
    const auto f = fences(both);
    const auto kb = kept(both, f);
    const auto [lo, hi] = std::minmax_element(kb.begin(), kb.end());
    const auto ka = kept(va, f);
    const auto kbb = kept(vb, f);
    if (*lo == *hi) {
      total += (ka.empty() == kbb.empty()) ? 0.0 : 1.0;
    } else if (ka.empty() || kbb.empty()) {
      total += 1.0;
    } else {
      total += jsd(probabilities(ka, *lo, *hi, bins), probabilities(kbb, *lo, *hi, bins));
    }
  }
  return total / static_cast<double>(a.cols());
}

/// Mean over (feature, label) pairs of the mean of (2/pi) atan |dl/df| taken
/// over consecutive points in (feature, label) order; steps with equal feature
/// values are skipped. Pairs without any step are left out.
inline double io(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::size_t* excluded = nullptr) {
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      std::vector<std::pair<double, double>> pts;
      for (Eigen::Index r = 0; r < x.rows(); ++r) pts.emplace_back(x(r, i), y(r, j));
      std::sort(pts.begin(), pts.end());
      double s = 0.0;
      std::size_t m = 0;
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (pts[k + 1].first == pts[k].first) continue;
        const double d = (pts[k + 1].second - pts[k].second) / (pts[k + 1].first - pts[k].first);
        s += std::atan(std::abs(d)) * 2.0 / std::numbers::pi;
        ++m;
      }
      if (m == 0) {
        if (excluded) ++*excluded;
        continue;
      }
      total += s / static_cast<double>(m);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

inline double ramp(double v, const Fences& f) {
  if (v >= f.inner_lo && v <= f.inner_hi) return 0.0;
  const double width = v < f.inner_lo ? f.inner_lo - f.outer_lo : f.outer_hi - f.inner_hi;
  const double dist = v < f.inner_lo ? f.inner_lo - v : v - f.inner_hi;
  if (width == 0.0) return 1.0;
  return std::min(1.0, dist / width);
}

inline double outlier(const Eigen::MatrixXd& x) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto values = to_vector(x.col(c));
    const auto f = fences(values);
    double s = 0.0;
    for (double v : values) s += ramp(v, f);
    total += s / static_cast<double>(values.size());
  }
  return total / static_cast<double>(x.cols());
}

}  // namespace dsprof::reference
