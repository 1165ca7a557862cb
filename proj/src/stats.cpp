#include "dsprof/stats.hpp"

namespace dsprof {

Histogram::Histogram(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi) {
  if (bins == 0) throw Error(ErrorKind::configuration, "histogram needs at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::domain, "histogram range must be finite with lo < hi");
  }
  counts_ = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(bins));
}

void Histogram::merge(const Histogram& other) {
  if (!same_edges(other)) throw Error(ErrorKind::incompatible_histogram, "histogram edges differ");
  counts_ += other.counts_;
  total_ += other.total_;
}

Eigen::ArrayXd Histogram::edges() const {
  const auto n = static_cast<Eigen::Index>(bins());
  Eigen::ArrayXd e(n + 1);
  const double width = (hi_ - lo_) / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = lo_ + width * static_cast<double>(i);
  e(n) = hi_;
  return e;
}

Eigen::ArrayXd Histogram::normalized() const {
  if (total_ == 0) throw Error(ErrorKind::empty_input, "cannot normalize an empty histogram");
  return counts_.cast<double>() / static_cast<double>(total_);
}

double jsd(const Histogram& p, const Histogram& q) {
  if (!p.same_edges(q)) throw Error(ErrorKind::incompatible_histogram, "histogram edges differ");
  return jsd(p.normalized(), q.normalized());
}

double jsd_vs_uniform(const Histogram& h) {
  const auto n = static_cast<Eigen::Index>(h.bins());
  return jsd(h.normalized(), Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n)));
}

}  // namespace dsprof
