#include "dsprof/scores.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <limits>
#include <optional>
#include <map>
#include <numeric>
#include <unordered_set>

#include "dsprof/hash.hpp"
#include "dsprof/parallel.hpp"

namespace dsprof {

// ---------------------------------------------------------------------------
// Scans

MatrixScan::MatrixScan(Eigen::MatrixXd data, std::vector<std::string> names, std::string source,
                       std::size_t batch_size)
    : data_(std::move(data)), names_(std::move(names)), source_(std::move(source)), batch_size_(batch_size) {
  if (static_cast<std::size_t>(data_.cols()) != names_.size()) {
    throw Error(ErrorKind::shape, "column names do not match the matrix width");
  }
  if (batch_size_ == 0) throw Error(ErrorKind::configuration, "batch size must be at least 1");
}

void MatrixScan::scan(const BatchFn& fn) const {
  const auto step = static_cast<Eigen::Index>(batch_size_);
  for (Eigen::Index r = 0; r < data_.rows(); r += step) {
    fn(data_.middleRows(r, std::min(step, data_.rows() - r)));
  }
}

DatasetScan::DatasetScan(const Dataset& dataset, std::vector<std::string> splits, Target target,
                         std::size_t batch_size)
    : dataset_(&dataset),
      splits_(std::move(splits)),
      target_(target),
      batch_size_(batch_size),
      names_(numeric_column_names(dataset, target)) {
  for (const auto& s : splits_) {
    if (!dataset.has_split(s)) throw Error(ErrorKind::not_found, "split '" + s + "' not in dataset");
  }
  if (target != Target::features && !dataset.schema().has_labels()) {
    throw Error(ErrorKind::schema, "dataset has no labels");
  }
}

void DatasetScan::scan(const BatchFn& fn) const {
  for (const auto& split : splits_) {
    auto stream = dataset_->stream(split, batch_size_);
    while (auto slice = stream.next()) fn(numeric_matrix(*dataset_, *slice, target_));
  }
}

ConcatScan::ConcatScan(std::vector<const ColumnScan*> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error(ErrorKind::configuration, "concatenation of zero scans");
  for (const auto* p : parts_) {
    if (p->names() != parts_.front()->names()) {
      throw Error(ErrorKind::schema_mismatch, "concatenated scans have different columns");
    }
  }
}

std::vector<std::string> ConcatScan::sources() const {
  std::vector<std::string> out;
  for (const auto* p : parts_) {
    for (auto& s : p->sources()) out.push_back(std::move(s));
  }
  return out;
}

void ConcatScan::scan(const BatchFn& fn) const {
  for (const auto* p : parts_) p->scan(fn);
}

// ---------------------------------------------------------------------------
// Report plumbing

double tukey_ramp(double value, const TukeyFences& f) {
  if (f.inside_inner(value)) return 0.0;
  if (value < f.inner_lo) {
    const double span = f.inner_lo - f.outer_lo;
    return span > 0.0 ? std::min(1.0, (f.inner_lo - value) / span) : 1.0;
  }
  const double span = f.outer_hi - f.inner_hi;
  return span > 0.0 ? std::min(1.0, (value - f.inner_hi) / span) : 1.0;
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::simb: return "simb";
    case ScoreKind::stood: return "stood";
    case ScoreKind::io: return "io";
    case ScoreKind::outlier: return "outlier";
  }
  return "simb";
}

ScoreKind parse_score_kind(std::string_view name) {
  for (auto k : {ScoreKind::simb, ScoreKind::stood, ScoreKind::io, ScoreKind::outlier}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::configuration, "unknown score kind '" + std::string(name) +
                                            "' (valid: simb, stood, io, outlier)");
}

nlohmann::ordered_json to_json(const ScoreReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.kind);
  j["target"] = r.target;
  j["splits"] = r.splits;
  j["overall"] = r.overall;
  auto& subs = j["sub_scores"] = nlohmann::ordered_json::array();
  for (const auto& s : r.sub_scores) subs.push_back({{"name", s.name}, {"value", s.value}});
  if (r.kind == ScoreKind::io) j["excluded_pairs"] = r.excluded;
  j["approximate"] = r.approximate;
  j["config"] = {{"bins", r.config.bins},
                 {"quantile_cap", r.config.quantile_cap},
                 {"io_row_cap", r.config.io_row_cap},
                 {"io_pair_cap", r.config.io_pair_cap},
                 {"seed", r.config.seed},
                 {"score_function", r.kind == ScoreKind::outlier ? r.config.outlier_function_id : std::string("jsd-base2")}};
  j["inputs"] = {{"row_counts", r.row_counts}};
  return j;
}

namespace {

void finish(ScoreReport& report) {
  if (report.sub_scores.empty()) {
    throw Error(ErrorKind::undefined_score, std::string(to_string(report.kind)) + " score has no defined sub-scores");
  }
  double sum = 0.0;
  for (const auto& s : report.sub_scores) sum += s.value;
  report.overall = sum / static_cast<double>(report.sub_scores.size());
}

struct ColumnFences {
  std::vector<TukeyFences> fences;
  std::uint64_t rows = 0;
  bool approximate = false;
};

/// Pass 1: per-column reservoir sketches over the whole scan.
ColumnFences fit_fences(const ColumnScan& scan, const ScoreConfig& config) {
  const std::size_t d = scan.names().size();
  std::vector<QuantileSketch> sketches;
  sketches.reserve(d);
  for (std::size_t j = 0; j < d; ++j) sketches.emplace_back(config.quantile_cap, derive_seed(config.seed, j));
  ColumnFences out;
  scan.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    out.rows += static_cast<std::uint64_t>(batch.rows());
    parallel_for(d, config.threads, [&](std::size_t j) {
      const auto col = batch.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index r = 0; r < col.size(); ++r) sketches[j].add(col(r));
    });
  });
  if (out.rows == 0) throw Error(ErrorKind::empty_input, "score input has no rows");
  for (const auto& s : sketches) {
    out.fences.push_back(s.fences());
    out.approximate = out.approximate || !s.exact();
  }
  return out;
}

struct KeptRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool empty() const { return lo > hi; }
};

/// Pass 2: range of the values kept by the inner fences.
std::vector<KeptRange> kept_ranges(const ColumnScan& scan, const std::vector<TukeyFences>& fences,
                                   std::size_t threads) {
  std::vector<KeptRange> ranges(fences.size());
  scan.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    parallel_for(fences.size(), threads, [&](std::size_t j) {
      const auto col = batch.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        const double v = col(r);
        if (fences[j].inside_inner(v)) {
          ranges[j].lo = std::min(ranges[j].lo, v);
          ranges[j].hi = std::max(ranges[j].hi, v);
        }
      }
    });
  });
  return ranges;
}

/// Pass 3: histograms of kept values over each column's shared range. Columns
/// whose kept range is empty or a single point get no histogram.
std::vector<std::optional<Histogram>> kept_histograms(const ColumnScan& scan, const std::vector<TukeyFences>& fences,
                                                      const std::vector<KeptRange>& ranges,
                                                      const ScoreConfig& config) {
  std::vector<std::optional<Histogram>> hists(fences.size());
  for (std::size_t j = 0; j < fences.size(); ++j) {
    if (!ranges[j].empty() && ranges[j].lo < ranges[j].hi) hists[j].emplace(ranges[j].lo, ranges[j].hi, config.bins);
  }
  scan.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    parallel_for(fences.size(), config.threads, [&](std::size_t j) {
      if (!hists[j]) return;
      const auto col = batch.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        if (fences[j].inside_inner(col(r))) hists[j]->add(col(r));
      }
    });
  });
  return hists;
}

std::uint64_t count_rows(const ColumnScan& scan) {
  std::uint64_t rows = 0;
  scan.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) { rows += static_cast<std::uint64_t>(batch.rows()); });
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// SImb

ScoreReport simb_score(const ColumnScan& split, const ScoreConfig& config) {
  ScoreReport report;
  report.kind = ScoreKind::simb;
  report.target = "columns";
  report.splits = split.sources();
  report.config = config;
  if (split.names().empty()) throw Error(ErrorKind::undefined_score, "simb score over zero columns");

  const auto fit = fit_fences(split, config);
  report.row_counts = {fit.rows};
  report.approximate = fit.approximate;
  const auto ranges = kept_ranges(split, fit.fences, config.threads);
  const auto hists = kept_histograms(split, fit.fences, ranges, config);
  for (std::size_t j = 0; j < hists.size(); ++j) {
    // A column that collapses to one value after filtering has all its mass in one bin.
    const double value = hists[j] ? jsd_vs_uniform(*hists[j]) : 1.0;
    report.sub_scores.push_back({split.names()[j], value});
  }
  finish(report);
  return report;
}

// ---------------------------------------------------------------------------
// STood

ScoreReport stood_score(const ColumnScan& a, const ColumnScan& b, const ScoreConfig& config) {
  const ConcatScan both({&a, &b});
  ScoreReport report;
  report.kind = ScoreKind::stood;
  report.target = "columns";
  report.splits = both.sources();
  report.config = config;
  if (a.names().empty()) throw Error(ErrorKind::undefined_score, "stood score over zero columns");

  const std::uint64_t rows_a = count_rows(a);
  const std::uint64_t rows_b = count_rows(b);
  if (rows_a == 0 || rows_b == 0) throw Error(ErrorKind::empty_input, "stood score needs rows in both splits");
  report.row_counts = {rows_a, rows_b};

  const auto fit = fit_fences(both, config);
  report.approximate = fit.approximate;
  const auto ranges = kept_ranges(both, fit.fences, config.threads);
  const auto hist_a = kept_histograms(a, fit.fences, ranges, config);
  const auto hist_b = kept_histograms(b, fit.fences, ranges, config);

  // Columns that collapse to a single kept value are compared by kept counts only.
  std::vector<std::array<std::uint64_t, 2>> point_kept(a.names().size(), {0, 0});
  auto count_kept = [&](const ColumnScan& scan, int side) {
    scan.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
      for (std::size_t j = 0; j < point_kept.size(); ++j) {
        if (hist_a[j]) continue;
        const auto col = batch.col(static_cast<Eigen::Index>(j));
        for (Eigen::Index r = 0; r < col.size(); ++r) {
          if (fit.fences[j].inside_inner(col(r))) ++point_kept[j][static_cast<std::size_t>(side)];
        }
      }
    });
  };
  if (std::any_of(hist_a.begin(), hist_a.end(), [](const auto& h) { return !h; })) {
    count_kept(a, 0);
    count_kept(b, 1);
  }

  for (std::size_t j = 0; j < a.names().size(); ++j) {
    double value = 0.0;
    if (hist_a[j]) {
      const bool a_empty = hist_a[j]->total() == 0;
      const bool b_empty = hist_b[j]->total() == 0;
      // A split with no kept mass shares no support with the other.
      value = (a_empty || b_empty) ? 1.0 : jsd(*hist_a[j], *hist_b[j]);
    } else {
      value = (point_kept[j][0] > 0) == (point_kept[j][1] > 0) ? 0.0 : 1.0;
    }
    report.sub_scores.push_back({a.names()[j], value});
  }
  finish(report);
  return report;
}

// ---------------------------------------------------------------------------
// IO

namespace {

/// Mean of (2/pi) atan|dl/df| over consecutive points sorted by feature. Runs of
/// equal feature values are ordered by label, so only the run's label extremes
/// enter the ratio; pairs inside a run have no defined ratio.
std::optional<double> io_pair_score(const std::vector<Eigen::Index>& order, const Eigen::Ref<const Eigen::VectorXd>& f,
                                    const Eigen::Ref<const Eigen::VectorXd>& l) {
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t i = 0;
  double prev_f = 0.0;
  double prev_max_l = 0.0;
  bool have_prev = false;
  while (i < order.size()) {
    const double fv = f(order[i]);
    double min_l = l(order[i]);
    double max_l = min_l;
    std::size_t j = i + 1;
    while (j < order.size() && f(order[j]) == fv) {
      min_l = std::min(min_l, l(order[j]));
      max_l = std::max(max_l, l(order[j]));
      ++j;
    }
    if (have_prev) {
      const double delta = (min_l - prev_max_l) / (fv - prev_f);
      if (std::isfinite(delta)) {
        sum += (2.0 / std::numbers::pi) * std::atan(std::abs(delta));
        ++count;
      }
    }
    prev_f = fv;
    prev_max_l = max_l;
    have_prev = true;
    i = j;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace

ScoreReport io_score(const ColumnScan& joint, std::size_t feature_count, const ScoreConfig& config) {
  const auto& names = joint.names();
  if (feature_count == 0 || feature_count >= names.size()) {
    throw Error(ErrorKind::configuration, "io score needs at least one feature and one label column");
  }
  if (config.io_row_cap < 2 || config.io_pair_cap == 0) {
    throw Error(ErrorKind::configuration, "io score caps must allow 2 rows and 1 pair");
  }
  const std::size_t dx = feature_count;
  const std::size_t dy = names.size() - feature_count;

  ScoreReport report;
  report.kind = ScoreKind::io;
  report.target = "features x labels";
  report.splits = joint.sources();
  report.config = config;

  // Pair selection happens before reading rows so only the needed columns are sampled.
  const std::uint64_t total_pairs = static_cast<std::uint64_t>(dx) * dy;
  std::vector<std::uint64_t> pairs;
  if (total_pairs <= config.io_pair_cap) {
    pairs.resize(total_pairs);
    std::iota(pairs.begin(), pairs.end(), std::uint64_t{0});
  } else {
    // Floyd's sampling without replacement.
    std::mt19937_64 rng(derive_seed(config.seed, 0x10));
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t k = total_pairs - config.io_pair_cap; k < total_pairs; ++k) {
      const auto t = std::uniform_int_distribution<std::uint64_t>(0, k)(rng);
      if (!chosen.insert(t).second) chosen.insert(k);
    }
    pairs.assign(chosen.begin(), chosen.end());
    std::sort(pairs.begin(), pairs.end());
    report.approximate = true;
  }
  std::vector<std::size_t> needed;  // joint column indices to keep
  std::vector<std::ptrdiff_t> slot(names.size(), -1);
  for (auto p : pairs) {
    for (std::size_t c : {static_cast<std::size_t>(p / dy), dx + static_cast<std::size_t>(p % dy)}) {
      if (slot[c] < 0) {
        slot[c] = static_cast<std::ptrdiff_t>(needed.size());
        needed.push_back(c);
      }
    }
  }
  std::sort(needed.begin(), needed.end());
  for (std::size_t i = 0; i < needed.size(); ++i) slot[needed[i]] = static_cast<std::ptrdiff_t>(i);

  // Row reservoir over the needed columns.
  const std::size_t width = needed.size();
  std::vector<double> sample;  // row-major, width per row
  std::uint64_t rows = 0;
  std::mt19937_64 rng(derive_seed(config.seed, 0x11));
  joint.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
      std::size_t dest = 0;
      if (rows < config.io_row_cap) {
        dest = sample.size() / std::max<std::size_t>(width, 1);
        sample.resize(sample.size() + width);
      } else {
        std::uniform_int_distribution<std::uint64_t> pick(0, rows);
        const auto j = pick(rng);
        if (j >= config.io_row_cap) {
          ++rows;
          continue;
        }
        dest = static_cast<std::size_t>(j);
      }
      for (std::size_t k = 0; k < width; ++k) {
        const double v = batch(r, static_cast<Eigen::Index>(needed[k]));
        if (std::isnan(v)) throw Error(ErrorKind::invalid_value, "NaN in column " + names[needed[k]]);
        sample[dest * width + k] = v;
      }
      ++rows;
    }
  });
  report.row_counts = {rows};
  if (rows < 2) throw Error(ErrorKind::empty_input, "io score needs at least 2 rows");
  if (rows > config.io_row_cap) report.approximate = true;

  const auto n = static_cast<Eigen::Index>(sample.size() / width);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> data(
      sample.data(), n, static_cast<Eigen::Index>(width));

  // Group selected pairs by feature so each feature is sorted once.
  std::map<std::size_t, std::vector<std::size_t>> by_feature;
  for (auto p : pairs) by_feature[static_cast<std::size_t>(p / dy)].push_back(static_cast<std::size_t>(p % dy));
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> groups(by_feature.begin(), by_feature.end());
  std::vector<std::vector<std::optional<double>>> results(groups.size());

  parallel_for(groups.size(), config.threads, [&](std::size_t g) {
    const auto& [feature, labels] = groups[g];
    const Eigen::VectorXd f = data.col(slot[feature]);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return f(x) < f(y); });
    for (auto m : labels) {
      const Eigen::VectorXd l = data.col(slot[dx + m]);
      results[g].push_back(io_pair_score(order, f, l));
    }
  });

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& [feature, labels] = groups[g];
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::string name = names[feature] + "|" + names[dx + labels[i]];
      if (results[g][i]) {
        report.sub_scores.push_back({name, *results[g][i]});
      } else {
        report.excluded.push_back(name);
      }
    }
  }
  finish(report);
  return report;
}

// ---------------------------------------------------------------------------
// Outlier

ScoreReport outlier_score(const ColumnScan& split, const ScoreConfig& config) {
  ScoreReport report;
  report.kind = ScoreKind::outlier;
  report.target = "columns";
  report.splits = split.sources();
  report.config = config;
  if (split.names().empty()) throw Error(ErrorKind::undefined_score, "outlier score over zero columns");

  const auto fit = fit_fences(split, config);
  report.row_counts = {fit.rows};
  report.approximate = fit.approximate;
  const std::size_t d = fit.fences.size();
  std::vector<double> sums(d, 0.0);
  split.scan([&](const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    parallel_for(d, config.threads, [&](std::size_t j) {
      const auto col = batch.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index r = 0; r < col.size(); ++r) sums[j] += config.outlier_function(col(r), fit.fences[j]);
    });
  });
  for (std::size_t j = 0; j < d; ++j) {
    report.sub_scores.push_back({split.names()[j], sums[j] / static_cast<double>(fit.rows)});
  }
  finish(report);
  return report;
}

}  // namespace dsprof
