#include "dsprof/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dsprof/csv.hpp"
#include "dsprof/hash.hpp"

namespace dsprof {

std::vector<std::string> build_vocabulary(const std::vector<std::vector<std::string>>& sequences) {
  std::set<std::string> words;
  for (const auto& s : sequences) words.insert(s.begin(), s.end());
  return {words.begin(), words.end()};
}

Eigen::MatrixXd bag_of_words(const std::vector<std::vector<std::string>>& sequences,
                             const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) throw Error(ErrorKind::configuration, "bag-of-words vocabulary is empty");
  if (!std::is_sorted(vocabulary.begin(), vocabulary.end())) {
    throw Error(ErrorKind::configuration, "bag-of-words vocabulary must be sorted");
  }
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sequences.size()),
                                                 static_cast<Eigen::Index>(vocabulary.size()));
  for (std::size_t r = 0; r < sequences.size(); ++r) {
    for (const auto& word : sequences[r]) {
      auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), word);
      if (it != vocabulary.end() && *it == word) counts(static_cast<Eigen::Index>(r), it - vocabulary.begin()) += 1.0;
    }
  }
  return counts;
}

Eigen::VectorXd molecule_aggregate(const Eigen::Ref<const Eigen::MatrixXd>& atoms, const std::vector<double>& elements) {
  if (atoms.rows() == 0) throw Error(ErrorKind::empty_input, "molecule has no atoms");
  if (atoms.cols() < 1) throw Error(ErrorKind::shape, "atom rows need an element id column");
  const auto e = static_cast<Eigen::Index>(elements.size());
  const Eigen::Index p = atoms.cols() - 1;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(e + 2 * p);
  for (Eigen::Index a = 0; a < atoms.rows(); ++a) {
    auto it = std::lower_bound(elements.begin(), elements.end(), atoms(a, 0));
    if (it != elements.end() && *it == atoms(a, 0)) out(it - elements.begin()) += 1.0;
  }
  if (p > 0) {
    const auto props = atoms.rightCols(p);
    const Eigen::RowVectorXd mean = props.colwise().mean();
    out.segment(e, p) = mean.transpose();
    out.segment(e + p, p) = ((props.rowwise() - mean).array().square().colwise().sum() /
                             static_cast<double>(atoms.rows()))
                                .sqrt()
                                .transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Featurizer

Featurizer::Featurizer(const Dataset& dataset, FeaturizerKind kind, const std::string& fit_split)
    : dataset_(&dataset), kind_(kind) {
  const auto& schema = dataset.schema();
  if (!schema.has_labels()) throw Error(ErrorKind::unsupported_task, "dataset has no labels to predict");
  for (const auto& info : dataset.layout()) {
    if (info.role == ColumnRole::coordinate) continue;
    Column col;
    col.info = &info;
    const SubFeature& sf = *info.sub_feature;
    if (info.mapping) {
      col.store = &dataset.side_store(info.name);
      if (info.mapping->regular && sf.dimension.fixed() && sf.value_class != ValueClass::token_sequence) {
        col.mode = Column::Mode::regular;
        col.width = sf.dimension.max;
      } else if (sf.value_class == ValueClass::token_sequence) {
        col.mode = Column::Mode::tokens;
      } else if (!sf.nested.empty()) {
        col.mode = Column::Mode::nested;
      } else {
        col.mode = Column::Mode::flat;
        col.width = 3;
      }
    }
    if (info.role == ColumnRole::label) {
      if (col.mode != Column::Mode::numeric && col.mode != Column::Mode::regular) {
        throw Error(ErrorKind::unsupported_task, "label sub-feature '" + sf.name +
                                                     "' has no fixed length; the baseline model cannot predict it");
      }
      labels_.push_back(std::move(col));
    } else {
      if (kind == FeaturizerKind::flatten && col.mode != Column::Mode::numeric && col.mode != Column::Mode::regular) {
        throw Error(ErrorKind::unsupported_feature, "sub-feature '" + sf.name + "' is not fixed-length numeric");
      }
      features_.push_back(std::move(col));
    }
  }

  const bool needs_fit = std::any_of(features_.begin(), features_.end(), [](const Column& c) {
    return c.mode == Column::Mode::tokens || c.mode == Column::Mode::nested;
  });
  if (!needs_fit) return;
  if (!dataset.has_split(fit_split)) throw Error(ErrorKind::not_found, "split '" + fit_split + "' not in dataset");
  std::vector<std::set<std::string>> words(features_.size());
  std::vector<std::set<double>> elements(features_.size());
  auto stream = dataset.stream(fit_split, 4096);
  while (auto slice = stream.next()) {
    for (std::size_t c = 0; c < features_.size(); ++c) {
      auto& col = features_[c];
      if (col.mode != Column::Mode::tokens && col.mode != Column::Mode::nested) continue;
      for (const auto& id : slice->text(col.info->name)) {
        const auto& block = col.store->at(id);
        if (col.mode == Column::Mode::tokens) {
          const auto* tokens = std::get_if<std::vector<Token>>(&block);
          if (!tokens) throw Error(ErrorKind::shape, "block '" + id + "' of " + col.info->name + " is not a token sequence");
          for (const auto& t : *tokens) words[c].insert(t.text);
        } else {
          const auto* atoms = std::get_if<Eigen::MatrixXd>(&block);
          if (!atoms) throw Error(ErrorKind::shape, "block '" + id + "' of " + col.info->name + " is not nested");
          for (Eigen::Index a = 0; a < atoms->rows(); ++a) elements[c].insert((*atoms)(a, 0));
        }
      }
    }
  }
  for (std::size_t c = 0; c < features_.size(); ++c) {
    auto& col = features_[c];
    if (col.mode == Column::Mode::tokens) {
      col.vocabulary.assign(words[c].begin(), words[c].end());
      if (col.vocabulary.empty()) {
        throw Error(ErrorKind::configuration, "bag-of-words vocabulary for '" + col.info->name + "' is empty");
      }
      col.width = col.vocabulary.size();
    } else if (col.mode == Column::Mode::nested) {
      col.elements.assign(elements[c].begin(), elements[c].end());
      std::size_t per_atom = 0;
      for (auto w : col.info->sub_feature->nested) per_atom += w;
      if (per_atom < 1) throw Error(ErrorKind::schema, "nested sub-feature '" + col.info->name + "' has no columns");
      col.width = col.elements.size() + 2 * (per_atom - 1);
    }
  }
}

TaskKind Featurizer::inferred_task() const {
  if (labels_.size() == 1 && labels_.front().width == 1) {
    const auto vc = labels_.front().info->sub_feature->value_class;
    if (vc == ValueClass::ordinal || vc == ValueClass::one_hot) return TaskKind::classification;
  }
  return TaskKind::regression;
}

std::string Featurizer::id() const {
  std::string out = kind_ == FeaturizerKind::flatten ? "flatten" : "auto";
  for (const auto& c : features_) {
    if (c.mode == Column::Mode::tokens) out += "+bag-of-words(" + c.info->name + ")";
    if (c.mode == Column::Mode::nested) out += "+molecule-aggregate(" + c.info->name + ")";
    if (c.mode == Column::Mode::flat) out += "+length-mean-std(" + c.info->name + ")";
  }
  return out;
}

namespace {

std::size_t total_width(const auto& columns) {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.width;
  return w;
}

}  // namespace

Featurized Featurizer::transform(const DataFrameSlice& table) const {
  const auto rows = static_cast<Eigen::Index>(table.rows);
  Featurized out;
  out.featurizer = id();
  out.x.resize(rows, static_cast<Eigen::Index>(total_width(features_)));
  out.y.resize(rows, static_cast<Eigen::Index>(total_width(labels_)));

  auto fill = [&](const std::vector<Column>& columns, Eigen::MatrixXd& dest) {
    Eigen::Index at = 0;
    for (const auto& col : columns) {
      const auto w = static_cast<Eigen::Index>(col.width);
      if (col.mode == Column::Mode::numeric) {
        dest.col(at) = table.numeric(col.info->name);
        at += w;
        continue;
      }
      const auto& ids = table.text(col.info->name);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& block = col.store->at(ids[static_cast<std::size_t>(r)]);
        auto cell = dest.block(r, at, 1, w);
        switch (col.mode) {
          case Column::Mode::regular:
            cell = std::get<Eigen::VectorXd>(block).transpose();
            break;
          case Column::Mode::tokens: {
            std::vector<std::string> words;
            for (const auto& t : std::get<std::vector<Token>>(block)) words.push_back(t.text);
            cell = bag_of_words({words}, col.vocabulary);
            break;
          }
          case Column::Mode::nested: {
            const auto* atoms = std::get_if<Eigen::MatrixXd>(&block);
            if (!atoms || static_cast<Eigen::Index>(col.elements.size()) + 2 * (atoms->cols() - 1) != w) {
              throw Error(ErrorKind::shape, "block '" + ids[static_cast<std::size_t>(r)] + "' of " + col.info->name +
                                                " does not match the declared nesting");
            }
            cell = molecule_aggregate(*atoms, col.elements).transpose();
            break;
          }
          case Column::Mode::flat: {
            Eigen::VectorXd v;
            if (const auto* vec = std::get_if<Eigen::VectorXd>(&block)) {
              v = *vec;
            } else if (const auto* m = std::get_if<Eigen::MatrixXd>(&block)) {
              v = m->reshaped<Eigen::RowMajor>();
            } else {
              throw Error(ErrorKind::shape, "block of " + col.info->name + " is not numeric");
            }
            const double n = static_cast<double>(v.size());
            const double mean = v.size() ? v.mean() : 0.0;
            const double sd = v.size() ? std::sqrt((v.array() - mean).square().sum() / n) : 0.0;
            cell << n, mean, sd;
            break;
          }
          case Column::Mode::numeric:
            break;
        }
      }
      at += w;
    }
  };
  fill(features_, out.x);
  fill(labels_, out.y);
  if (!out.x.allFinite() || !out.y.allFinite()) throw Error(ErrorKind::invalid_value, "featurized data is not finite");
  return out;
}

// ---------------------------------------------------------------------------
// Harness

std::vector<std::size_t> subsample_rows(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorKind::configuration, "sample ratio must lie in (0, 1]");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (ratio == 1.0) return all;
  const auto keep = std::min(n, std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)))));
  std::vector<std::size_t> out;
  out.reserve(keep);
  std::mt19937_64 rng(derive_seed(seed, 0x5a));
  std::sample(all.begin(), all.end(), std::back_inserter(out), static_cast<std::ptrdiff_t>(keep), rng);
  return out;
}

BenchmarkResult run_benchmark(const Dataset& dataset, const BenchmarkConfig& config) {
  validate_rf_config(config.forest);
  for (const auto& s : {config.train_split, config.test_split}) {
    if (!dataset.has_split(s)) throw Error(ErrorKind::not_found, "benchmark needs split '" + s + "'");
  }
  const Featurizer featurizer(dataset, config.featurizer, config.train_split);
  const Featurized train = featurizer.transform(read_split(dataset, config.train_split));
  const Featurized test = featurizer.transform(read_split(dataset, config.test_split));
  if (test.x.rows() == 0) throw Error(ErrorKind::empty_input, "test split has no rows");

  RFConfig rf = config.forest;
  rf.task = config.task.value_or(featurizer.inferred_task());
  const auto keep = subsample_rows(static_cast<std::size_t>(train.x.rows()), rf.sample_ratio, rf.seed);
  const auto idx = Eigen::Map<const Eigen::Matrix<std::size_t, Eigen::Dynamic, 1>>(keep.data(), static_cast<Eigen::Index>(keep.size()));
  const Eigen::MatrixXd x = train.x(idx, Eigen::all);
  const Eigen::MatrixXd y = train.y(idx, Eigen::all);

  const auto start = std::chrono::steady_clock::now();
  const auto model = RandomForest::fit(x, y, rf);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  const Eigen::MatrixXd predicted = model.predict(test.x);

  BenchmarkResult result;
  result.dataset = dataset.schema().name;
  result.task = rf.task;
  result.metric = rf.task == TaskKind::classification ? "accuracy" : "r2";
  result.value = rf.task == TaskKind::classification ? accuracy(test.y, predicted) : r2(test.y, predicted);
  result.fit_seconds = elapsed.count();
  result.train_rows = keep.size();
  result.test_rows = static_cast<std::size_t>(test.x.rows());
  result.seconds_per_1000 = result.fit_seconds / (static_cast<double>(result.train_rows) / 1000.0);
  result.featurizer = train.featurizer;
  result.config = rf;
  return result;
}

nlohmann::ordered_json to_json(const BenchmarkResult& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["task"] = r.task == TaskKind::classification ? "classification" : "regression";
  j["metric"] = r.metric;
  j["value"] = r.value;
  j["fit_seconds"] = r.fit_seconds;
  j["seconds_per_1000"] = r.seconds_per_1000;
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  j["featurizer"] = r.featurizer;
  j["config"] = {{"trees", r.config.trees},
                 {"max_depth", r.config.max_depth},
                 {"sample_ratio", r.config.sample_ratio},
                 {"bootstrap", r.config.bootstrap},
                 {"max_features", r.config.max_features},
                 {"seed", r.config.seed}};
  return j;
}

std::string benchmark_header() { return "dataset\tsample_ratio\tmax_depth\tmetric\tvalue\ttime_s\ttime_per_1000_s"; }

std::string benchmark_row(const BenchmarkResult& r) {
  std::ostringstream out;
  out << r.dataset << '\t' << format_double(r.config.sample_ratio) << '\t' << r.config.max_depth << '\t' << r.metric
      << '\t' << format_double(r.value) << '\t' << format_double(r.fit_seconds) << '\t'
      << format_double(r.seconds_per_1000);
  return out.str();
}

}  // namespace dsprof
