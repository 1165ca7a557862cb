#include "dsprof/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dsprof/hash.hpp"
#include "dsprof/parallel.hpp"

namespace dsprof {

namespace fs = std::filesystem;

void validate_split_spec(const SplitSpec& spec) {
  for (auto [name, v] : {std::pair{"spatial fraction", spec.spatial_fraction},
                         {"temporal fraction", spec.temporal_fraction},
                         {"val ratio", spec.val_ratio}}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::configuration, std::string(name) + " must lie in [0, 1]");
  }
}

std::string_view to_string(SplitLabel label) {
  switch (label) {
    case SplitLabel::train: return "train";
    case SplitLabel::val: return "val";
    case SplitLabel::test: return "test";
  }
  return "train";
}

namespace {

std::size_t sample_size(double fraction, std::size_t domain) {
  // The epsilon absorbs products like 0.29 * 100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(domain) + 1e-9));
}

/// Indices [0, count) ordered by a salted hash of their key.
template <typename KeyFn>
std::vector<std::size_t> hash_ranked(std::size_t count, std::uint64_t salt, KeyFn key) {
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ranked.emplace_back(unit_hash(salt, key(i)), i);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> out;
  out.reserve(count);
  for (const auto& r : ranked) out.push_back(r.second);
  return out;
}

}  // namespace

CoordinateSample sample_coordinates(const std::vector<std::string>& spatial_domain,
                                    const std::vector<std::vector<double>>& temporal_domains, const SplitSpec& spec) {
  validate_split_spec(spec);
  CoordinateSample out;

  std::vector<std::string> spatial(spatial_domain);
  std::sort(spatial.begin(), spatial.end());
  spatial.erase(std::unique(spatial.begin(), spatial.end()), spatial.end());
  if (spec.spatial_fraction > 0.0 && spatial.empty()) {
    throw Error(ErrorKind::empty_domain, "spatial fraction is positive but there are no spatial coordinates");
  }
  const std::size_t take = sample_size(spec.spatial_fraction, spatial.size());
  const auto ranked = hash_ranked(spatial.size(), derive_seed(spec.seed, 1), [&](std::size_t i) { return spatial[i]; });
  for (std::size_t i = 0; i < take; ++i) out.spatial.push_back(spatial[ranked[i]]);
  for (const auto& f : spec.forced_spatial) out.spatial.push_back(f);
  std::sort(out.spatial.begin(), out.spatial.end());
  out.spatial.erase(std::unique(out.spatial.begin(), out.spatial.end()), out.spatial.end());

  if (spec.temporal_fraction > 0.0 && temporal_domains.empty()) {
    throw Error(ErrorKind::empty_domain, "temporal fraction is positive but there are no time coordinates");
  }
  for (std::size_t c = 0; c < temporal_domains.size(); ++c) {
    std::vector<double> domain(temporal_domains[c]);
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    if (spec.temporal_fraction > 0.0 && domain.empty()) {
      throw Error(ErrorKind::empty_domain, "time component " + std::to_string(c) + " has no values");
    }
    const std::size_t target = sample_size(spec.temporal_fraction, domain.size());
    const std::uint64_t salt = derive_seed(spec.seed, 100 + c);
    std::vector<double> picked;
    if (spec.temporal_block > 1) {
      const std::size_t k = spec.temporal_block;
      const std::size_t blocks = (domain.size() + k - 1) / k;
      const std::size_t wanted = std::min(blocks, (target + k - 1) / k);
      const auto order = hash_ranked(blocks, salt, [](std::size_t b) { return "block:" + std::to_string(b); });
      for (std::size_t i = 0; i < wanted; ++i) {
        const std::size_t b = order[i];
        for (std::size_t v = b * k; v < std::min(domain.size(), (b + 1) * k); ++v) picked.push_back(domain[v]);
      }
    } else {
      const auto order = hash_ranked(domain.size(), salt, [&](std::size_t i) { return format_double(domain[i]); });
      for (std::size_t i = 0; i < target; ++i) picked.push_back(domain[order[i]]);
    }
    std::sort(picked.begin(), picked.end());
    out.temporal.push_back(std::move(picked));
  }
  return out;
}

namespace {

/// Space id, time values and the out-of-distribution predicate of each row.
class CoordinateReader {
 public:
  CoordinateReader(const Dataset& dataset, const SplitSpec& spec) : spec_(&spec) {
    const auto& coords = dataset.schema().coordinates;
    time_ = coords.time;
    space_ = coords.space;
    for (const auto& t : time_) {
      const auto* info = find(dataset, t);
      if (!info) throw Error(ErrorKind::schema, "time coordinate column " + t + " is not in the main table");
      if (info->mapping) throw Error(ErrorKind::schema, "time coordinate column " + t + " must be numeric");
    }
    for (const auto& s : space_) {
      if (!find(dataset, s)) throw Error(ErrorKind::schema, "space coordinate column " + s + " is not in the main table");
    }
  }

  const std::vector<std::string>& time_columns() const { return time_; }
  const std::vector<std::string>& space_columns() const { return space_; }

  void bind(const DataFrameSlice& slice) {
    time_cols_.clear();
    space_cols_.clear();
    for (const auto& t : time_) time_cols_.push_back(&slice.numeric(t));
    for (const auto& s : space_) space_cols_.push_back(slice.index_of(s));
    slice_ = &slice;
  }

  std::string space_id(std::size_t row) const {
    std::string id;
    for (std::size_t i = 0; i < space_cols_.size(); ++i) {
      if (i) id.push_back('|');
      id += slice_->cell_text(space_cols_[i], row);
    }
    return id;
  }

  double time_value(std::size_t component, std::size_t row) const {
    return (*time_cols_[component])(static_cast<Eigen::Index>(row));
  }

  std::string coordinate_key(std::size_t row) const {
    std::string key = space_id(row);
    key.push_back('@');
    for (std::size_t c = 0; c < time_cols_.size(); ++c) {
      if (c) key.push_back(',');
      key += format_double(time_value(c, row));
    }
    return key;
  }

  bool ood(const CoordinateSample& sampled, std::size_t row) const {
    const bool spatial = !space_.empty() && std::binary_search(sampled.spatial.begin(), sampled.spatial.end(), space_id(row));
    bool temporal = false;
    if (!time_.empty()) {
      const bool any = spec_->temporal_match == TemporalMatch::any_component;
      temporal = !any;
      for (std::size_t c = 0; c < time_.size(); ++c) {
        const auto& set = sampled.temporal[c];
        const bool hit = std::binary_search(set.begin(), set.end(), time_value(c, row));
        temporal = any ? (temporal || hit) : (temporal && hit);
      }
    }
    return spec_->combination == Combination::union_of ? (spatial || temporal) : (spatial && temporal);
  }

 private:
  static const ColumnInfo* find(const Dataset& dataset, const std::string& name) {
    for (const auto& c : dataset.layout()) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const SplitSpec* spec_;
  std::vector<std::string> time_;
  std::vector<std::string> space_;
  std::vector<const Eigen::VectorXd*> time_cols_;
  std::vector<std::size_t> space_cols_;
  const DataFrameSlice* slice_ = nullptr;
};

}  // namespace

std::array<std::size_t, 3> SplitAssignment::counts() const {
  std::array<std::size_t, 3> c{};
  for (const auto& source : labels) {
    for (auto l : source) ++c[static_cast<std::size_t>(l)];
  }
  return c;
}

std::size_t SplitAssignment::size() const {
  std::size_t n = 0;
  for (const auto& source : labels) n += source.size();
  return n;
}

SplitAssignment assign_splits(const Dataset& dataset, const SplitSpec& spec, std::size_t threads,
                              std::size_t batch_size) {
  validate_split_spec(spec);
  CoordinateReader reader(dataset, spec);
  SplitAssignment out;
  out.spec = spec;
  out.time_columns = reader.time_columns();
  out.space_columns = reader.space_columns();
  out.sources = dataset.split_names();

  for (const auto& [column, values] : spec.forced_temporal) {
    if (std::find(out.time_columns.begin(), out.time_columns.end(), column) == out.time_columns.end()) {
      throw Error(ErrorKind::schema, "forced temporal values for unknown time column " + column);
    }
  }

  // Pass 1: coordinate domains.
  std::set<std::string> spatial;
  std::vector<std::set<double>> temporal(out.time_columns.size());
  for (const auto& source : out.sources) {
    auto stream = dataset.stream(source, batch_size);
    while (auto slice = stream.next()) {
      reader.bind(*slice);
      for (std::size_t r = 0; r < slice->rows; ++r) {
        if (!out.space_columns.empty()) spatial.insert(reader.space_id(r));
        for (std::size_t c = 0; c < temporal.size(); ++c) temporal[c].insert(reader.time_value(c, r));
      }
    }
  }
  std::vector<std::vector<double>> temporal_domains;
  for (const auto& t : temporal) temporal_domains.emplace_back(t.begin(), t.end());
  out.sampled = sample_coordinates({spatial.begin(), spatial.end()}, temporal_domains, spec);
  for (std::size_t c = 0; c < out.time_columns.size(); ++c) {
    auto it = spec.forced_temporal.find(out.time_columns[c]);
    if (it == spec.forced_temporal.end()) continue;
    auto& set = out.sampled.temporal[c];
    set.insert(set.end(), it->second.begin(), it->second.end());
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }

  // Pass 2: labels.
  const std::uint64_t salt = derive_seed(spec.seed, 2);
  for (const auto& source : out.sources) {
    auto& labels = out.labels.emplace_back();
    auto stream = dataset.stream(source, batch_size);
    while (auto slice = stream.next()) {
      reader.bind(*slice);
      const std::size_t base = labels.size();
      labels.resize(base + slice->rows);
      parallel_for(slice->rows, threads, [&](std::size_t r) {
        SplitLabel label = SplitLabel::train;
        if (reader.ood(out.sampled, r)) {
          label = unit_hash(salt, reader.coordinate_key(r)) < spec.val_ratio ? SplitLabel::val : SplitLabel::test;
        }
        labels[base + r] = label;
      });
    }
  }

  const auto counts = out.counts();
  if (out.size() > 0 && counts[0] == 0) out.warnings.emplace_back("degenerate split: no training points remain");
  if (out.size() > 0 && counts[0] == out.size() && (spec.spatial_fraction > 0 || spec.temporal_fraction > 0)) {
    out.warnings.emplace_back("degenerate split: no out-of-distribution points were selected");
  }
  return out;
}

OodReport verify_ood(const SplitAssignment& assignment, const Dataset& dataset, std::size_t batch_size) {
  CoordinateReader reader(dataset, assignment.spec);
  if (assignment.sources != dataset.split_names() || assignment.labels.size() != assignment.sources.size()) {
    throw Error(ErrorKind::schema_mismatch, "assignment was made for different tables");
  }
  OodReport report;
  std::vector<std::string> leaks;
  std::size_t leak_count = 0;
  for (std::size_t s = 0; s < assignment.sources.size(); ++s) {
    const auto& labels = assignment.labels[s];
    std::size_t rows = 0;
    auto stream = dataset.stream(assignment.sources[s], batch_size);
    while (auto slice = stream.next()) {
      reader.bind(*slice);
      for (std::size_t r = 0; r < slice->rows; ++r, ++rows) {
        if (rows >= labels.size()) break;
        if (labels[rows] == SplitLabel::train && reader.ood(assignment.sampled, r)) {
          ++leak_count;
          if (leaks.size() < 20) {
            leaks.push_back(assignment.sources[s] + " row " + std::to_string(rows) + " (" + reader.coordinate_key(r) + ")");
          }
        }
      }
    }
    if (rows != labels.size()) {
      throw Error(ErrorKind::schema_mismatch, "assignment for " + assignment.sources[s] + " covers " +
                                                  std::to_string(labels.size()) + " rows, table has " +
                                                  std::to_string(rows));
    }
  }
  if (leak_count > 0) {
    std::string msg = std::to_string(leak_count) + " training point(s) carry sampled coordinates:";
    for (const auto& l : leaks) msg += "\n  " + l;
    throw Error(ErrorKind::leakage, msg);
  }
  report.points = assignment.size();
  report.counts = assignment.counts();
  for (std::size_t i = 0; i < 3; ++i) {
    report.shares[i] = report.points ? static_cast<double>(report.counts[i]) / static_cast<double>(report.points) : 0.0;
  }
  return report;
}

nlohmann::ordered_json assignment_metadata(const SplitAssignment& a) {
  nlohmann::ordered_json j;
  j["spec"] = {{"spatial_fraction", a.spec.spatial_fraction},
               {"temporal_fraction", a.spec.temporal_fraction},
               {"mode", a.spec.combination == Combination::union_of ? "union" : "intersection"},
               {"temporal_match", a.spec.temporal_match == TemporalMatch::any_component ? "any" : "all"},
               {"val_ratio", a.spec.val_ratio},
               {"temporal_block", a.spec.temporal_block},
               {"seed", a.spec.seed}};
  j["coordinates"] = {{"time", a.time_columns}, {"space", a.space_columns}};
  nlohmann::ordered_json temporal = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < a.time_columns.size(); ++c) temporal[a.time_columns[c]] = a.sampled.temporal[c];
  j["sampled"] = {{"spatial", a.sampled.spatial}, {"temporal", temporal}};
  const auto counts = a.counts();
  j["counts"] = {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}};
  j["sources"] = a.sources;
  j["warnings"] = a.warnings;
  return j;
}

void write_assignment(const SplitAssignment& a, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
  CsvWriter writer(out_dir / "assignment.csv");
  writer.write_row(std::vector<std::string>{"source", "row", "split"});
  std::vector<std::string> row(3);
  for (std::size_t s = 0; s < a.sources.size(); ++s) {
    for (std::size_t r = 0; r < a.labels[s].size(); ++r) {
      row[0] = a.sources[s];
      row[1] = std::to_string(r);
      row[2] = std::string(to_string(a.labels[s][r]));
      writer.write_row(row);
    }
  }
  writer.close();
  std::ofstream meta(out_dir / "assignment.json", std::ios::binary);
  if (!meta) throw Error(ErrorKind::io, "cannot write assignment.json");
  meta << assignment_metadata(a).dump(2) << '\n';
}

fs::path materialize_splits(const SplitAssignment& a, const Dataset& dataset, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetSchema schema = dataset.schema();
  schema.tables = {{"train", "train.csv"}, {"val", "val.csv"}, {"test", "test.csv"}};
  const auto counts = a.counts();
  if (a.size() > 0) {
    const double n = static_cast<double>(a.size());
    schema.shares = SplitShares{static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n,
                                static_cast<double>(counts[2]) / n};
  }

  const auto& layout = dataset.layout();
  std::vector<std::string> header;
  for (const auto& c : layout) header.push_back(c.name);
  std::array<CsvWriter, 3> writers{CsvWriter(out_dir / "train.csv"), CsvWriter(out_dir / "val.csv"),
                                   CsvWriter(out_dir / "test.csv")};
  for (auto& w : writers) w.write_row(header);
  std::vector<std::string> row(layout.size());
  for (std::size_t s = 0; s < a.sources.size(); ++s) {
    std::size_t r0 = 0;
    auto stream = dataset.stream(a.sources[s], 4096);
    while (auto slice = stream.next()) {
      for (std::size_t r = 0; r < slice->rows; ++r) {
        for (std::size_t c = 0; c < layout.size(); ++c) row[c] = slice->cell_text(c, r);
        writers[static_cast<std::size_t>(a.labels[s].at(r0 + r))].write_row(row);
      }
      r0 += slice->rows;
    }
  }
  for (auto& w : writers) w.close();

  const fs::path source_dir = dataset.manifest_path().parent_path();
  for (const auto& m : schema.mappings) {
    const fs::path target = out_dir / m.file;
    fs::create_directories(target.parent_path(), ec);
    fs::copy_file(source_dir / m.file, target, fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error(ErrorKind::io, "cannot copy side store " + m.file + ": " + ec.message());
  }
  const fs::path manifest = out_dir / "manifest.json";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + manifest.string());
  out << dump_schema(schema);
  return manifest;
}

}  // namespace dsprof
