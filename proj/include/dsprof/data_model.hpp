#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dsprof/geometry.hpp"

namespace dsprof {

/// A coordinate in time and space. Either part may be empty, not both.
struct Coordinate {
  Eigen::VectorXd time;
  Eigen::VectorXd space;
};

enum class ComponentKind { time, space, space_time };
enum class ValueClass { numeric, ordinal, one_hot, token_sequence };

std::string_view to_string(ComponentKind kind);
std::string_view to_string(ValueClass value_class);

/// Fixed dimension when min == max, otherwise a variable-length range.
struct Dimension {
  std::size_t min = 1;
  std::size_t max = 1;

  static Dimension exactly(std::size_t d) { return {d, d}; }
  static Dimension between(std::size_t lo, std::size_t hi) { return {lo, hi}; }
  bool fixed() const { return min == max; }
  bool contains(std::size_t d) const { return d >= min && d <= max; }
  friend bool operator==(const Dimension&, const Dimension&) = default;
};

struct SubFeature {
  std::string name;
  Dimension dimension;
  ValueClass value_class = ValueClass::numeric;
  // Widths of nested sub-sub-features. A variable-length block with nested
  // widths is a matrix whose rows have sum(nested) entries.
  std::vector<std::size_t> nested;
};

struct Component {
  ComponentKind kind = ComponentKind::time;
  std::vector<SubFeature> sub_features;
};

/// Main-table columns holding the time and space coordinates of each point.
struct CoordinateSpec {
  std::vector<std::string> time;
  std::vector<std::string> space;
};

/// Main-table column whose values are identifiers into a side file.
struct MappingRef {
  std::string column;
  std::string file;
  bool regular = true;
};

struct SplitShares {
  double train = 1.0;
  double val = 0.0;
  double test = 0.0;
};

struct DatasetSchema {
  std::string name;
  std::vector<Component> features;
  std::vector<Component> labels;  // empty for unlabeled datasets
  CoordinateSpec coordinates;
  std::vector<MappingRef> mappings;
  std::optional<SplitShares> shares;
  // Split name -> main table file, relative to the manifest directory.
  std::vector<std::pair<std::string, std::string>> tables;

  const MappingRef* mapping_for(std::string_view column) const;
  const SubFeature* find_sub_feature(std::string_view name) const;
  bool has_labels() const { return !labels.empty(); }
};

/// Returns one message per violated invariant, each prefixed by the offending
/// field. Empty means valid.
std::vector<std::string> validate_schema(const DatasetSchema& schema);

/// Parses a JSON manifest. Syntax errors carry line and column; structural
/// errors name the JSON path. Does not run validate_schema.
DatasetSchema parse_schema(std::string_view text);
DatasetSchema load_schema(const std::filesystem::path& manifest);
std::string dump_schema(const DatasetSchema& schema);

/// Components in flatten order: time, space, space-time.
std::vector<const Component*> ordered_components(const std::vector<Component>& components);

enum class ColumnRole { feature, label, coordinate };

/// One main-table column and what it holds.
struct ColumnInfo {
  std::string name;
  ColumnRole role = ColumnRole::feature;
  const SubFeature* sub_feature = nullptr;  // null for coordinate-only columns
  std::size_t element = 0;                  // index within a multi-column sub-feature
  const MappingRef* mapping = nullptr;      // set when the column holds identifiers
};

/// Main-table layout implied by a schema: feature columns in flatten order, then
/// label columns, then coordinate-only columns. A sub-feature of dimension 1 or
/// a mapped sub-feature is one column named after it; a fixed dimension d > 1
/// becomes columns name_0 .. name_{d-1}.
std::vector<ColumnInfo> main_table_layout(const DatasetSchema& schema);

/// Sum of declared dimensions (max for ranges).
std::size_t max_feature_dimension(const DatasetSchema& schema);
std::size_t max_label_dimension(const DatasetSchema& schema);
std::size_t min_feature_dimension(const DatasetSchema& schema);
std::size_t min_label_dimension(const DatasetSchema& schema);

/// A data point as sub-feature name -> values, already resolved from side files.
struct DataPoint {
  std::map<std::string, Eigen::VectorXd, std::less<>> values;
};

struct FlatPoint {
  Eigen::VectorXd features;
  std::optional<Eigen::VectorXd> labels;
};

/// Concatenates time, space, then space-time components, sub-features in
/// declared order. Throws shape naming the sub-feature on a length mismatch.
FlatPoint flatten_point(const DataPoint& point, const DatasetSchema& schema);

}  // namespace dsprof
