#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dsprof/csv.hpp"
#include "dsprof/data_model.hpp"

namespace dsprof {

/// A text span: start offset, end offset, text.
struct Token {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::string text;
  friend bool operator==(const Token&, const Token&) = default;
};

/// Value block stored in a side file: a flat vector, a matrix of nested rows
/// (e.g. one row per atom), or a token sequence.
using SideBlock = std::variant<Eigen::VectorXd, Eigen::MatrixXd, std::vector<Token>>;

/// Number of scalar values (or tokens) a block contributes.
std::size_t block_length(const SideBlock& block);
bool blocks_equal(const SideBlock& a, const SideBlock& b);

/// Identifier -> value block. Regular stores are tabular files whose first column
/// is the identifier; irregular stores are JSON objects mapping identifier to an
/// array (numbers, arrays of numbers, or [begin, end, "text"] tuples).
class SideStore {
 public:
  SideStore() = default;
  explicit SideStore(bool regular) : regular_(regular) {}

  static SideStore load(const std::filesystem::path& path, bool regular);
  void save(const std::filesystem::path& path) const;

  void insert(std::string id, SideBlock block);

  /// Throws dangling_reference for unknown identifiers.
  const SideBlock& at(std::string_view id) const;
  const SideBlock* find(std::string_view id) const;

  bool regular() const { return regular_; }
  /// Uniform block length of a regular store (0 while empty).
  std::size_t width() const { return width_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  bool regular_ = true;
  std::size_t width_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, SideBlock, Hash, std::equal_to<>> blocks_;
};

using TextColumn = std::vector<std::string>;
using BlockColumn = std::vector<SideBlock>;
using ColumnData = std::variant<Eigen::VectorXd, TextColumn, BlockColumn>;

std::size_t column_rows(const ColumnData& column);

/// Columnar batch of consecutive rows from one table.
struct DataFrameSlice {
  std::string split;
  std::size_t first_row = 0;
  std::size_t rows = 0;
  std::vector<std::string> names;
  std::vector<ColumnData> columns;

  /// Throws schema_mismatch when the column is absent.
  std::size_t index_of(std::string_view name) const;
  bool has(std::string_view name) const;
  const Eigen::VectorXd& numeric(std::string_view name) const;
  const TextColumn& text(std::string_view name) const;
  const BlockColumn& blocks(std::string_view name) const;

  /// Cell rendered as table text (shortest round-trip for numbers).
  std::string cell_text(std::size_t column, std::size_t row) const;
};

class Dataset;

/// Bounded-memory forward iterator over one table. Holds at most one batch.
class SliceStream {
 public:
  /// Next batch of up to batch_size rows, or nullopt at end of table.
  std::optional<DataFrameSlice> next();

 private:
  friend class Dataset;
  SliceStream(const Dataset& dataset, std::string split, std::size_t batch_size);

  const Dataset* dataset_;
  std::string split_;
  std::size_t batch_size_;
  CsvReader reader_;
  std::vector<std::size_t> file_index_;  // layout column -> file column
  std::vector<std::string> fields_;
  bool done_ = false;
};

struct OpenOptions {
  // Scan every table once at open to check row arity and count rows.
  bool verify_rows = true;
};

/// An opened dataset: schema, per-split main tables and loaded side stores.
/// Main tables are never materialized; use stream() to iterate.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& manifest, const OpenOptions& options = {});

  const DatasetSchema& schema() const { return *schema_; }
  const std::vector<ColumnInfo>& layout() const { return layout_; }
  const std::filesystem::path& manifest_path() const { return manifest_; }

  std::vector<std::string> split_names() const;
  bool has_split(std::string_view split) const;
  std::filesystem::path table_path(std::string_view split) const;
  /// Row count from the open-time scan. Throws configuration when rows were not verified.
  std::size_t row_count(std::string_view split) const;
  std::size_t total_rows() const;

  SliceStream stream(std::string_view split, std::size_t batch_size) const;

  /// Side store backing a mapping column.
  const SideStore& side_store(std::string_view column) const;

 private:
  struct Table {
    std::string split;
    std::filesystem::path path;
    std::optional<std::size_t> rows;
  };
  const Table& table(std::string_view split) const;

  std::shared_ptr<const DatasetSchema> schema_;
  std::vector<ColumnInfo> layout_;
  std::filesystem::path manifest_;
  std::vector<Table> tables_;
  std::map<std::string, std::shared_ptr<const SideStore>, std::less<>> side_stores_;
};

/// Same as dataset.stream(split, batch_size); batch_size must be >= 1.
SliceStream stream_slices(const Dataset& dataset, std::string_view split, std::size_t batch_size);

/// Reads one whole split into a single slice.
DataFrameSlice read_split(const Dataset& dataset, std::string_view split);

enum class MappingMode { eager, deferred };

/// O(1) per-row access to mapped blocks without copying them into the slice.
class MappingCursor {
 public:
  MappingCursor(const SideStore& store, TextColumn ids);
  const SideBlock& at(std::size_t row) const;
  std::size_t size() const { return ids_.size(); }

 private:
  const SideStore* store_;
  TextColumn ids_;
  std::vector<const SideBlock*> blocks_;
};

/// Eager: regular stores replace the identifier column with numeric columns
/// column_0 .. column_{w-1}; irregular stores replace it with a block column.
DataFrameSlice resolve_eager(const DataFrameSlice& slice, std::string_view column, const SideStore& store);
MappingCursor resolve_deferred(const DataFrameSlice& slice, std::string_view column, const SideStore& store);
std::variant<DataFrameSlice, MappingCursor> resolve_mapping(const DataFrameSlice& slice, std::string_view column,
                                                            const SideStore& store, MappingMode mode);

enum class Target { features, labels, joint };

/// Names of the numeric columns a slice flattens to for the target, with
/// regular mappings expanded. Throws unsupported_feature when a variable-length
/// or token sub-feature is part of the target.
std::vector<std::string> numeric_column_names(const Dataset& dataset, Target target);

/// Rows x columns numeric matrix of the target, in numeric_column_names order.
Eigen::MatrixXd numeric_matrix(const Dataset& dataset, const DataFrameSlice& slice, Target target);

/// A complete dataset held in memory, for writing.
struct InMemoryDataset {
  DatasetSchema schema;
  std::map<std::string, DataFrameSlice> tables;       // split -> rows, columns named per main_table_layout
  std::map<std::string, SideStore> side_stores;        // mapping column -> store
};

/// Writes manifest.json, one table per split and every side store into out_dir.
void write_dataset(const InMemoryDataset& data, const std::filesystem::path& out_dir);

}  // namespace dsprof
