#include "dsprof/storage.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dsprof/error.hpp"

namespace dsprof {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::size_t block_length(const SideBlock& block) {
  return std::visit(
      [](const auto& b) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(b)>, std::vector<Token>>) {
          return b.size();
        } else {
          return static_cast<std::size_t>(b.size());
        }
      },
      block);
}

bool blocks_equal(const SideBlock& a, const SideBlock& b) {
  if (a.index() != b.index()) return false;
  if (const auto* va = std::get_if<Eigen::VectorXd>(&a)) {
    const auto& vb = std::get<Eigen::VectorXd>(b);
    return va->size() == vb.size() && *va == vb;
  }
  if (const auto* ma = std::get_if<Eigen::MatrixXd>(&a)) {
    const auto& mb = std::get<Eigen::MatrixXd>(b);
    return ma->rows() == mb.rows() && ma->cols() == mb.cols() && *ma == mb;
  }
  return std::get<std::vector<Token>>(a) == std::get<std::vector<Token>>(b);
}

// ---------------------------------------------------------------------------
// SideStore

void SideStore::insert(std::string id, SideBlock block) {
  if (regular_) {
    if (!std::holds_alternative<Eigen::VectorXd>(block)) {
      throw Error(ErrorKind::shape, "regular side store blocks must be flat vectors (id " + id + ")");
    }
    const auto len = block_length(block);
    if (ids_.empty()) {
      width_ = len;
    } else if (len != width_) {
      throw Error(ErrorKind::shape, "regular side store block " + id + " has length " + std::to_string(len) +
                                        ", expected " + std::to_string(width_));
    }
  }
  if (blocks_.contains(id)) throw Error(ErrorKind::schema, "duplicate side store identifier " + id);
  ids_.push_back(id);
  blocks_.emplace(std::move(id), std::move(block));
}

const SideBlock* SideStore::find(std::string_view id) const {
  auto it = blocks_.find(id);
  return it == blocks_.end() ? nullptr : &it->second;
}

const SideBlock& SideStore::at(std::string_view id) const {
  if (const auto* b = find(id)) return *b;
  throw Error(ErrorKind::dangling_reference, "identifier '" + std::string(id) + "' not in side store");
}

namespace {

SideBlock block_from_json(const Json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorKind::parse, where + ": block must be an array");
  if (v.empty()) return Eigen::VectorXd();
  if (v.front().is_number()) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw Error(ErrorKind::parse, where + ": mixed block element types");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }
  const bool tokens = v.front().is_array() && v.front().size() == 3 && v.front()[2].is_string();
  if (tokens) {
    std::vector<Token> out;
    for (const auto& t : v) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
          !t[2].is_string()) {
        throw Error(ErrorKind::parse, where + ": token must be [begin, end, \"text\"]");
      }
      out.push_back({t[0].get<std::int64_t>(), t[1].get<std::int64_t>(), t[2].get<std::string>()});
    }
    return out;
  }
  if (!v.front().is_array()) throw Error(ErrorKind::parse, where + ": unsupported block element");
  const std::size_t width = v.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != width) {
      throw Error(ErrorKind::parse, where + ": nested rows must share one width");
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (!v[r][c].is_number()) throw Error(ErrorKind::parse, where + ": nested rows must be numeric");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
    }
  }
  return out;
}

Json block_to_json(const SideBlock& block) {
  Json out = Json::array();
  if (const auto* v = std::get_if<Eigen::VectorXd>(&block)) {
    for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back((*v)(i));
  } else if (const auto* m = std::get_if<Eigen::MatrixXd>(&block)) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < m->cols(); ++c) row.push_back((*m)(r, c));
      out.push_back(std::move(row));
    }
  } else {
    for (const auto& t : std::get<std::vector<Token>>(block)) out.push_back(Json::array({t.begin, t.end, t.text}));
  }
  return out;
}

}  // namespace

SideStore SideStore::load(const fs::path& path, bool regular) {
  if (!fs::exists(path)) throw Error(ErrorKind::not_found, path.string());
  SideStore store(regular);
  if (regular) {
    CsvReader reader(path);
    const std::size_t width = reader.header().size() - 1;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != width + 1) {
        throw Error(ErrorKind::schema_mismatch, path.string() + ": row " + std::to_string(reader.row_index()) +
                                                    " has " + std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(width + 1));
      }
      Eigen::VectorXd block(static_cast<Eigen::Index>(width));
      for (std::size_t c = 0; c < width; ++c) {
        if (!parse_double(fields[c + 1], block(static_cast<Eigen::Index>(c)))) {
          throw Error(ErrorKind::parse, path.string() + ": row " + std::to_string(reader.row_index()) + ", column " +
                                            reader.header()[c + 1] + ": not a number '" + fields[c + 1] + "'");
        }
      }
      store.insert(fields[0], std::move(block));
    }
    return store;
  }
  std::ifstream in(path, std::ios::binary);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::parse, path.string() + ": expected an object of id -> block");
  for (const auto& [id, value] : root.items()) {
    store.insert(id, block_from_json(value, path.string() + ": " + id));
  }
  return store;
}

void SideStore::save(const fs::path& path) const {
  if (regular_) {
    CsvWriter writer(path);
    std::vector<std::string> row{"id"};
    for (std::size_t c = 0; c < width_; ++c) row.push_back("v_" + std::to_string(c));
    writer.write_row(row);
    for (const auto& id : ids_) {
      const auto& v = std::get<Eigen::VectorXd>(blocks_.find(id)->second);
      row.assign(1, id);
      for (Eigen::Index c = 0; c < v.size(); ++c) row.push_back(format_double(v(c)));
      writer.write_row(row);
    }
    writer.close();
    return;
  }
  Json root = Json::object();
  for (const auto& id : ids_) root[id] = block_to_json(blocks_.find(id)->second);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << root.dump() << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed on " + path.string());
}

// ---------------------------------------------------------------------------
// DataFrameSlice

std::size_t column_rows(const ColumnData& column) {
  return std::visit([](const auto& c) { return static_cast<std::size_t>(c.size()); }, column);
}

std::size_t DataFrameSlice::index_of(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::schema_mismatch, "no column named " + std::string(name));
  return static_cast<std::size_t>(it - names.begin());
}

bool DataFrameSlice::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const Eigen::VectorXd& DataFrameSlice::numeric(std::string_view name) const {
  const auto* c = std::get_if<Eigen::VectorXd>(&columns[index_of(name)]);
  if (!c) throw Error(ErrorKind::schema_mismatch, "column " + std::string(name) + " is not numeric");
  return *c;
}

const TextColumn& DataFrameSlice::text(std::string_view name) const {
  const auto* c = std::get_if<TextColumn>(&columns[index_of(name)]);
  if (!c) throw Error(ErrorKind::schema_mismatch, "column " + std::string(name) + " is not an identifier column");
  return *c;
}

const BlockColumn& DataFrameSlice::blocks(std::string_view name) const {
  const auto* c = std::get_if<BlockColumn>(&columns[index_of(name)]);
  if (!c) throw Error(ErrorKind::schema_mismatch, "column " + std::string(name) + " is not a block column");
  return *c;
}

std::string DataFrameSlice::cell_text(std::size_t column, std::size_t row) const {
  const auto& c = columns[column];
  if (const auto* v = std::get_if<Eigen::VectorXd>(&c)) return format_double((*v)(static_cast<Eigen::Index>(row)));
  if (const auto* t = std::get_if<TextColumn>(&c)) return (*t)[row];
  throw Error(ErrorKind::schema_mismatch, "block column " + names[column] + " cannot be written to a main table");
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

/// Maps layout columns to header positions, requiring the exact column set.
std::vector<std::size_t> match_header(const std::vector<ColumnInfo>& layout, const std::vector<std::string>& header,
                                      const fs::path& path) {
  std::vector<std::size_t> index(layout.size());
  std::set<std::string_view> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) {
      throw Error(ErrorKind::schema_mismatch, path.string() + ": duplicate column " + h);
    }
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    auto it = std::find(header.begin(), header.end(), layout[i].name);
    if (it == header.end()) {
      throw Error(ErrorKind::schema_mismatch, path.string() + ": missing column " + layout[i].name);
    }
    index[i] = static_cast<std::size_t>(it - header.begin());
  }
  if (header.size() != layout.size()) {
    for (const auto& h : header) {
      if (std::none_of(layout.begin(), layout.end(), [&](const ColumnInfo& c) { return c.name == h; })) {
        throw Error(ErrorKind::schema_mismatch, path.string() + ": column " + h + " is not in the schema");
      }
    }
  }
  return index;
}

}  // namespace

Dataset Dataset::open(const fs::path& manifest, const OpenOptions& options) {
  Dataset ds;
  ds.manifest_ = manifest;
  ds.schema_ = std::make_shared<const DatasetSchema>(load_schema(manifest));
  const auto& schema = *ds.schema_;
  if (auto violations = validate_schema(schema); !violations.empty()) {
    std::string msg = manifest.string() + ": invalid schema";
    for (const auto& v : violations) msg += "\n  " + v;
    throw Error(ErrorKind::schema, msg);
  }
  ds.layout_ = main_table_layout(schema);
  const fs::path dir = manifest.parent_path();

  for (const auto& m : schema.mappings) {
    const fs::path path = dir / m.file;
    if (!fs::exists(path)) throw Error(ErrorKind::not_found, path.string());
    auto store = std::make_shared<SideStore>(SideStore::load(path, m.regular));
    if (const auto* s = schema.find_sub_feature(m.column); s && m.regular && store->size() > 0 &&
                                                            store->width() != s->dimension.max) {
      throw Error(ErrorKind::schema_mismatch, path.string() + ": block width " + std::to_string(store->width()) +
                                                  " but sub-feature " + m.column + " declares " +
                                                  std::to_string(s->dimension.max));
    }
    ds.side_stores_.emplace(m.column, std::move(store));
  }

  for (const auto& [split, file] : schema.tables) {
    Table t{split, dir / file, std::nullopt};
    if (!fs::exists(t.path)) throw Error(ErrorKind::not_found, t.path.string());
    CsvReader reader(t.path);
    match_header(ds.layout_, reader.header(), t.path);
    if (options.verify_rows) {
      std::vector<std::string> fields;
      std::size_t rows = 0;
      while (reader.next(fields)) {
        if (fields.size() != reader.header().size()) {
          throw Error(ErrorKind::schema_mismatch, t.path.string() + ": row " + std::to_string(reader.row_index()) +
                                                      " has " + std::to_string(fields.size()) + " fields, expected " +
                                                      std::to_string(reader.header().size()));
        }
        ++rows;
      }
      t.rows = rows;
    }
    ds.tables_.push_back(std::move(t));
  }
  return ds;
}

std::vector<std::string> Dataset::split_names() const {
  std::vector<std::string> out;
  for (const auto& t : tables_) out.push_back(t.split);
  return out;
}

bool Dataset::has_split(std::string_view split) const {
  return std::any_of(tables_.begin(), tables_.end(), [&](const Table& t) { return t.split == split; });
}

const Dataset::Table& Dataset::table(std::string_view split) const {
  for (const auto& t : tables_) {
    if (t.split == split) return t;
  }
  throw Error(ErrorKind::not_found, "split '" + std::string(split) + "' not in dataset");
}

fs::path Dataset::table_path(std::string_view split) const { return table(split).path; }

std::size_t Dataset::row_count(std::string_view split) const {
  const auto& t = table(split);
  if (!t.rows) throw Error(ErrorKind::configuration, "row counts need a dataset opened with verify_rows");
  return *t.rows;
}

std::size_t Dataset::total_rows() const {
  std::size_t total = 0;
  for (const auto& t : tables_) total += row_count(t.split);
  return total;
}

SliceStream Dataset::stream(std::string_view split, std::size_t batch_size) const {
  if (batch_size == 0) throw Error(ErrorKind::configuration, "batch size must be at least 1");
  return SliceStream(*this, std::string(split), batch_size);
}

const SideStore& Dataset::side_store(std::string_view column) const {
  auto it = side_stores_.find(column);
  if (it == side_stores_.end()) throw Error(ErrorKind::not_found, "no side store for column " + std::string(column));
  return *it->second;
}

SliceStream stream_slices(const Dataset& dataset, std::string_view split, std::size_t batch_size) {
  return dataset.stream(split, batch_size);
}

// ---------------------------------------------------------------------------
// SliceStream

SliceStream::SliceStream(const Dataset& dataset, std::string split, std::size_t batch_size)
    : dataset_(&dataset),
      split_(std::move(split)),
      batch_size_(batch_size),
      reader_(dataset.table_path(split_)) {
  file_index_ = match_header(dataset.layout(), reader_.header(), reader_.path());
}

std::optional<DataFrameSlice> SliceStream::next() {
  if (done_) return std::nullopt;
  const auto& layout = dataset_->layout();
  DataFrameSlice slice;
  slice.split = split_;
  slice.names.reserve(layout.size());
  std::vector<Eigen::VectorXd> numeric(layout.size());
  std::vector<TextColumn> text(layout.size());
  for (std::size_t c = 0; c < layout.size(); ++c) {
    slice.names.push_back(layout[c].name);
    if (layout[c].mapping) {
      text[c].reserve(batch_size_);
    } else {
      numeric[c].resize(static_cast<Eigen::Index>(batch_size_));
    }
  }

  std::size_t rows = 0;
  while (rows < batch_size_ && reader_.next(fields_)) {
    const std::size_t row = reader_.row_index();
    if (rows == 0) slice.first_row = row;
    if (fields_.size() != reader_.header().size()) {
      throw Error(ErrorKind::schema_mismatch, reader_.path().string() + ": row " + std::to_string(row) + " has " +
                                                  std::to_string(fields_.size()) + " fields, expected " +
                                                  std::to_string(reader_.header().size()));
    }
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const auto& field = fields_[file_index_[c]];
      if (layout[c].mapping) {
        text[c].push_back(field);
      } else if (!parse_double(field, numeric[c](static_cast<Eigen::Index>(rows)))) {
        throw Error(ErrorKind::parse, reader_.path().string() + ": row " + std::to_string(row) + ", column " +
                                          layout[c].name + ": not a number '" + field + "'");
      }
    }
    ++rows;
  }
  if (rows < batch_size_) done_ = true;
  if (rows == 0) return std::nullopt;

  slice.rows = rows;
  slice.columns.reserve(layout.size());
  for (std::size_t c = 0; c < layout.size(); ++c) {
    if (layout[c].mapping) {
      slice.columns.emplace_back(std::move(text[c]));
    } else {
      numeric[c].conservativeResize(static_cast<Eigen::Index>(rows));
      slice.columns.emplace_back(std::move(numeric[c]));
    }
  }
  return slice;
}

DataFrameSlice read_split(const Dataset& dataset, std::string_view split) {
  auto stream = dataset.stream(split, 1 << 16);
  DataFrameSlice all;
  all.split = std::string(split);
  for (const auto& c : dataset.layout()) {
    all.names.push_back(c.name);
    if (c.mapping) {
      all.columns.emplace_back(TextColumn{});
    } else {
      all.columns.emplace_back(Eigen::VectorXd{});
    }
  }
  while (auto slice = stream.next()) {
    for (std::size_t c = 0; c < all.columns.size(); ++c) {
      if (auto* v = std::get_if<Eigen::VectorXd>(&all.columns[c])) {
        const auto& part = std::get<Eigen::VectorXd>(slice->columns[c]);
        const auto old = v->size();
        v->conservativeResize(old + part.size());
        v->tail(part.size()) = part;
      } else {
        auto& t = std::get<TextColumn>(all.columns[c]);
        const auto& part = std::get<TextColumn>(slice->columns[c]);
        t.insert(t.end(), part.begin(), part.end());
      }
    }
    all.rows += slice->rows;
  }
  return all;
}

// ---------------------------------------------------------------------------
// Mapping resolution

MappingCursor::MappingCursor(const SideStore& store, TextColumn ids) : store_(&store), ids_(std::move(ids)) {
  blocks_.reserve(ids_.size());
  for (const auto& id : ids_) blocks_.push_back(&store_->at(id));
}

const SideBlock& MappingCursor::at(std::size_t row) const { return *blocks_.at(row); }

DataFrameSlice resolve_eager(const DataFrameSlice& slice, std::string_view column, const SideStore& store) {
  const std::size_t index = slice.index_of(column);
  const auto& ids = slice.text(column);
  DataFrameSlice out;
  out.split = slice.split;
  out.first_row = slice.first_row;
  out.rows = slice.rows;
  for (std::size_t c = 0; c < slice.columns.size(); ++c) {
    if (c != index) {
      out.names.push_back(slice.names[c]);
      out.columns.push_back(slice.columns[c]);
      continue;
    }
    if (store.regular()) {
      const auto width = static_cast<Eigen::Index>(store.width());
      Eigen::MatrixXd values(static_cast<Eigen::Index>(slice.rows), width);
      for (std::size_t r = 0; r < slice.rows; ++r) {
        values.row(static_cast<Eigen::Index>(r)) = std::get<Eigen::VectorXd>(store.at(ids[r])).transpose();
      }
      for (Eigen::Index k = 0; k < width; ++k) {
        out.names.push_back(std::string(column) + "_" + std::to_string(k));
        out.columns.emplace_back(Eigen::VectorXd(values.col(k)));
      }
    } else {
      BlockColumn blocks;
      blocks.reserve(slice.rows);
      for (std::size_t r = 0; r < slice.rows; ++r) blocks.push_back(store.at(ids[r]));
      out.names.emplace_back(column);
      out.columns.emplace_back(std::move(blocks));
    }
  }
  return out;
}

MappingCursor resolve_deferred(const DataFrameSlice& slice, std::string_view column, const SideStore& store) {
  return MappingCursor(store, slice.text(column));
}

std::variant<DataFrameSlice, MappingCursor> resolve_mapping(const DataFrameSlice& slice, std::string_view column,
                                                            const SideStore& store, MappingMode mode) {
  if (mode == MappingMode::eager) return resolve_eager(slice, column, store);
  return resolve_deferred(slice, column, store);
}

// ---------------------------------------------------------------------------
// Numeric views

namespace {

bool in_target(ColumnRole role, Target target) {
  switch (target) {
    case Target::features: return role == ColumnRole::feature;
    case Target::labels: return role == ColumnRole::label;
    case Target::joint: return role == ColumnRole::feature || role == ColumnRole::label;
  }
  return false;
}

void require_numeric(const ColumnInfo& c) {
  const auto* s = c.sub_feature;
  if (s->value_class == ValueClass::token_sequence) {
    throw Error(ErrorKind::unsupported_feature, "sub-feature " + s->name + " holds tokens; featurize it first");
  }
  if (!s->dimension.fixed() || (c.mapping && !c.mapping->regular)) {
    throw Error(ErrorKind::unsupported_feature, "sub-feature " + s->name + " has variable length; featurize it first");
  }
}

}  // namespace

std::vector<std::string> numeric_column_names(const Dataset& dataset, Target target) {
  std::vector<std::string> names;
  // Labels after features for the joint target.
  for (auto role : {ColumnRole::feature, ColumnRole::label}) {
    if (!in_target(role, target)) continue;
    for (const auto& c : dataset.layout()) {
      if (c.role != role) continue;
      require_numeric(c);
      if (c.mapping) {
        for (std::size_t k = 0; k < c.sub_feature->dimension.max; ++k) names.push_back(c.name + "_" + std::to_string(k));
      } else {
        names.push_back(c.name);
      }
    }
  }
  return names;
}

Eigen::MatrixXd numeric_matrix(const Dataset& dataset, const DataFrameSlice& slice, Target target) {
  std::vector<std::pair<const ColumnInfo*, std::size_t>> columns;  // info, slice index
  Eigen::Index width = 0;
  for (auto role : {ColumnRole::feature, ColumnRole::label}) {
    if (!in_target(role, target)) continue;
    for (const auto& c : dataset.layout()) {
      if (c.role != role) continue;
      require_numeric(c);
      columns.emplace_back(&c, slice.index_of(c.name));
      width += c.mapping ? static_cast<Eigen::Index>(c.sub_feature->dimension.max) : 1;
    }
  }
  const auto rows = static_cast<Eigen::Index>(slice.rows);
  Eigen::MatrixXd out(rows, width);
  Eigen::Index col = 0;
  for (const auto& [info, index] : columns) {
    if (!info->mapping) {
      out.col(col++) = std::get<Eigen::VectorXd>(slice.columns[index]);
      continue;
    }
    const auto& store = dataset.side_store(info->name);
    const auto& ids = std::get<TextColumn>(slice.columns[index]);
    const auto w = static_cast<Eigen::Index>(info->sub_feature->dimension.max);
    for (Eigen::Index r = 0; r < rows; ++r) {
      out.block(r, col, 1, w) = std::get<Eigen::VectorXd>(store.at(ids[static_cast<std::size_t>(r)])).transpose();
    }
    col += w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writing

void write_dataset(const InMemoryDataset& data, const fs::path& out_dir) {
  if (auto violations = validate_schema(data.schema); !violations.empty()) {
    throw Error(ErrorKind::schema, "cannot write dataset with invalid schema: " + violations.front());
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());

  const auto layout = main_table_layout(data.schema);
  for (const auto& [split, file] : data.schema.tables) {
    auto it = data.tables.find(split);
    if (it == data.tables.end()) throw Error(ErrorKind::schema_mismatch, "no rows given for split " + split);
    const auto& slice = it->second;
    std::vector<std::size_t> index;
    std::vector<std::string> header;
    for (const auto& c : layout) {
      index.push_back(slice.index_of(c.name));
      header.push_back(c.name);
      if (column_rows(slice.columns[index.back()]) != slice.rows) {
        throw Error(ErrorKind::shape, "column " + c.name + " of split " + split + " has the wrong row count");
      }
      if (c.mapping && !std::holds_alternative<TextColumn>(slice.columns[index.back()])) {
        throw Error(ErrorKind::schema_mismatch, "mapping column " + c.name + " must hold identifiers");
      }
    }
    CsvWriter writer(out_dir / file);
    writer.write_row(header);
    std::vector<std::string> row(layout.size());
    for (std::size_t r = 0; r < slice.rows; ++r) {
      for (std::size_t c = 0; c < layout.size(); ++c) row[c] = slice.cell_text(index[c], r);
      writer.write_row(row);
    }
    writer.close();
  }
  for (const auto& m : data.schema.mappings) {
    auto it = data.side_stores.find(m.column);
    if (it == data.side_stores.end()) throw Error(ErrorKind::not_found, "no side store given for " + m.column);
    if (it->second.regular() != m.regular) {
      throw Error(ErrorKind::schema_mismatch, "side store for " + m.column + " has the wrong regularity");
    }
    it->second.save(out_dir / m.file);
  }
  std::ofstream manifest(out_dir / "manifest.json", std::ios::binary);
  if (!manifest) throw Error(ErrorKind::io, "cannot write " + (out_dir / "manifest.json").string());
  manifest << dump_schema(data.schema);
  if (!manifest) throw Error(ErrorKind::io, "write failed on manifest.json");
}

}  // namespace dsprof
