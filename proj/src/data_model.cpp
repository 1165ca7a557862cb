#include "dsprof/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dsprof/error.hpp"

namespace dsprof {

using Json = nlohmann::ordered_json;

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::time: return "time";
    case ComponentKind::space: return "space";
    case ComponentKind::space_time: return "space_time";
  }
  return "time";
}

std::string_view to_string(ValueClass value_class) {
  switch (value_class) {
    case ValueClass::numeric: return "numeric";
    case ValueClass::ordinal: return "ordinal";
    case ValueClass::one_hot: return "one_hot";
    case ValueClass::token_sequence: return "token_sequence";
  }
  return "numeric";
}

const MappingRef* DatasetSchema::mapping_for(std::string_view column) const {
  for (const auto& m : mappings) {
    if (m.column == column) return &m;
  }
  return nullptr;
}

const SubFeature* DatasetSchema::find_sub_feature(std::string_view name) const {
  for (const auto* group : {&features, &labels}) {
    for (const auto& c : *group) {
      for (const auto& s : c.sub_features) {
        if (s.name == name) return &s;
      }
    }
  }
  return nullptr;
}

std::vector<const Component*> ordered_components(const std::vector<Component>& components) {
  std::vector<const Component*> out;
  for (auto kind : {ComponentKind::time, ComponentKind::space, ComponentKind::space_time}) {
    for (const auto& c : components) {
      if (c.kind == kind) out.push_back(&c);
    }
  }
  return out;
}

namespace {

void validate_components(const std::vector<Component>& components, std::string_view field,
                         std::vector<std::string>& violations) {
  std::set<ComponentKind> seen;
  for (const auto& c : components) {
    if (!seen.insert(c.kind).second) {
      violations.push_back(std::string(field) + ": more than one " + std::string(to_string(c.kind)) +
                           " component");
    }
    if (c.sub_features.empty()) {
      violations.push_back(std::string(field) + "." + std::string(to_string(c.kind)) +
                           ": component has no sub-features");
    }
    for (const auto& s : c.sub_features) {
      const std::string where = std::string(field) + "." + s.name;
      if (s.name.empty()) violations.push_back(std::string(field) + ": sub-feature without a name");
      if (s.dimension.min == 0) violations.push_back(where + ": dimension must be positive");
      if (s.dimension.min > s.dimension.max) {
        violations.push_back(where + ": dimension range has min > max");
      }
      for (auto m : s.nested) {
        if (m == 0) violations.push_back(where + ": nested dimensions must be positive");
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_schema(const DatasetSchema& schema) {
  std::vector<std::string> violations;
  if (schema.features.empty()) violations.emplace_back("features: at least one feature component required");
  validate_components(schema.features, "features", violations);
  validate_components(schema.labels, "labels", violations);

  if (schema.shares) {
    const auto& s = *schema.shares;
    for (auto [name, v] : {std::pair{"train", s.train}, {"val", s.val}, {"test", s.test}}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        violations.push_back(std::string("split_shares.") + name + ": share must lie in [0, 1]");
      }
    }
    const double sum = s.train + s.val + s.test;
    if (!(std::abs(sum - 1.0) <= 1e-9)) {
      std::ostringstream msg;
      msg << "split_shares: split shares sum to " << sum;
      violations.push_back(msg.str());
    }
  }

  std::set<std::string, std::less<>> sub_feature_names;
  for (const auto* group : {&schema.features, &schema.labels}) {
    for (const auto& c : *group) {
      for (const auto& s : c.sub_features) {
        if (!sub_feature_names.insert(s.name).second) {
          violations.push_back("sub-feature " + s.name + ": declared more than once");
        }
      }
    }
  }

  std::set<std::string, std::less<>> mapped;
  for (const auto& m : schema.mappings) {
    if (!mapped.insert(m.column).second) {
      violations.push_back("mappings." + m.column + ": mapped more than once");
    }
    if (!sub_feature_names.contains(m.column)) {
      violations.push_back("mappings." + m.column + ": no sub-feature with this name");
    }
    if (m.file.empty()) violations.push_back("mappings." + m.column + ": missing file");
    if (const auto* s = schema.find_sub_feature(m.column);
        s && m.regular && !s->dimension.fixed()) {
      violations.push_back("mappings." + m.column + ": variable-length sub-feature needs an irregular side store");
    }
  }
  for (const auto* group : {&schema.features, &schema.labels}) {
    for (const auto& c : *group) {
      for (const auto& s : c.sub_features) {
        if (!s.dimension.fixed() && !schema.mapping_for(s.name)) {
          violations.push_back("sub-feature " + s.name + ": variable-length sub-features must be mapped to a side store");
        }
        if (s.value_class == ValueClass::token_sequence && !schema.mapping_for(s.name)) {
          violations.push_back("sub-feature " + s.name + ": token sequences must be mapped to a side store");
        }
      }
    }
  }

  std::set<std::string, std::less<>> coordinate_columns;
  for (const auto* list : {&schema.coordinates.time, &schema.coordinates.space}) {
    for (const auto& name : *list) {
      if (!coordinate_columns.insert(name).second) {
        violations.push_back("coordinates." + name + ": listed more than once");
      }
    }
  }

  // Column names in the main table must be unique.
  std::set<std::string, std::less<>> columns;
  for (const auto& col : main_table_layout(schema)) {
    if (!columns.insert(col.name).second) {
      violations.push_back("column " + col.name + ": appears more than once in the main table");
    }
  }

  std::set<std::string, std::less<>> split_names;
  for (const auto& [split, file] : schema.tables) {
    if (!split_names.insert(split).second) violations.push_back("tables." + split + ": declared more than once");
    if (file.empty()) violations.push_back("tables." + split + ": missing file");
  }
  return violations;
}

std::vector<ColumnInfo> main_table_layout(const DatasetSchema& schema) {
  std::vector<ColumnInfo> out;
  std::set<std::string, std::less<>> sub_feature_columns;
  auto add_group = [&](const std::vector<Component>& group, ColumnRole role) {
    for (const auto* c : ordered_components(group)) {
      for (const auto& s : c->sub_features) {
        const MappingRef* mapping = schema.mapping_for(s.name);
        if (mapping || s.dimension.max == 1) {
          out.push_back({s.name, role, &s, 0, mapping});
          sub_feature_columns.insert(s.name);
          continue;
        }
        for (std::size_t e = 0; e < s.dimension.max; ++e) {
          out.push_back({s.name + "_" + std::to_string(e), role, &s, e, nullptr});
          sub_feature_columns.insert(out.back().name);
        }
      }
    }
  };
  add_group(schema.features, ColumnRole::feature);
  add_group(schema.labels, ColumnRole::label);
  for (const auto* list : {&schema.coordinates.time, &schema.coordinates.space}) {
    for (const auto& name : *list) {
      if (sub_feature_columns.contains(name)) continue;
      if (std::any_of(out.begin(), out.end(), [&](const ColumnInfo& c) { return c.name == name; })) continue;
      out.push_back({name, ColumnRole::coordinate, nullptr, 0, nullptr});
    }
  }
  return out;
}

namespace {

std::size_t sum_dims(const std::vector<Component>& group, bool use_max) {
  std::size_t total = 0;
  for (const auto& c : group) {
    for (const auto& s : c.sub_features) total += use_max ? s.dimension.max : s.dimension.min;
  }
  return total;
}

}  // namespace

std::size_t max_feature_dimension(const DatasetSchema& schema) { return sum_dims(schema.features, true); }
std::size_t max_label_dimension(const DatasetSchema& schema) { return sum_dims(schema.labels, true); }
std::size_t min_feature_dimension(const DatasetSchema& schema) { return sum_dims(schema.features, false); }
std::size_t min_label_dimension(const DatasetSchema& schema) { return sum_dims(schema.labels, false); }

namespace {

Eigen::VectorXd flatten_group(const DataPoint& point, const std::vector<Component>& group) {
  std::vector<const Eigen::VectorXd*> parts;
  Eigen::Index total = 0;
  for (const auto* c : ordered_components(group)) {
    for (const auto& s : c->sub_features) {
      auto it = point.values.find(s.name);
      if (it == point.values.end()) {
        throw Error(ErrorKind::shape, "sub-feature " + s.name + " missing from data point");
      }
      const auto len = static_cast<std::size_t>(it->second.size());
      if (!s.dimension.contains(len)) {
        throw Error(ErrorKind::shape, "sub-feature " + s.name + " has length " + std::to_string(len) +
                                          ", declared [" + std::to_string(s.dimension.min) + ", " +
                                          std::to_string(s.dimension.max) + "]");
      }
      parts.push_back(&it->second);
      total += it->second.size();
    }
  }
  Eigen::VectorXd out(total);
  Eigen::Index offset = 0;
  for (const auto* p : parts) {
    out.segment(offset, p->size()) = *p;
    offset += p->size();
  }
  return out;
}

}  // namespace

FlatPoint flatten_point(const DataPoint& point, const DatasetSchema& schema) {
  FlatPoint flat;
  flat.features = flatten_group(point, schema.features);
  if (schema.has_labels()) flat.labels = flatten_group(point, schema.labels);
  return flat;
}

// ---------------------------------------------------------------------------
// Manifest parsing

namespace {

[[noreturn]] void structure_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::parse, path + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) structure_error(path, std::string("missing key '") + key + "'");
  return obj.at(key);
}

std::size_t as_size(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) structure_error(path, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) structure_error(path, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> as_string_list(const Json& v, const std::string& path) {
  if (!v.is_array()) structure_error(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ComponentKind parse_kind(const Json& v, const std::string& path) {
  const auto s = as_string(v, path);
  if (s == "time") return ComponentKind::time;
  if (s == "space") return ComponentKind::space;
  if (s == "space_time") return ComponentKind::space_time;
  structure_error(path, "unknown component kind '" + s + "'");
}

ValueClass parse_value_class(const Json& v, const std::string& path) {
  const auto s = as_string(v, path);
  if (s == "numeric") return ValueClass::numeric;
  if (s == "ordinal") return ValueClass::ordinal;
  if (s == "one_hot") return ValueClass::one_hot;
  if (s == "token_sequence") return ValueClass::token_sequence;
  structure_error(path, "unknown value class '" + s + "'");
}

Dimension parse_dimension(const Json& v, const std::string& path) {
  if (v.is_array()) {
    if (v.size() != 2) structure_error(path, "dimension range must be [min, max]");
    return Dimension::between(as_size(v[0], path + "[0]"), as_size(v[1], path + "[1]"));
  }
  return Dimension::exactly(as_size(v, path));
}

std::vector<Component> parse_components(const Json& v, const std::string& path) {
  if (!v.is_array()) structure_error(path, "expected an array of components");
  std::vector<Component> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string cpath = path + "[" + std::to_string(i) + "]";
    Component c;
    c.kind = parse_kind(require(v[i], "kind", cpath), cpath + ".kind");
    const auto& subs = require(v[i], "sub_features", cpath);
    if (!subs.is_array()) structure_error(cpath + ".sub_features", "expected an array");
    for (std::size_t j = 0; j < subs.size(); ++j) {
      const std::string spath = cpath + ".sub_features[" + std::to_string(j) + "]";
      SubFeature s;
      s.name = as_string(require(subs[j], "name", spath), spath + ".name");
      s.dimension = subs[j].contains("dimension") ? parse_dimension(subs[j]["dimension"], spath + ".dimension")
                                                  : Dimension::exactly(1);
      if (subs[j].contains("value_class")) {
        s.value_class = parse_value_class(subs[j]["value_class"], spath + ".value_class");
      }
      if (subs[j].contains("nested")) {
        const auto& n = subs[j]["nested"];
        if (!n.is_array()) structure_error(spath + ".nested", "expected an array");
        for (std::size_t k = 0; k < n.size(); ++k) {
          s.nested.push_back(as_size(n[k], spath + ".nested[" + std::to_string(k) + "]"));
        }
      }
      c.sub_features.push_back(std::move(s));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

Json components_to_json(const std::vector<Component>& components) {
  Json arr = Json::array();
  for (const auto& c : components) {
    Json jc;
    jc["kind"] = to_string(c.kind);
    jc["sub_features"] = Json::array();
    for (const auto& s : c.sub_features) {
      Json js;
      js["name"] = s.name;
      if (s.dimension.fixed()) {
        js["dimension"] = s.dimension.min;
      } else {
        js["dimension"] = {s.dimension.min, s.dimension.max};
      }
      js["value_class"] = to_string(s.value_class);
      if (!s.nested.empty()) js["nested"] = s.nested;
      jc["sub_features"].push_back(std::move(js));
    }
    arr.push_back(std::move(jc));
  }
  return arr;
}

}  // namespace

DatasetSchema parse_schema(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_and_column(text, e.byte);
    throw Error(ErrorKind::parse, "manifest line " + std::to_string(line) + ", column " + std::to_string(column) +
                                      ": " + e.what());
  }
  if (!root.is_object()) structure_error("$", "manifest must be an object");

  DatasetSchema schema;
  schema.name = root.contains("name") ? as_string(root["name"], "$.name") : std::string{};
  schema.features = parse_components(require(root, "features", "$"), "$.features");
  if (root.contains("labels")) schema.labels = parse_components(root["labels"], "$.labels");
  if (root.contains("coordinates")) {
    const auto& c = root["coordinates"];
    if (c.contains("time")) schema.coordinates.time = as_string_list(c["time"], "$.coordinates.time");
    if (c.contains("space")) schema.coordinates.space = as_string_list(c["space"], "$.coordinates.space");
  }
  if (root.contains("mappings")) {
    const auto& m = root["mappings"];
    if (!m.is_array()) structure_error("$.mappings", "expected an array");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string path = "$.mappings[" + std::to_string(i) + "]";
      MappingRef ref;
      ref.column = as_string(require(m[i], "column", path), path + ".column");
      ref.file = as_string(require(m[i], "file", path), path + ".file");
      if (m[i].contains("regular")) {
        if (!m[i]["regular"].is_boolean()) structure_error(path + ".regular", "expected a boolean");
        ref.regular = m[i]["regular"].get<bool>();
      }
      schema.mappings.push_back(std::move(ref));
    }
  }
  if (root.contains("split_shares")) {
    const auto& s = root["split_shares"];
    auto share = [&](const char* key) {
      const auto& v = require(s, key, "$.split_shares");
      if (!v.is_number()) structure_error(std::string("$.split_shares.") + key, "expected a number");
      return v.get<double>();
    };
    schema.shares = SplitShares{share("train"), share("val"), share("test")};
  }
  if (root.contains("tables")) {
    const auto& t = root["tables"];
    if (!t.is_object()) structure_error("$.tables", "expected an object of split -> file");
    for (const auto& [split, file] : t.items()) {
      schema.tables.emplace_back(split, as_string(file, "$.tables." + split));
    }
  }
  return schema;
}

DatasetSchema load_schema(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, manifest.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

std::string dump_schema(const DatasetSchema& schema) {
  Json root;
  root["name"] = schema.name;
  Json tables = Json::object();
  for (const auto& [split, file] : schema.tables) tables[split] = file;
  root["tables"] = std::move(tables);
  if (schema.shares) {
    root["split_shares"] = {{"train", schema.shares->train}, {"val", schema.shares->val}, {"test", schema.shares->test}};
  }
  root["features"] = components_to_json(schema.features);
  if (schema.has_labels()) root["labels"] = components_to_json(schema.labels);
  root["coordinates"] = {{"time", schema.coordinates.time}, {"space", schema.coordinates.space}};
  Json mappings = Json::array();
  for (const auto& m : schema.mappings) {
    mappings.push_back({{"column", m.column}, {"file", m.file}, {"regular", m.regular}});
  }
  root["mappings"] = std::move(mappings);
  return root.dump(2) + "\n";
}

}  // namespace dsprof
