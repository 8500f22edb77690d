#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsift/error.hpp"

namespace fairsift {

enum class ColumnKind { numeric, categorical };

inline const char* to_string(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

inline ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  throw Error("unknown column kind '" + s + "' (expected numeric|categorical)");
}

struct SchemaColumn {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
};

// Declarative description of one delimited text dataset: column names and
// kinds, which column is the protected attribute, which is the label, and
// the values that count as privileged / favorable. An optional value_map
// rewrites raw codes per column before anything else looks at them (e.g.
// the German credit personal-status codes collapse to male/female).
struct DatasetSchema {
  std::string name;
  std::vector<SchemaColumn> columns;
  std::string protected_attribute;
  std::string privileged_value;
  std::string label_column;
  std::string favorable_value;
  char delimiter = ',';
  std::optional<std::string> missing_token;
  int header_rows = 0;
  std::map<std::string, std::map<std::string, std::string>> value_map;

  int index_of(const std::string& column_name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == column_name) return static_cast<int>(i);
    }
    return -1;
  }

  int protected_index() const { return index_of(protected_attribute); }
  int label_index() const { return index_of(label_column); }

  bool has_value_map(const std::string& column_name) const {
    return value_map.find(column_name) != value_map.end();
  }

  // Maps a raw field through the column's value_map, if one is declared.
  // Unmapped values pass through unchanged; the loader enforces binarity
  // of the protected/label columns separately.
  const std::string& map_value(const std::string& column_name, const std::string& raw) const {
    auto it = value_map.find(column_name);
    if (it == value_map.end()) return raw;
    auto vit = it->second.find(raw);
    return vit == it->second.end() ? raw : vit->second;
  }

  void validate() const {
    if (columns.empty()) throw Error("schema '" + name + "' declares no columns");
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name.empty()) throw Error("schema column " + std::to_string(i) + " has an empty name");
      for (std::size_t j = i + 1; j < columns.size(); ++j) {
        if (columns[i].name == columns[j].name) {
          throw Error("duplicate column name '" + columns[i].name + "' in schema");
        }
      }
    }
    if (protected_index() < 0) {
      throw Error("protected attribute '" + protected_attribute + "' is not a schema column");
    }
    if (label_index() < 0) {
      throw Error("label column '" + label_column + "' is not a schema column");
    }
    if (protected_attribute == label_column) {
      throw Error("protected attribute and label column must differ");
    }
    if (privileged_value.empty()) throw Error("privileged_value must be non-empty");
    if (favorable_value.empty()) throw Error("favorable_value must be non-empty");
    if (header_rows < 0) throw Error("header_rows must be >= 0");
    for (const auto& [column_name, mapping] : value_map) {
      if (index_of(column_name) < 0) {
        throw Error("value_map refers to unknown column '" + column_name + "'");
      }
      if (mapping.empty()) throw Error("value_map for '" + column_name + "' is empty");
    }
  }

  // Schema with the given feature columns removed. Protected attribute and
  // label cannot be dropped this way.
  DatasetSchema without_columns(const std::vector<std::string>& names) const {
    DatasetSchema out = *this;
    out.columns.clear();
    for (const auto& col : columns) {
      bool drop = false;
      for (const auto& n : names) {
        if (n == col.name) {
          if (col.name == protected_attribute || col.name == label_column) {
            throw Error("cannot drop '" + col.name + "': protected attribute and label are not removable");
          }
          drop = true;
          break;
        }
      }
      if (!drop) out.columns.push_back(col);
    }
    for (auto it = out.value_map.begin(); it != out.value_map.end();) {
      if (out.index_of(it->first) < 0) {
        it = out.value_map.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["delimiter"] = std::string(1, delimiter);
    if (missing_token) j["missing_token"] = *missing_token;
    j["header_rows"] = header_rows;
    j["protected_attribute"] = protected_attribute;
    j["privileged_value"] = privileged_value;
    j["label_column"] = label_column;
    j["favorable_value"] = favorable_value;
    j["columns"] = nlohmann::ordered_json::array();
    for (const auto& col : columns) {
      j["columns"].push_back({{"name", col.name}, {"kind", to_string(col.kind)}});
    }
    if (!value_map.empty()) {
      nlohmann::ordered_json vm;
      for (const auto& [column_name, mapping] : value_map) {
        nlohmann::ordered_json m;
        for (const auto& [raw, mapped] : mapping) m[raw] = mapped;
        vm[column_name] = m;
      }
      j["value_map"] = vm;
    }
    return j;
  }

  static DatasetSchema from_json(const nlohmann::json& j) {
    DatasetSchema schema;
    schema.name = j.value("name", std::string{});
    const std::string delim = j.value("delimiter", std::string{","});
    if (delim.size() != 1) throw Error("schema delimiter must be a single character, got '" + delim + "'");
    schema.delimiter = delim[0];
    if (j.contains("missing_token")) schema.missing_token = j.at("missing_token").get<std::string>();
    schema.header_rows = j.value("header_rows", 0);
    schema.protected_attribute = j.at("protected_attribute").get<std::string>();
    schema.privileged_value = j.at("privileged_value").get<std::string>();
    schema.label_column = j.at("label_column").get<std::string>();
    schema.favorable_value = j.at("favorable_value").get<std::string>();
    for (const auto& col : j.at("columns")) {
      schema.columns.push_back({col.at("name").get<std::string>(),
                                column_kind_from_string(col.at("kind").get<std::string>())});
    }
    if (j.contains("value_map")) {
      for (const auto& [column_name, mapping] : j.at("value_map").items()) {
        std::map<std::string, std::string> m;
        for (const auto& [raw, mapped] : mapping.items()) m[raw] = mapped.get<std::string>();
        schema.value_map[column_name] = std::move(m);
      }
    }
    schema.validate();
    return schema;
  }

  static DatasetSchema from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schema file '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("schema file '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace fairsift
