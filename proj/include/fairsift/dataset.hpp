#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairsift/error.hpp"
#include "fairsift/schema.hpp"

namespace fairsift {

// Counters gathered while reading a file. protected_totals is tallied over
// every well-formed data row, including rows later dropped for carrying the
// missing token, so it matches the raw file's per-group totals.
struct LoadStats {
  std::size_t file_lines = 0;
  std::size_t blank_lines = 0;
  std::size_t parsed_rows = 0;
  std::size_t dropped_missing = 0;
  std::map<std::string, std::size_t> protected_totals;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ' || delimiter == '\t') {
    // Whitespace mode: runs of blanks separate fields.
    std::string cur;
    for (char c : line) {
      if (c == ' ' || c == '\t' || c == '\r') {
        if (!cur.empty()) fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) fields.push_back(std::move(cur));
    return fields;
  }
  std::string cur;
  for (char c : line) {
    if (c == delimiter) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

// Fisher-Yates with an explicit rejection-sampled bound so shuffles do not
// depend on the standard library's distribution internals.
inline std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

template <class T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded_rand(rng, i)]);
  }
}

}  // namespace detail

// Immutable tabular dataset: text fields already passed through the
// schema's value_map, one stable row id per row. Ids are assigned from the
// file's data-row position, so a removal plan can be traced back to lines.
class RawDataset {
 public:
  explicit RawDataset(DatasetSchema schema) : schema_(std::move(schema)) {}

  const DatasetSchema& schema() const { return schema_; }
  std::size_t row_count() const { return rows_.size(); }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  std::int64_t row_id(std::size_t i) const { return row_ids_[i]; }
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  const LoadStats& load_stats() const { return load_stats_; }

  const std::string& protected_value(std::size_t i) const {
    return rows_[i][static_cast<std::size_t>(schema_.protected_index())];
  }
  const std::string& label(std::size_t i) const {
    return rows_[i][static_cast<std::size_t>(schema_.label_index())];
  }
  bool is_privileged(std::size_t i) const { return protected_value(i) == schema_.privileged_value; }
  bool is_favorable(std::size_t i) const { return label(i) == schema_.favorable_value; }

  void append_row(std::vector<std::string> fields, std::int64_t id) {
    if (fields.size() != schema_.columns.size()) {
      throw Error("row width " + std::to_string(fields.size()) + " does not match schema width " +
                  std::to_string(schema_.columns.size()));
    }
    rows_.push_back(std::move(fields));
    row_ids_.push_back(id);
  }

  void set_load_stats(LoadStats stats) { load_stats_ = std::move(stats); }

  // Per-protected-value counts over the rows currently held (after any
  // dropping or splitting), as opposed to load_stats().protected_totals.
  std::map<std::string, std::size_t> counts_by_protected() const {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < rows_.size(); ++i) counts[protected_value(i)]++;
    return counts;
  }

  std::map<std::pair<std::string, std::string>, std::size_t> counts_by_cell() const {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (std::size_t i = 0; i < rows_.size(); ++i) counts[{protected_value(i), label(i)}]++;
    return counts;
  }

  RawDataset without_columns(const std::vector<std::string>& names) const {
    DatasetSchema pruned = schema_.without_columns(names);
    std::vector<std::size_t> keep;
    for (const auto& col : pruned.columns) {
      keep.push_back(static_cast<std::size_t>(schema_.index_of(col.name)));
    }
    RawDataset out(std::move(pruned));
    out.rows_.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::vector<std::string> fields;
      fields.reserve(keep.size());
      for (std::size_t k : keep) fields.push_back(rows_[i][k]);
      out.rows_.push_back(std::move(fields));
      out.row_ids_.push_back(row_ids_[i]);
    }
    out.load_stats_ = load_stats_;
    return out;
  }

  RawDataset without_rows(const std::set<std::int64_t>& remove_ids) const {
    RawDataset out(schema_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!remove_ids.count(row_ids_[i])) out.append_row(rows_[i], row_ids_[i]);
    }
    out.load_stats_ = load_stats_;
    return out;
  }

 private:
  DatasetSchema schema_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::int64_t> row_ids_;
  LoadStats load_stats_;
};

// Reads a delimited text file against the schema. Blank lines are skipped;
// rows containing the missing token in any field are dropped and counted;
// the value_map is applied before anything else sees the fields. Protected
// and label columns must be binary (at most two observed values) afterward.
inline RawDataset load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file '" + path + "'");

  const std::size_t protected_idx = static_cast<std::size_t>(schema.protected_index());
  const std::size_t label_idx = static_cast<std::size_t>(schema.label_index());

  RawDataset data(schema);
  LoadStats stats;
  std::set<std::string> protected_values;
  std::set<std::string> label_values;

  auto check_binary = [&](std::set<std::string>& seen, const std::string& value, const char* what) {
    seen.insert(value);
    if (seen.size() > 2) {
      throw Error(std::string(what) + " column is not binary: saw third value '" + value + "'");
    }
  };
  auto map_checked = [&](const std::string& column_name, const std::string& raw, const char* what,
                         std::size_t line_no) -> const std::string& {
    if (schema.has_value_map(column_name)) {
      const auto& mapping = schema.value_map.at(column_name);
      auto it = mapping.find(raw);
      if (it == mapping.end()) {
        throw Error(std::string(what) + " value '" + raw + "' on line " + std::to_string(line_no) +
                    " has no value_map entry");
      }
      return it->second;
    }
    return raw;
  };

  std::string line;
  std::size_t line_no = 0;
  std::int64_t next_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    stats.file_lines++;
    if (static_cast<int>(line_no) <= schema.header_rows) continue;
    if (detail::trim(line).empty()) {
      stats.blank_lines++;
      continue;
    }
    std::vector<std::string> fields = detail::split_fields(line, schema.delimiter);
    if (fields.size() != schema.columns.size()) {
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(schema.columns.size()) + " fields, got " +
                  std::to_string(fields.size()));
    }
    const std::int64_t id = next_id++;
    stats.parsed_rows++;

    bool has_missing = false;
    if (schema.missing_token) {
      for (const auto& f : fields) {
        if (f == *schema.missing_token) {
          has_missing = true;
          break;
        }
      }
    }

    // Apply the value_map to every field. Protected and label columns must
    // map cleanly; other columns pass unmapped values through.
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& column_name = schema.columns[c].name;
      if (c == protected_idx) {
        fields[c] = map_checked(column_name, fields[c], "protected attribute", line_no);
      } else if (c == label_idx) {
        fields[c] = map_checked(column_name, fields[c], "label", line_no);
      } else {
        fields[c] = schema.map_value(column_name, fields[c]);
      }
    }

    // Group totals follow the raw file: count the row even when it is about
    // to be dropped for a missing value elsewhere.
    if (!schema.missing_token || fields[protected_idx] != *schema.missing_token) {
      check_binary(protected_values, fields[protected_idx], "protected attribute");
      stats.protected_totals[fields[protected_idx]]++;
    }
    if (!has_missing) {
      check_binary(label_values, fields[label_idx], "label");
      data.append_row(std::move(fields), id);
    } else {
      stats.dropped_missing++;
    }
  }

  data.set_load_stats(std::move(stats));
  return data;
}

// Deterministic stratified split on (protected value x label) cells. Each
// observed cell contributes round(cell_size * test_fraction) test rows,
// clamped so both sides keep at least one row per cell.
inline std::pair<RawDataset, RawDataset> split_train_test(const RawDataset& data,
                                                          double test_fraction,
                                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test_fraction must lie in (0,1), got " + std::to_string(test_fraction));
  }

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    strata[{data.protected_value(i), data.label(i)}].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_test(data.row_count(), false);
  for (auto& [key, indices] : strata) {
    if (indices.size() < 2) {
      throw Error("stratum (" + key.first + ", " + key.second + ") has only " +
                  std::to_string(indices.size()) + " row(s); need at least 2 to split");
    }
    detail::deterministic_shuffle(indices, rng);
    auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(indices.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, indices.size() - 1);
    for (std::size_t k = 0; k < n_test; ++k) in_test[indices[k]] = true;
  }

  RawDataset train(data.schema());
  RawDataset test(data.schema());
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    (in_test[i] ? test : train).append_row(data.row(i), data.row_id(i));
  }
  train.set_load_stats(data.load_stats());
  test.set_load_stats(data.load_stats());
  return {std::move(train), std::move(test)};
}

}  // namespace fairsift
