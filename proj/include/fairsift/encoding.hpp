#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairsift/association.hpp"
#include "fairsift/dataset.hpp"
#include "fairsift/error.hpp"

namespace fairsift {

struct RowMeta {
  std::int64_t row_id = 0;
  bool privileged = false;
  bool favorable = false;
};

struct EncodedColumn {
  std::string source;
  std::string category;  // "numeric" for scaled columns, else the one-hot value
  bool is_numeric = false;
  double min = 0.0;  // normalization stats, numeric columns only
  double max = 0.0;
};

// The observed value names behind the privileged/favorable flags, kept so
// reports can name groups instead of printing booleans.
struct GroupVocabulary {
  std::string privileged_value;
  std::string unprivileged_value;
  std::string favorable_value;
  std::string unfavorable_value;
};

// Dense feature matrix: numeric columns min-max scaled to [0,1], categorical
// columns one-hot encoded. The protected attribute and the label never enter
// the feature columns; they ride along as per-row metadata only.
struct EncodedMatrix {
  std::vector<EncodedColumn> columns;
  GroupVocabulary groups;
  std::vector<double> values;  // row-major, meta.size() x columns.size()
  std::vector<RowMeta> meta;
  std::size_t unseen_category_cells = 0;
  std::vector<std::string> warnings;

  std::size_t n_rows() const { return meta.size(); }
  std::size_t n_cols() const { return columns.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * columns.size(), columns.size()};
  }
  std::vector<std::uint8_t> favorable_labels() const {
    std::vector<std::uint8_t> y(meta.size());
    for (std::size_t i = 0; i < meta.size(); ++i) y[i] = meta[i].favorable ? 1 : 0;
    return y;
  }
  std::vector<std::uint8_t> privileged_flags() const {
    std::vector<std::uint8_t> g(meta.size());
    for (std::size_t i = 0; i < meta.size(); ++i) g[i] = meta[i].privileged ? 1 : 0;
    return g;
  }

  EncodedMatrix without_rows(const std::vector<std::size_t>& drop_indices) const {
    std::vector<bool> drop(n_rows(), false);
    for (std::size_t i : drop_indices) drop.at(i) = true;
    EncodedMatrix out;
    out.columns = columns;
    out.groups = groups;
    out.unseen_category_cells = unseen_category_cells;
    out.warnings = warnings;
    out.values.reserve(values.size());
    for (std::size_t i = 0; i < n_rows(); ++i) {
      if (drop[i]) continue;
      auto r = row(i);
      out.values.insert(out.values.end(), r.begin(), r.end());
      out.meta.push_back(meta[i]);
    }
    return out;
  }
};

// Feature encoder fitted on training data only: per numeric column the
// min/max used for scaling, per categorical column the category vocabulary.
// Test-time values are clipped to [0,1]; unseen categories produce an
// all-zero block and are counted.
class Encoder {
 public:
  static Encoder fit(const RawDataset& train) {
    const auto& schema = train.schema();
    Encoder enc;
    enc.schema_ = schema;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      if (col.name == schema.protected_attribute || col.name == schema.label_column) continue;
      ColumnState state;
      state.source_index = c;
      state.name = col.name;
      state.kind = col.kind;
      if (col.kind == ColumnKind::numeric) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < train.row_count(); ++i) {
          const double v = detail::parse_numeric(
              train.row(i)[c], "column '" + col.name + "', row " + std::to_string(i));
          if (i == 0) {
            lo = hi = v;
          } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        state.min = lo;
        state.max = hi;
      } else {
        std::map<std::string, std::size_t> vocab;
        for (std::size_t i = 0; i < train.row_count(); ++i) vocab.emplace(train.row(i)[c], 0);
        std::size_t k = 0;
        for (auto& [value, index] : vocab) index = k++;
        state.vocabulary = std::move(vocab);
      }
      enc.states_.push_back(std::move(state));
    }
    enc.groups_ = derive_group_vocabulary(train);
    return enc;
  }

  EncodedMatrix transform(const RawDataset& data) const {
    const auto& schema = data.schema();
    if (schema.columns.size() != schema_.columns.size()) {
      throw Error("encoder was fitted on a different schema (column count mismatch)");
    }
    EncodedMatrix out;
    out.groups = groups_;
    for (const auto& state : states_) {
      if (state.kind == ColumnKind::numeric) {
        out.columns.push_back({state.name, "numeric", true, state.min, state.max});
        if (state.min == state.max) {
          out.warnings.push_back("numeric column '" + state.name +
                                 "' is constant on training data; encoded as 0");
        }
      } else {
        for (const auto& [value, index] : state.vocabulary) {
          out.columns.push_back({state.name, value, false, 0.0, 0.0});
        }
      }
    }
    out.values.reserve(data.row_count() * out.columns.size());
    out.meta.reserve(data.row_count());
    for (std::size_t i = 0; i < data.row_count(); ++i) {
      for (const auto& state : states_) {
        if (state.kind == ColumnKind::numeric) {
          const double v = detail::parse_numeric(
              data.row(i)[state.source_index],
              "column '" + state.name + "', row " + std::to_string(i));
          double scaled = 0.0;
          if (state.max > state.min) {
            scaled = std::clamp((v - state.min) / (state.max - state.min), 0.0, 1.0);
          }
          out.values.push_back(scaled);
        } else {
          const std::string& v = data.row(i)[state.source_index];
          auto it = state.vocabulary.find(v);
          const std::size_t block_start = out.values.size();
          out.values.insert(out.values.end(), state.vocabulary.size(), 0.0);
          if (it != state.vocabulary.end()) {
            out.values[block_start + it->second] = 1.0;
          } else {
            out.unseen_category_cells++;
          }
        }
      }
      out.meta.push_back({data.row_id(i), data.is_privileged(i), data.is_favorable(i)});
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["columns"] = nlohmann::ordered_json::array();
    for (const auto& state : states_) {
      nlohmann::ordered_json cj;
      cj["name"] = state.name;
      cj["kind"] = to_string(state.kind);
      if (state.kind == ColumnKind::numeric) {
        cj["min"] = state.min;
        cj["max"] = state.max;
      } else {
        auto vocab = nlohmann::ordered_json::array();
        for (const auto& [value, index] : state.vocabulary) vocab.push_back(value);
        cj["categories"] = vocab;
      }
      j["columns"].push_back(std::move(cj));
    }
    j["groups"] = {{"privileged", groups_.privileged_value},
                   {"unprivileged", groups_.unprivileged_value},
                   {"favorable", groups_.favorable_value},
                   {"unfavorable", groups_.unfavorable_value}};
    return j;
  }

  static Encoder from_json(const nlohmann::json& j, const DatasetSchema& schema) {
    Encoder enc;
    enc.schema_ = schema;
    for (const auto& cj : j.at("columns")) {
      ColumnState state;
      state.name = cj.at("name").get<std::string>();
      state.kind = column_kind_from_string(cj.at("kind").get<std::string>());
      const int idx = schema.index_of(state.name);
      if (idx < 0) throw Error("encoder column '" + state.name + "' missing from schema");
      state.source_index = static_cast<std::size_t>(idx);
      if (state.kind == ColumnKind::numeric) {
        state.min = cj.at("min").get<double>();
        state.max = cj.at("max").get<double>();
      } else {
        std::size_t k = 0;
        for (const auto& v : cj.at("categories")) {
          state.vocabulary.emplace(v.get<std::string>(), k++);
        }
      }
      enc.states_.push_back(std::move(state));
    }
    const auto& g = j.at("groups");
    enc.groups_ = {g.at("privileged").get<std::string>(), g.at("unprivileged").get<std::string>(),
                   g.at("favorable").get<std::string>(), g.at("unfavorable").get<std::string>()};
    return enc;
  }

  const GroupVocabulary& groups() const { return groups_; }

 private:
  struct ColumnState {
    std::size_t source_index = 0;
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    double min = 0.0;
    double max = 0.0;
    std::map<std::string, std::size_t> vocabulary;  // sorted, index = block offset
  };

  static GroupVocabulary derive_group_vocabulary(const RawDataset& data) {
    const auto& schema = data.schema();
    GroupVocabulary g;
    g.privileged_value = schema.privileged_value;
    g.favorable_value = schema.favorable_value;
    for (std::size_t i = 0; i < data.row_count(); ++i) {
      if (!data.is_privileged(i) && g.unprivileged_value.empty()) {
        g.unprivileged_value = data.protected_value(i);
      }
      if (!data.is_favorable(i) && g.unfavorable_value.empty()) {
        g.unfavorable_value = data.label(i);
      }
      if (!g.unprivileged_value.empty() && !g.unfavorable_value.empty()) break;
    }
    return g;
  }

  DatasetSchema schema_;
  std::vector<ColumnState> states_;
  GroupVocabulary groups_;
};

inline std::pair<EncodedMatrix, EncodedMatrix> encode(const RawDataset& train,
                                                      const RawDataset& test) {
  Encoder enc = Encoder::fit(train);
  return {enc.transform(train), enc.transform(test)};
}

}  // namespace fairsift
