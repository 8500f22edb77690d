#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsift/dataset.hpp"
#include "fairsift/error.hpp"

namespace fairsift {

namespace detail {

inline double parse_numeric(const std::string& s, const std::string& context) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error("cannot parse '" + s + "' as a number (" + context + ")");
  }
  return value;
}

}  // namespace detail

struct AssociationEntry {
  std::string column;
  ColumnKind kind = ColumnKind::categorical;
  double score = 0.0;
  bool dropped = false;
  bool degenerate = false;  // zero-variance feature, score forced to 0
};

struct AssociationReport {
  double threshold = 0.0;
  std::vector<AssociationEntry> entries;

  std::vector<std::string> dropped_columns() const {
    std::vector<std::string> names;
    for (const auto& e : entries) {
      if (e.dropped) names.push_back(e.column);
    }
    return names;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["threshold"] = threshold;
    j["columns"] = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
      j["columns"].push_back({{"name", e.column},
                              {"kind", to_string(e.kind)},
                              {"score", e.score},
                              {"dropped", e.dropped},
                              {"degenerate", e.degenerate}});
    }
    return j;
  }
};

// Point-biserial correlation between a numeric feature and a binary group
// indicator: Pearson correlation against the 0/1 membership vector.
// Returns 0 when either side has zero variance.
inline double point_biserial(const std::vector<double>& x, const std::vector<bool>& group) {
  if (x.size() != group.size() || x.empty()) {
    throw Error("point_biserial: mismatched or empty inputs");
  }
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_g = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_g += group[i] ? 1.0 : 0.0;
  }
  mean_x /= n;
  mean_g /= n;
  double sxx = 0.0, sgg = 0.0, sxg = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dg = (group[i] ? 1.0 : 0.0) - mean_g;
    sxx += dx * dx;
    sgg += dg * dg;
    sxg += dx * dg;
  }
  if (sxx <= 0.0 || sgg <= 0.0) return 0.0;
  return sxg / std::sqrt(sxx * sgg);
}

// Cramér's V from a contingency table of counts (rows: feature categories,
// columns: groups). V = sqrt(chi^2 / (n * min(r-1, c-1))).
inline double cramers_v_from_table(const std::vector<std::vector<double>>& table) {
  const std::size_t r = table.size();
  if (r == 0) return 0.0;
  const std::size_t c = table[0].size();
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (table[i].size() != c) throw Error("cramers_v_from_table: ragged table");
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      n += table[i][j];
    }
  }
  std::size_t r_eff = 0, c_eff = 0;
  for (double s : row_sum) r_eff += s > 0.0 ? 1 : 0;
  for (double s : col_sum) c_eff += s > 0.0 ? 1 : 0;
  const std::size_t dof = std::min(r_eff, c_eff) > 0 ? std::min(r_eff, c_eff) - 1 : 0;
  if (dof == 0 || n <= 0.0) return 0.0;

  double chi2 = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (row_sum[i] <= 0.0) continue;
    for (std::size_t j = 0; j < c; ++j) {
      if (col_sum[j] <= 0.0) continue;
      const double expected = row_sum[i] * col_sum[j] / n;
      const double d = table[i][j] - expected;
      chi2 += d * d / expected;
    }
  }
  return std::clamp(std::sqrt(chi2 / (n * static_cast<double>(dof))), 0.0, 1.0);
}

inline double cramers_v(const std::vector<std::string>& x, const std::vector<bool>& group) {
  if (x.size() != group.size() || x.empty()) throw Error("cramers_v: mismatched or empty inputs");
  std::map<std::string, std::size_t> category_index;
  for (const auto& v : x) category_index.emplace(v, category_index.size());
  std::vector<std::vector<double>> table(category_index.size(), std::vector<double>(2, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    table[category_index[x[i]]][group[i] ? 1 : 0] += 1.0;
  }
  return cramers_v_from_table(table);
}

// Association in [0,1] between one feature column and the binary protected
// attribute: |point-biserial| for numeric columns, Cramér's V for
// categorical ones. Both are invariant under relabeling the two groups.
// A zero-variance feature scores 0 and is reported as degenerate.
inline double association_score(const RawDataset& data, std::size_t column_index,
                                bool* degenerate = nullptr) {
  const auto& col = data.schema().columns.at(column_index);
  std::vector<bool> group(data.row_count());
  for (std::size_t i = 0; i < data.row_count(); ++i) group[i] = data.is_privileged(i);

  bool constant_feature = false;
  double score = 0.0;
  if (col.kind == ColumnKind::numeric) {
    std::vector<double> x(data.row_count());
    for (std::size_t i = 0; i < data.row_count(); ++i) {
      x[i] = detail::parse_numeric(data.row(i)[column_index],
                                   "column '" + col.name + "', row " + std::to_string(i));
    }
    constant_feature = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    score = constant_feature ? 0.0 : std::abs(point_biserial(x, group));
  } else {
    std::vector<std::string> x(data.row_count());
    for (std::size_t i = 0; i < data.row_count(); ++i) x[i] = data.row(i)[column_index];
    constant_feature = std::all_of(x.begin(), x.end(), [&](const std::string& v) { return v == x[0]; });
    score = constant_feature ? 0.0 : cramers_v(x, group);
  }
  if (degenerate) *degenerate = constant_feature;
  return score;
}

// Scores every feature column against the protected attribute and removes
// those scoring strictly above the threshold. The protected attribute and
// the label are never candidates: the former is needed for grouping and is
// dropped from the feature space at encoding time, the latter is the target.
inline std::pair<RawDataset, AssociationReport> prune_correlated(const RawDataset& data,
                                                                 double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("correlation threshold must lie in (0,1], got " + std::to_string(threshold));
  }
  const auto& schema = data.schema();
  AssociationReport report;
  report.threshold = threshold;
  std::vector<std::string> to_drop;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (col.name == schema.protected_attribute || col.name == schema.label_column) continue;
    AssociationEntry entry;
    entry.column = col.name;
    entry.kind = col.kind;
    if (data.row_count() == 0) {
      entry.score = 0.0;
      entry.degenerate = true;
    } else {
      entry.score = association_score(data, c, &entry.degenerate);
    }
    entry.dropped = entry.score > threshold;
    if (entry.dropped) to_drop.push_back(col.name);
    report.entries.push_back(std::move(entry));
  }
  RawDataset pruned = to_drop.empty() ? data : data.without_columns(to_drop);
  return {std::move(pruned), std::move(report)};
}

}  // namespace fairsift
