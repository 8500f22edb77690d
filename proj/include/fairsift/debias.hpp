#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairsift/encoding.hpp"
#include "fairsift/error.hpp"

namespace fairsift {

// The two groups the similarity scan compares: privileged rows with the
// favorable label against unprivileged rows with the unfavorable label.
// Indices refer to rows of the encoded training matrix.
struct GroupPartition {
  std::vector<std::size_t> pf;         // privileged  & favorable
  std::vector<std::size_t> uu;         // unprivileged & unfavorable
  std::vector<std::size_t> remainder;  // everything else
};

inline GroupPartition partition_groups(const EncodedMatrix& train) {
  GroupPartition part;
  for (std::size_t i = 0; i < train.n_rows(); ++i) {
    const auto& m = train.meta[i];
    if (m.privileged && m.favorable) {
      part.pf.push_back(i);
    } else if (!m.privileged && !m.favorable) {
      part.uu.push_back(i);
    } else {
      part.remainder.push_back(i);
    }
  }
  if (part.pf.empty()) {
    throw Error("group (privileged='" + train.groups.privileged_value + "', label='" +
                train.groups.favorable_value + "') is empty; no cross-group pairs can exist");
  }
  if (part.uu.empty()) {
    throw Error("group (unprivileged='" + train.groups.unprivileged_value + "', label='" +
                train.groups.unfavorable_value + "') is empty; no cross-group pairs can exist");
  }
  return part;
}

// Cosine similarity. A zero vector compares as 0 to everything (it can never
// clear a positive threshold). Vectors with identical content compare as
// exactly 1.0, so an inclusive threshold of 1.0 still flags duplicates.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    dot += u[j] * v[j];
    nu += u[j] * u[j];
    nv += v[j] * v[j];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  if (dot * dot >= nu * nv) return dot >= 0.0 ? 1.0 : -1.0;
  return dot / std::sqrt(nu * nv);
}

enum class GroupTag { privileged_favorable, unprivileged_unfavorable };

inline const char* to_string(GroupTag tag) {
  return tag == GroupTag::privileged_favorable ? "privileged_favorable" : "unprivileged_unfavorable";
}

struct FlagEntry {
  std::int64_t row_id = 0;
  std::size_t index = 0;  // row index in the encoded training matrix
  std::size_t match_count = 0;
  double max_similarity = 0.0;
};

// Flagged rows of both groups, each list sorted by match_count descending,
// then max_similarity descending, then row_id ascending.
struct FlagRanking {
  double threshold = 0.0;
  std::vector<FlagEntry> pf;
  std::vector<FlagEntry> uu;
  std::size_t zero_vector_rows = 0;
};

namespace detail {

struct ScanSide {
  std::vector<const double*> rows;
  std::vector<double> norm2;
  std::vector<std::size_t> indices;
};

inline ScanSide gather_side(const EncodedMatrix& m, const std::vector<std::size_t>& indices,
                            std::size_t* zero_rows) {
  ScanSide side;
  side.indices = indices;
  side.rows.reserve(indices.size());
  side.norm2.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = m.row(i);
    double n2 = 0.0;
    for (double v : r) n2 += v * v;
    if (n2 == 0.0) ++*zero_rows;
    side.rows.push_back(r.data());
    side.norm2.push_back(n2);
  }
  return side;
}

inline void sort_ranking(std::vector<FlagEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const FlagEntry& a, const FlagEntry& b) {
    if (a.match_count != b.match_count) return a.match_count > b.match_count;
    if (a.max_similarity != b.max_similarity) return a.max_similarity > b.max_similarity;
    return a.row_id < b.row_id;
  });
}

}  // namespace detail

// Full exact scan of the |pf| x |uu| similarity table. A row is flagged when
// at least one opposite-group row reaches similarity >= threshold. The scan
// is partitioned over pf rows; per-thread partial counts merge by sum/max,
// so the result does not depend on the worker count.
inline FlagRanking flag_and_rank(const EncodedMatrix& train, const GroupPartition& part,
                                 double threshold, unsigned n_threads = 0) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("similarity threshold must lie in (0,1], got " + std::to_string(threshold));
  }
  FlagRanking out;
  out.threshold = threshold;

  detail::ScanSide pf = detail::gather_side(train, part.pf, &out.zero_vector_rows);
  detail::ScanSide uu = detail::gather_side(train, part.uu, &out.zero_vector_rows);
  const std::size_t dim = train.n_cols();

  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, std::max<std::size_t>(1, pf.rows.size())));

  std::vector<std::size_t> pf_count(pf.rows.size(), 0);
  std::vector<double> pf_max(pf.rows.size(), 0.0);
  std::vector<std::vector<std::size_t>> uu_count_parts(n_threads,
                                                       std::vector<std::size_t>(uu.rows.size(), 0));
  std::vector<std::vector<double>> uu_max_parts(n_threads,
                                                std::vector<double>(uu.rows.size(), 0.0));

  auto scan_block = [&](unsigned t, std::size_t begin, std::size_t end) {
    auto& uu_count = uu_count_parts[t];
    auto& uu_max = uu_max_parts[t];
    for (std::size_t a = begin; a < end; ++a) {
      const double* ra = pf.rows[a];
      const double na = pf.norm2[a];
      if (na == 0.0) continue;
      for (std::size_t b = 0; b < uu.rows.size(); ++b) {
        const double nb = uu.norm2[b];
        if (nb == 0.0) continue;
        const double* rb = uu.rows[b];
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += ra[j] * rb[j];
        double sim;
        if (dot * dot >= na * nb) {
          sim = dot >= 0.0 ? 1.0 : -1.0;
        } else {
          sim = dot / std::sqrt(na * nb);
        }
        if (sim >= threshold) {
          pf_count[a]++;
          pf_max[a] = std::max(pf_max[a], sim);
          uu_count[b]++;
          uu_max[b] = std::max(uu_max[b], sim);
        }
      }
    }
  };

  if (n_threads <= 1) {
    scan_block(0, 0, pf.rows.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (pf.rows.size() + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::size_t begin = std::min(pf.rows.size(), static_cast<std::size_t>(t) * chunk);
      const std::size_t end = std::min(pf.rows.size(), begin + chunk);
      workers.emplace_back(scan_block, t, begin, end);
    }
    for (auto& w : workers) w.join();
  }

  for (std::size_t a = 0; a < pf.rows.size(); ++a) {
    if (pf_count[a] == 0) continue;
    out.pf.push_back({train.meta[pf.indices[a]].row_id, pf.indices[a], pf_count[a], pf_max[a]});
  }
  for (std::size_t b = 0; b < uu.rows.size(); ++b) {
    std::size_t count = 0;
    double max_sim = 0.0;
    for (unsigned t = 0; t < n_threads; ++t) {
      count += uu_count_parts[t][b];
      max_sim = std::max(max_sim, uu_max_parts[t][b]);
    }
    if (count == 0) continue;
    out.uu.push_back({train.meta[uu.indices[b]].row_id, uu.indices[b], count, max_sim});
  }
  detail::sort_ranking(out.pf);
  detail::sort_ranking(out.uu);
  return out;
}

// Number of rows to remove from one group: floor of k percent of the
// group's per-protected-value row total. The denominator is the protected
// value's full row count, not the flagged count and not the
// (protected x label) group size.
inline std::size_t removal_budget(std::size_t group_total, double k_percent) {
  if (k_percent < 0.0) throw Error("removal percent must be >= 0, got " + std::to_string(k_percent));
  return static_cast<std::size_t>(std::floor(static_cast<double>(group_total) * k_percent / 100.0));
}

struct RemovalBudgets {
  double k_percent = 0.0;
  std::size_t pf = 0;
  std::size_t uu = 0;
};

struct RemovalPlan {
  double k_percent = 0.0;
  double threshold = 0.0;
  std::size_t budget_pf = 0;
  std::size_t budget_uu = 0;
  std::size_t shortfall_pf = 0;  // budget not met because too few rows were flagged
  std::size_t shortfall_uu = 0;
  std::vector<FlagEntry> removed_pf;
  std::vector<FlagEntry> removed_uu;

  std::size_t removed_total() const { return removed_pf.size() + removed_uu.size(); }

  nlohmann::ordered_json to_json() const {
    auto entries = [](const std::vector<FlagEntry>& list, GroupTag tag) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& e : list) {
        arr.push_back({{"row_id", e.row_id},
                       {"group", to_string(tag)},
                       {"match_count", e.match_count},
                       {"max_similarity", e.max_similarity}});
      }
      return arr;
    };
    nlohmann::ordered_json j;
    j["k_percent"] = k_percent;
    j["similarity_threshold"] = threshold;
    j["budget"] = {{"privileged_favorable", budget_pf}, {"unprivileged_unfavorable", budget_uu}};
    j["shortfall"] = {{"privileged_favorable", shortfall_pf}, {"unprivileged_unfavorable", shortfall_uu}};
    j["removed"] = {{"privileged_favorable", entries(removed_pf, GroupTag::privileged_favorable)},
                    {"unprivileged_unfavorable",
                     entries(removed_uu, GroupTag::unprivileged_unfavorable)}};
    return j;
  }

  std::string to_csv() const {
    std::string csv = "row_id,group,match_count,max_similarity\n";
    auto append = [&csv](const std::vector<FlagEntry>& list, GroupTag tag) {
      for (const auto& e : list) {
        char line[160];
        std::snprintf(line, sizeof(line), "%lld,%s,%zu,%.17g\n",
                      static_cast<long long>(e.row_id), to_string(tag), e.match_count,
                      e.max_similarity);
        csv += line;
      }
    };
    append(removed_pf, GroupTag::privileged_favorable);
    append(removed_uu, GroupTag::unprivileged_unfavorable);
    return csv;
  }
};

// Removes the top entries of each group's ranking, clamped to the number of
// flagged rows. Rows outside the two groups are never touched.
inline std::pair<EncodedMatrix, RemovalPlan> remove_top_k(const EncodedMatrix& train,
                                                          const FlagRanking& ranking,
                                                          const RemovalBudgets& budgets) {
  RemovalPlan plan;
  plan.k_percent = budgets.k_percent;
  plan.threshold = ranking.threshold;
  plan.budget_pf = budgets.pf;
  plan.budget_uu = budgets.uu;

  const std::size_t take_pf = std::min(budgets.pf, ranking.pf.size());
  const std::size_t take_uu = std::min(budgets.uu, ranking.uu.size());
  plan.shortfall_pf = budgets.pf - take_pf;
  plan.shortfall_uu = budgets.uu - take_uu;
  plan.removed_pf.assign(ranking.pf.begin(), ranking.pf.begin() + take_pf);
  plan.removed_uu.assign(ranking.uu.begin(), ranking.uu.begin() + take_uu);

  std::vector<std::size_t> drop;
  drop.reserve(take_pf + take_uu);
  for (const auto& e : plan.removed_pf) drop.push_back(e.index);
  for (const auto& e : plan.removed_uu) drop.push_back(e.index);
  return {train.without_rows(drop), std::move(plan)};
}

}  // namespace fairsift
