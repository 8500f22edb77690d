#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairsift/association.hpp"
#include "fairsift/dataset.hpp"
#include "fairsift/debias.hpp"
#include "fairsift/encoding.hpp"
#include "fairsift/error.hpp"
#include "fairsift/logistic.hpp"
#include "fairsift/metrics.hpp"
#include "fairsift/reweighing.hpp"
#include "fairsift/schema.hpp"

namespace fairsift {

struct ExperimentConfig {
  std::string data_path;
  std::string schema_path;

  // Optional schema overrides, applied after the schema file is read.
  std::optional<std::string> protected_attribute;
  std::optional<std::string> privileged_value;
  std::optional<std::string> label_column;
  std::optional<std::string> favorable_value;

  double test_fraction = 0.3;
  std::uint64_t seed = 42;
  double corr_threshold = 0.8;
  double similarity_threshold = 0.99;
  std::vector<double> removal_percents = {0.0, 1.0, 2.0};
  TrainConfig trainer;
  bool reweigh = true;
  unsigned threads = 0;  // 0 = hardware concurrency

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["data_path"] = data_path;
    j["schema_path"] = schema_path;
    j["test_fraction"] = test_fraction;
    j["seed"] = seed;
    j["corr_threshold"] = corr_threshold;
    j["similarity_threshold"] = similarity_threshold;
    j["removal_percents"] = removal_percents;
    j["trainer"] = trainer.to_json();
    j["reweigh"] = reweigh;
    return j;
  }
};

// Metrics plus enough context to read one pipeline run on its own.
struct FairnessReport {
  double accuracy = 0.0;
  double spd = 0.0;
  double aod = 0.0;
  GroupConfusion confusion;

  struct RemovalSummary {
    double k_percent = 0.0;
    double threshold = 0.0;
    std::size_t flagged_pf = 0;
    std::size_t flagged_uu = 0;
    std::size_t budget_pf = 0;
    std::size_t budget_uu = 0;
    std::size_t removed_pf = 0;
    std::size_t removed_uu = 0;
    std::size_t shortfall_pf = 0;
    std::size_t shortfall_uu = 0;
  } removal;

  std::string dataset_name;
  GroupVocabulary groups;
  std::size_t train_rows = 0;       // after removal
  std::size_t test_rows = 0;
  bool reweighed = true;
  nlohmann::ordered_json reweighing_cells;  // null when reweighing is off
  std::string trainer_name;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  double corr_threshold = 0.0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["dataset"] = dataset_name;
    j["k_percent"] = removal.k_percent;
    j["metrics"] = {{"accuracy", accuracy}, {"aod", aod}, {"spd", spd}};
    j["confusion"] = confusion.to_json();
    j["groups"] = {{"privileged", groups.privileged_value},
                   {"unprivileged", groups.unprivileged_value},
                   {"favorable", groups.favorable_value},
                   {"unfavorable", groups.unfavorable_value}};
    j["removal"] = {{"k_percent", removal.k_percent},
                    {"similarity_threshold", removal.threshold},
                    {"flagged", {{"privileged_favorable", removal.flagged_pf},
                                 {"unprivileged_unfavorable", removal.flagged_uu}}},
                    {"budget", {{"privileged_favorable", removal.budget_pf},
                                {"unprivileged_unfavorable", removal.budget_uu}}},
                    {"removed", {{"privileged_favorable", removal.removed_pf},
                                 {"unprivileged_unfavorable", removal.removed_uu}}},
                    {"shortfall", {{"privileged_favorable", removal.shortfall_pf},
                                   {"unprivileged_unfavorable", removal.shortfall_uu}}}};
    j["train_rows"] = train_rows;
    j["test_rows"] = test_rows;
    j["reweighed"] = reweighed;
    j["reweighing_cells"] = reweighing_cells;
    j["trainer"] = trainer_name;
    j["seed"] = seed;
    j["test_fraction"] = test_fraction;
    j["corr_threshold"] = corr_threshold;
    return j;
  }
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("[") + name + "] " + e.what());
  }
}

}  // namespace detail

// Everything the per-k runs share: loaded data, fixed split, pruning,
// encoding, the group partition and the similarity ranking. Building this
// once keeps the k sweep cheap and guarantees every k sees the same test set.
struct PreparedData {
  DatasetSchema schema;
  LoadStats load_stats;
  RawDataset train;       // pruned columns
  RawDataset test;
  RawDataset train_full;  // original columns, for emitting filtered datasets
  RawDataset test_full;
  AssociationReport association;
  EncodedMatrix train_matrix;
  EncodedMatrix test_matrix;
  GroupPartition partition;
  FlagRanking ranking;
  std::map<std::string, std::size_t> train_protected_counts;

  PreparedData(RawDataset train_in, RawDataset test_in, RawDataset train_full_in,
               RawDataset test_full_in)
      : train(std::move(train_in)),
        test(std::move(test_in)),
        train_full(std::move(train_full_in)),
        test_full(std::move(test_full_in)) {}
};

inline DatasetSchema load_effective_schema(const ExperimentConfig& config) {
  DatasetSchema schema = DatasetSchema::from_file(config.schema_path);
  if (config.protected_attribute) schema.protected_attribute = *config.protected_attribute;
  if (config.privileged_value) schema.privileged_value = *config.privileged_value;
  if (config.label_column) schema.label_column = *config.label_column;
  if (config.favorable_value) schema.favorable_value = *config.favorable_value;
  schema.validate();
  return schema;
}

inline PreparedData prepare(const ExperimentConfig& config) {
  DatasetSchema schema =
      detail::stage("load-schema", [&] { return load_effective_schema(config); });
  RawDataset full = detail::stage("load", [&] { return load_csv(config.data_path, schema); });
  auto [train_raw, test_raw] = detail::stage(
      "split", [&] { return split_train_test(full, config.test_fraction, config.seed); });

  auto [train_pruned, association] = detail::stage(
      "prune", [&] { return prune_correlated(train_raw, config.corr_threshold); });
  RawDataset test_pruned = detail::stage("prune", [&] {
    auto dropped = association.dropped_columns();
    return dropped.empty() ? test_raw : test_raw.without_columns(dropped);
  });

  PreparedData prep(std::move(train_pruned), std::move(test_pruned), std::move(train_raw),
                    std::move(test_raw));
  prep.schema = std::move(schema);
  prep.load_stats = full.load_stats();
  prep.association = std::move(association);

  detail::stage("encode", [&] {
    auto [train_m, test_m] = encode(prep.train, prep.test);
    prep.train_matrix = std::move(train_m);
    prep.test_matrix = std::move(test_m);
    return 0;
  });

  // The encoder drops the protected attribute and the label from the
  // feature space by construction; re-verify at the pipeline boundary.
  for (const auto& col : prep.train_matrix.columns) {
    if (col.source == prep.schema.protected_attribute || col.source == prep.schema.label_column) {
      throw Error("[encode] feature matrix contains column derived from '" + col.source + "'");
    }
  }

  prep.partition =
      detail::stage("partition", [&] { return partition_groups(prep.train_matrix); });
  prep.ranking = detail::stage("similarity-scan", [&] {
    return flag_and_rank(prep.train_matrix, prep.partition, config.similarity_threshold,
                         config.threads);
  });
  prep.train_protected_counts = prep.train.counts_by_protected();
  return prep;
}

inline RemovalBudgets budgets_for(const PreparedData& prep, double k_percent) {
  const auto& counts = prep.train_protected_counts;
  const auto& groups = prep.train_matrix.groups;
  auto count_of = [&](const std::string& value) -> std::size_t {
    auto it = counts.find(value);
    return it == counts.end() ? 0 : it->second;
  };
  RemovalBudgets b;
  b.k_percent = k_percent;
  b.pf = removal_budget(count_of(groups.privileged_value), k_percent);
  b.uu = removal_budget(count_of(groups.unprivileged_value), k_percent);
  return b;
}

// One debias-train-evaluate pass at a fixed k, on an already prepared split.
inline std::pair<FairnessReport, RemovalPlan> run_prepared(const PreparedData& prep,
                                                           const ExperimentConfig& config,
                                                           double k_percent,
                                                           const Trainer& trainer) {
  auto [filtered, plan] = detail::stage("removal", [&] {
    return remove_top_k(prep.train_matrix, prep.ranking, budgets_for(prep, k_percent));
  });

  SampleWeights weights;
  if (config.reweigh) {
    weights = detail::stage("reweigh", [&] { return compute_weights(filtered); });
  } else {
    weights.per_row.assign(filtered.n_rows(), 1.0);
  }

  auto classifier = detail::stage("train", [&] {
    const auto y = filtered.favorable_labels();
    return trainer.fit(FeatureView::of(filtered), y, weights.per_row, config.trainer.seed);
  });

  FairnessReport report = detail::stage("evaluate", [&] {
    const auto probs = classifier->predict_proba(FeatureView::of(prep.test_matrix));
    std::vector<std::uint8_t> preds(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
    const auto truths = prep.test_matrix.favorable_labels();
    const auto privileged = prep.test_matrix.privileged_flags();

    FairnessReport r;
    r.confusion = confusion_by_group(preds, truths, privileged);
    r.accuracy = accuracy(preds, truths);
    r.spd = spd_from_confusion(r.confusion);
    r.aod = aod_from_confusion(r.confusion);
    return r;
  });

  report.removal = {k_percent,          plan.threshold,          prep.ranking.pf.size(),
                    prep.ranking.uu.size(), plan.budget_pf,      plan.budget_uu,
                    plan.removed_pf.size(), plan.removed_uu.size(), plan.shortfall_pf,
                    plan.shortfall_uu};
  report.dataset_name = prep.schema.name;
  report.groups = prep.train_matrix.groups;
  report.train_rows = filtered.n_rows();
  report.test_rows = prep.test_matrix.n_rows();
  report.reweighed = config.reweigh;
  report.reweighing_cells =
      config.reweigh ? weights.cells_to_json(filtered.groups) : nlohmann::ordered_json();
  report.trainer_name = trainer.name();
  report.seed = config.seed;
  report.test_fraction = config.test_fraction;
  report.corr_threshold = config.corr_threshold;
  return {std::move(report), std::move(plan)};
}

inline FairnessReport run_pipeline(const ExperimentConfig& config, double k_percent) {
  PreparedData prep = prepare(config);
  LogisticTrainer trainer(config.trainer);
  return run_prepared(prep, config, k_percent, trainer).first;
}

struct ExperimentRun {
  double k_percent = 0.0;
  FairnessReport report;
  RemovalPlan plan;
};

struct ExperimentReport {
  nlohmann::ordered_json config_echo;
  std::string dataset_name;
  GroupVocabulary groups;
  LoadStats load_stats;
  std::map<std::string, std::size_t> train_protected_counts;
  std::size_t train_rows = 0;  // before removal
  std::size_t test_rows = 0;
  AssociationReport association;
  std::vector<ExperimentRun> runs;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["config"] = config_echo;
    nlohmann::ordered_json totals;
    for (const auto& [value, count] : load_stats.protected_totals) totals[value] = count;
    nlohmann::ordered_json train_counts;
    for (const auto& [value, count] : train_protected_counts) train_counts[value] = count;
    j["dataset"] = {{"name", dataset_name},
                    {"file_lines", load_stats.file_lines},
                    {"parsed_rows", load_stats.parsed_rows},
                    {"dropped_missing", load_stats.dropped_missing},
                    {"protected_totals", totals},
                    {"train_rows", train_rows},
                    {"test_rows", test_rows},
                    {"train_protected_counts", train_counts}};
    j["pruning"] = association.to_json();
    j["runs"] = nlohmann::ordered_json::array();
    for (const auto& run : runs) {
      nlohmann::ordered_json rj;
      rj["k_percent"] = run.k_percent;
      rj["report"] = run.report.to_json();
      rj["removal_plan"] = run.plan.to_json();
      j["runs"].push_back(std::move(rj));
    }
    return j;
  }
};

// Runs the pipeline once per removal percent on a shared split. The percent
// list is normalized to include the k=0 baseline, deduplicated and sorted,
// so every comparison report contains its reference row.
inline ExperimentReport run_experiment(const ExperimentConfig& config, const Trainer& trainer) {
  std::vector<double> percents = config.removal_percents;
  percents.push_back(0.0);
  std::sort(percents.begin(), percents.end());
  percents.erase(std::unique(percents.begin(), percents.end()), percents.end());

  PreparedData prep = prepare(config);

  ExperimentReport report;
  report.config_echo = config.to_json();
  report.config_echo["removal_percents"] = percents;
  report.dataset_name = prep.schema.name;
  report.groups = prep.train_matrix.groups;
  report.load_stats = prep.load_stats;
  report.train_protected_counts = prep.train_protected_counts;
  report.train_rows = prep.train_matrix.n_rows();
  report.test_rows = prep.test_matrix.n_rows();
  report.association = prep.association;

  for (double k : percents) {
    auto [run_report, plan] = run_prepared(prep, config, k, trainer);
    report.runs.push_back({k, std::move(run_report), std::move(plan)});
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  LogisticTrainer trainer(config.trainer);
  return run_experiment(config, trainer);
}

namespace detail {

inline std::string k_label(double k) {
  if (k == 0.0) return "Raw";
  char buf[48];
  if (k == static_cast<double>(static_cast<long long>(k))) {
    std::snprintf(buf, sizeof(buf), "%lld %% removal", static_cast<long long>(k));
  } else {
    std::snprintf(buf, sizeof(buf), "%g %% removal", k);
  }
  return buf;
}

}  // namespace detail

// Per-k metric rows, in the spirit of a results table:
// data variant | accuracy | AOD | SPD.
inline std::string render_metrics_table(const ExperimentReport& report) {
  std::string out;
  out += "dataset: " + report.dataset_name + " (trainer: " +
         (report.runs.empty() ? std::string("-") : report.runs[0].report.trainer_name) + ")\n";
  char header[128];
  std::snprintf(header, sizeof(header), "%-16s %9s %9s %9s\n", "Data", "Accuracy", "AOD", "SPD");
  out += header;
  for (const auto& run : report.runs) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %9.4f %9.4f %9.4f\n",
                  detail::k_label(run.k_percent).c_str(), run.report.accuracy, run.report.aod,
                  run.report.spd);
    out += line;
  }
  return out;
}

// Removal counts per protected group, with the training-split totals the
// budgets were computed from.
inline std::string render_removal_table(const ExperimentReport& report) {
  const std::string& priv = report.groups.privileged_value;
  const std::string& unpriv = report.groups.unprivileged_value;
  auto count_of = [&](const std::string& v) -> std::size_t {
    auto it = report.train_protected_counts.find(v);
    return it == report.train_protected_counts.end() ? 0 : it->second;
  };
  std::string out = "dataset: " + report.dataset_name + " (training split)\n";
  char header[160];
  std::snprintf(header, sizeof(header), "%-16s %12s %12s\n", "Instance", priv.c_str(),
                unpriv.c_str());
  out += header;
  char totals[160];
  std::snprintf(totals, sizeof(totals), "%-16s %12zu %12zu\n", "Total", count_of(priv),
                count_of(unpriv));
  out += totals;
  for (const auto& run : report.runs) {
    if (run.k_percent == 0.0) continue;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %12zu %12zu\n",
                  detail::k_label(run.k_percent).c_str(), run.plan.removed_pf.size(),
                  run.plan.removed_uu.size());
    out += line;
  }
  return out;
}

}  // namespace fairsift
