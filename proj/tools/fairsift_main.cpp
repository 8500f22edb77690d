// Command-line front end: debias a dataset, train and evaluate the built-in
// weighted logistic regression, or sweep removal percentages end to end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairsift/fairsift.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonOptions {
  fairsift::ExperimentConfig config;
  std::string out_dir = "out";
  std::string protected_attr, privileged_value, label_column, favorable_value;
  double removal_percent = 1.0;
  bool no_reweigh = false;

  void add_data_options(CLI::App* cmd, bool need_schema = true) {
    cmd->add_option("--data", config.data_path, "path to the delimited data file")->required();
    auto* schema_opt =
        cmd->add_option("--schema", config.schema_path, "path to the dataset schema JSON");
    if (need_schema) schema_opt->required();
    cmd->add_option("--protected-attr", protected_attr, "override the schema's protected attribute");
    cmd->add_option("--privileged-value", privileged_value, "override the privileged value");
    cmd->add_option("--label", label_column, "override the label column");
    cmd->add_option("--favorable-value", favorable_value, "override the favorable label value");
  }

  void add_pipeline_options(CLI::App* cmd) {
    cmd->add_option("--similarity-threshold", config.similarity_threshold,
                    "cosine similarity flagging threshold")
        ->capture_default_str();
    cmd->add_option("--corr-threshold", config.corr_threshold,
                    "protected-attribute association threshold for feature pruning")
        ->capture_default_str();
    cmd->add_option("--test-fraction", config.test_fraction, "held-out test fraction")
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "split seed")->capture_default_str();
    cmd->add_flag("--no-reweigh", no_reweigh, "skip reweighing (weights all 1)");
    cmd->add_option("--learning-rate", config.trainer.learning_rate, "trainer learning rate")
        ->capture_default_str();
    cmd->add_option("--l2-penalty", config.trainer.l2_penalty, "trainer L2 penalty")
        ->capture_default_str();
    cmd->add_option("--max-epochs", config.trainer.max_epochs, "trainer epoch cap")
        ->capture_default_str();
    cmd->add_option("--threads", config.threads, "similarity scan threads (0 = auto)")
        ->capture_default_str();
  }

  void add_out_dir(CLI::App* cmd) {
    cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  }

  fairsift::ExperimentConfig finalize() {
    if (!protected_attr.empty()) config.protected_attribute = protected_attr;
    if (!privileged_value.empty()) config.privileged_value = privileged_value;
    if (!label_column.empty()) config.label_column = label_column;
    if (!favorable_value.empty()) config.favorable_value = favorable_value;
    config.reweigh = !no_reweigh;
    return config;
  }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fairsift::Error("cannot write '" + path.string() + "'");
  out << content;
}

std::string join_row(const std::vector<std::string>& fields, char delimiter) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += delimiter;
    line += fields[i];
  }
  return line;
}

std::string dataset_to_text(const fairsift::RawDataset& data) {
  std::string text;
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    text += join_row(data.row(i), data.schema().delimiter);
    text += '\n';
  }
  return text;
}

int cmd_debias(CommonOptions& opts) {
  const auto config = opts.finalize();
  fairsift::PreparedData prep = fairsift::prepare(config);
  auto [filtered, plan] = fairsift::remove_top_k(
      prep.train_matrix, prep.ranking, fairsift::budgets_for(prep, opts.removal_percent));

  fairsift::SampleWeights weights;
  if (config.reweigh) {
    weights = fairsift::compute_weights(filtered);
  } else {
    weights.per_row.assign(filtered.n_rows(), 1.0);
  }

  std::set<std::int64_t> removed_ids;
  for (const auto& e : plan.removed_pf) removed_ids.insert(e.row_id);
  for (const auto& e : plan.removed_uu) removed_ids.insert(e.row_id);
  fairsift::RawDataset filtered_train = prep.train_full.without_rows(removed_ids);

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "filtered_train.csv", dataset_to_text(filtered_train));
  write_file(fs::path(opts.out_dir) / "removal_plan.csv", plan.to_csv());

  ordered_json weights_json;
  for (std::size_t i = 0; i < filtered.n_rows(); ++i) {
    weights_json[std::to_string(filtered.meta[i].row_id)] = weights.per_row[i];
  }
  ordered_json out;
  out["config"] = config.to_json();
  out["k_percent"] = opts.removal_percent;
  out["flagged"] = {{"privileged_favorable", prep.ranking.pf.size()},
                    {"unprivileged_unfavorable", prep.ranking.uu.size()}};
  out["removal_plan"] = plan.to_json();
  out["reweighing_cells"] = config.reweigh
                                ? weights.cells_to_json(filtered.groups)
                                : ordered_json();
  out["weights"] = std::move(weights_json);
  write_file(fs::path(opts.out_dir) / "debias.json", out.dump(2) + "\n");

  std::printf("flagged %zu + %zu rows, removed %zu + %zu (k = %g%%, threshold %g)\n",
              prep.ranking.pf.size(), prep.ranking.uu.size(), plan.removed_pf.size(),
              plan.removed_uu.size(), opts.removal_percent, config.similarity_threshold);
  std::printf("wrote %s/{filtered_train.csv,removal_plan.csv,debias.json}\n",
              opts.out_dir.c_str());
  return 0;
}

int cmd_train(CommonOptions& opts) {
  const auto config = opts.finalize();
  fairsift::PreparedData prep = fairsift::prepare(config);
  auto [filtered, plan] = fairsift::remove_top_k(
      prep.train_matrix, prep.ranking, fairsift::budgets_for(prep, opts.removal_percent));

  fairsift::SampleWeights weights;
  if (config.reweigh) {
    weights = fairsift::compute_weights(filtered);
  } else {
    weights.per_row.assign(filtered.n_rows(), 1.0);
  }

  const auto y = filtered.favorable_labels();
  fairsift::LogisticModel model = fairsift::train_logistic(
      fairsift::FeatureView::of(filtered), y, weights.per_row, config.trainer);

  fairsift::Encoder encoder = fairsift::Encoder::fit(prep.train);

  ordered_json out;
  out["model_type"] = "logistic_regression";
  out["schema"] = prep.schema.to_json();
  out["pruned_columns"] = prep.association.dropped_columns();
  out["encoder"] = encoder.to_json();
  out["model"] = model.to_json();
  out["k_percent"] = opts.removal_percent;
  out["reweighed"] = config.reweigh;

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "model.json", out.dump(2) + "\n");
  write_file(fs::path(opts.out_dir) / "test_split.csv", dataset_to_text(prep.test_full));

  std::printf("trained on %zu rows (%zu removed), final loss %.6f after %zu epochs\n",
              filtered.n_rows(), plan.removed_total(), model.final_loss, model.epochs_run);
  std::printf("wrote %s/{model.json,test_split.csv}\n", opts.out_dir.c_str());
  return 0;
}

int cmd_evaluate(CommonOptions& opts, const std::string& model_path) {
  std::ifstream in(model_path);
  if (!in) throw fairsift::Error("cannot open model file '" + model_path + "'");
  nlohmann::json mj;
  in >> mj;

  fairsift::DatasetSchema schema =
      opts.config.schema_path.empty() ? fairsift::DatasetSchema::from_json(mj.at("schema"))
                                      : fairsift::DatasetSchema::from_file(opts.config.schema_path);
  if (!opts.protected_attr.empty()) schema.protected_attribute = opts.protected_attr;
  if (!opts.privileged_value.empty()) schema.privileged_value = opts.privileged_value;
  if (!opts.label_column.empty()) schema.label_column = opts.label_column;
  if (!opts.favorable_value.empty()) schema.favorable_value = opts.favorable_value;
  schema.validate();

  fairsift::RawDataset data = fairsift::load_csv(opts.config.data_path, schema);
  const auto pruned_columns = mj.at("pruned_columns").get<std::vector<std::string>>();
  if (!pruned_columns.empty()) data = data.without_columns(pruned_columns);

  fairsift::Encoder encoder = fairsift::Encoder::from_json(mj.at("encoder"), data.schema());
  fairsift::EncodedMatrix matrix = encoder.transform(data);
  fairsift::LogisticModel model = fairsift::LogisticModel::from_json(mj.at("model"));

  fairsift::Prediction pred = fairsift::predict(model, fairsift::FeatureView::of(matrix));
  const auto truths = matrix.favorable_labels();
  const auto privileged = matrix.privileged_flags();
  const auto confusion = fairsift::confusion_by_group(pred.labels, truths, privileged);

  ordered_json report;
  report["model"] = model_path;
  report["data"] = opts.config.data_path;
  report["rows"] = matrix.n_rows();
  report["metrics"] = {{"accuracy", fairsift::accuracy(pred.labels, truths)},
                       {"aod", fairsift::aod_from_confusion(confusion)},
                       {"spd", fairsift::spd_from_confusion(confusion)}};
  report["confusion"] = confusion.to_json();

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "report.json", report.dump(2) + "\n");

  std::printf("%-10s accuracy %.4f  AOD %+.4f  SPD %+.4f  (%zu rows)\n", "evaluate",
              report["metrics"]["accuracy"].get<double>(), report["metrics"]["aod"].get<double>(),
              report["metrics"]["spd"].get<double>(), matrix.n_rows());
  std::printf("wrote %s/report.json\n", opts.out_dir.c_str());
  return 0;
}

int cmd_experiment(CommonOptions& opts, std::vector<double>& percents) {
  auto config = opts.finalize();
  if (!percents.empty()) config.removal_percents = percents;
  fairsift::ExperimentReport report = fairsift::run_experiment(config);

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "report.json", report.to_json().dump(2) + "\n");

  std::string plan_csv = "k_percent,row_id,group,match_count,max_similarity\n";
  auto append_entries = [&plan_csv](double k, const std::vector<fairsift::FlagEntry>& entries,
                                    fairsift::GroupTag tag) {
    for (const auto& e : entries) {
      char line[192];
      std::snprintf(line, sizeof(line), "%g,%lld,%s,%zu,%.17g\n", k,
                    static_cast<long long>(e.row_id), fairsift::to_string(tag), e.match_count,
                    e.max_similarity);
      plan_csv += line;
    }
  };
  for (const auto& run : report.runs) {
    if (run.k_percent == 0.0) continue;
    append_entries(run.k_percent, run.plan.removed_pf, fairsift::GroupTag::privileged_favorable);
    append_entries(run.k_percent, run.plan.removed_uu,
                   fairsift::GroupTag::unprivileged_unfavorable);
  }
  write_file(fs::path(opts.out_dir) / "removal_plan.csv", plan_csv);

  std::cout << fairsift::render_metrics_table(report) << "\n"
            << fairsift::render_removal_table(report);
  std::printf("\nwrote %s/{report.json,removal_plan.csv}\n", opts.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bias-aware preprocessing: flag and remove cross-group near-duplicate "
               "instances with opposite labels, reweigh, train, and report fairness metrics"};
  app.require_subcommand(1);

  CommonOptions debias_opts, train_opts, eval_opts, exp_opts;
  std::string model_path;
  std::vector<double> experiment_percents;

  auto* debias = app.add_subcommand("debias", "emit the filtered training set and removal plan");
  debias_opts.add_data_options(debias);
  debias_opts.add_pipeline_options(debias);
  debias_opts.add_out_dir(debias);
  debias->add_option("--removal-percent", debias_opts.removal_percent,
                     "percent of each protected group's rows to remove")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "debias, reweigh and fit the logistic model");
  train_opts.add_data_options(train);
  train_opts.add_pipeline_options(train);
  train_opts.add_out_dir(train);
  train->add_option("--removal-percent", train_opts.removal_percent,
                    "percent of each protected group's rows to remove")
      ->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a dataset");
  evaluate->add_option("--model", model_path, "model.json produced by `train`")->required();
  eval_opts.add_data_options(evaluate, /*need_schema=*/false);
  eval_opts.add_out_dir(evaluate);

  auto* experiment =
      app.add_subcommand("experiment", "sweep removal percents and render comparison tables");
  exp_opts.add_data_options(experiment);
  exp_opts.add_pipeline_options(experiment);
  exp_opts.add_out_dir(experiment);
  experiment
      ->add_option("--removal-percent", experiment_percents,
                   "removal percent (repeatable; 0 baseline always included)")
      ->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (debias->parsed()) return cmd_debias(debias_opts);
    if (train->parsed()) return cmd_train(train_opts);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts, model_path);
    if (experiment->parsed()) return cmd_experiment(exp_opts, experiment_percents);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
