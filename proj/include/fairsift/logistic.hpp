#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsift/encoding.hpp"
#include "fairsift/error.hpp"

namespace fairsift {

// Row-major feature matrix view, so trainers work on encoded pipelines and
// plain arrays alike.
struct FeatureView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }

  static FeatureView of(const EncodedMatrix& m) { return {m.values.data(), m.n_rows(), m.n_cols()}; }
  static FeatureView of(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
    return {values.data(), rows, cols};
  }
};

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_penalty = 1e-4;
  std::size_t max_epochs = 2000;
  double tolerance = 1e-6;  // stop when the gradient norm drops below this
  std::uint64_t seed = 0;   // reserved for stochastic trainers; fit is deterministic

  nlohmann::ordered_json to_json() const {
    return {{"learning_rate", learning_rate},
            {"l2_penalty", l2_penalty},
            {"max_epochs", max_epochs},
            {"tolerance", tolerance},
            {"seed", seed}};
  }
  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2_penalty = j.at("l2_penalty").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.tolerance = j.at("tolerance").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

struct LogisticModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  TrainConfig config;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;

  nlohmann::ordered_json to_json() const {
    return {{"coefficients", coefficients},
            {"intercept", intercept},
            {"config", config.to_json()},
            {"final_loss", final_loss},
            {"epochs_run", epochs_run}};
  }
  static LogisticModel from_json(const nlohmann::json& j) {
    LogisticModel m;
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.config = TrainConfig::from_json(j.at("config"));
    m.final_loss = j.at("final_loss").get<double>();
    m.epochs_run = j.at("epochs_run").get<std::size_t>();
    return m;
  }
};

namespace detail {

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow
inline double softplus(double s) {
  if (s > 0.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

}  // namespace detail

// Weighted mean negative log-likelihood plus an L2 penalty on the
// coefficients (the intercept is not penalized):
//
//   L = sum_i w_i * [softplus(s_i) - y_i * s_i] / sum_i w_i + (l2/2)*|coef|^2
//
// Normalizing by the weight total makes duplicating a row with weight 1
// arithmetically identical to doubling its weight.
inline double weighted_logloss(const FeatureView& X, std::span<const std::uint8_t> y,
                               std::span<const double> w, std::span<const double> coefficients,
                               double intercept, double l2_penalty) {
  if (y.size() != X.rows || w.size() != X.rows) throw Error("weighted_logloss: size mismatch");
  if (coefficients.size() != X.cols) throw Error("weighted_logloss: coefficient dimension mismatch");
  double loss = 0.0, weight_total = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto xi = X.row(i);
    double s = intercept;
    for (std::size_t j = 0; j < X.cols; ++j) s += coefficients[j] * xi[j];
    loss += w[i] * (detail::softplus(s) - (y[i] ? s : 0.0));
    weight_total += w[i];
  }
  if (weight_total <= 0.0) throw Error("weighted_logloss: weight total must be positive");
  loss /= weight_total;
  double penalty = 0.0;
  for (double c : coefficients) penalty += c * c;
  return loss + 0.5 * l2_penalty * penalty;
}

// Gradient of weighted_logloss. grad[0..cols-1] are the coefficient
// derivatives, grad[cols] is the intercept derivative.
inline void weighted_logloss_gradient(const FeatureView& X, std::span<const std::uint8_t> y,
                                      std::span<const double> w,
                                      std::span<const double> coefficients, double intercept,
                                      double l2_penalty, std::span<double> grad) {
  if (grad.size() != X.cols + 1) throw Error("gradient buffer must have cols+1 entries");
  std::fill(grad.begin(), grad.end(), 0.0);
  double weight_total = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto xi = X.row(i);
    double s = intercept;
    for (std::size_t j = 0; j < X.cols; ++j) s += coefficients[j] * xi[j];
    const double residual = w[i] * (detail::sigmoid(s) - (y[i] ? 1.0 : 0.0));
    for (std::size_t j = 0; j < X.cols; ++j) grad[j] += residual * xi[j];
    grad[X.cols] += residual;
    weight_total += w[i];
  }
  for (std::size_t j = 0; j <= X.cols; ++j) grad[j] /= weight_total;
  for (std::size_t j = 0; j < X.cols; ++j) grad[j] += l2_penalty * coefficients[j];
}

// Full-batch gradient descent from zero-initialized parameters. Stops when
// the gradient norm falls below config.tolerance or max_epochs is reached.
inline LogisticModel train_logistic(const FeatureView& X, std::span<const std::uint8_t> y,
                                    std::span<const double> w, const TrainConfig& config) {
  if (X.rows == 0) throw Error("train_logistic: no training rows");
  if (y.size() != X.rows || w.size() != X.rows) throw Error("train_logistic: size mismatch");
  for (double wi : w) {
    if (!(wi > 0.0)) throw Error("train_logistic: sample weights must be positive");
  }

  LogisticModel model;
  model.config = config;
  model.coefficients.assign(X.cols, 0.0);
  model.intercept = 0.0;

  std::vector<double> grad(X.cols + 1, 0.0);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    weighted_logloss_gradient(X, y, w, model.coefficients, model.intercept, config.l2_penalty,
                              grad);
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    if (!std::isfinite(norm2)) {
      throw Error("training diverged (non-finite gradient); try a smaller learning rate");
    }
    if (std::sqrt(norm2) < config.tolerance) {
      model.epochs_run = epoch;
      break;
    }
    for (std::size_t j = 0; j < X.cols; ++j) {
      model.coefficients[j] -= config.learning_rate * grad[j];
    }
    model.intercept -= config.learning_rate * grad[X.cols];
    model.epochs_run = epoch + 1;
  }

  model.final_loss = weighted_logloss(X, y, w, model.coefficients, model.intercept,
                                      config.l2_penalty);
  if (!std::isfinite(model.final_loss)) {
    throw Error("training diverged (non-finite loss); try a smaller learning rate");
  }
  return model;
}

struct Prediction {
  std::vector<std::uint8_t> labels;  // 1 = favorable, assigned when p >= 0.5
  std::vector<double> probabilities;
};

inline Prediction predict(const LogisticModel& model, const FeatureView& X) {
  if (model.coefficients.size() != X.cols) {
    throw Error("predict: model has " + std::to_string(model.coefficients.size()) +
                " coefficients but features have " + std::to_string(X.cols) + " columns");
  }
  Prediction out;
  out.labels.resize(X.rows);
  out.probabilities.resize(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto xi = X.row(i);
    double s = model.intercept;
    for (std::size_t j = 0; j < X.cols; ++j) s += model.coefficients[j] * xi[j];
    const double p = detail::sigmoid(s);
    out.probabilities[i] = p;
    out.labels[i] = p >= 0.5 ? 1 : 0;
  }
  return out;
}

// Contract every learner must satisfy: deterministic given the seed, and
// sample weights behave like row multiplicities (duplicating a row is the
// same as doubling its weight).
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<double> predict_proba(const FeatureView& X) const = 0;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual std::unique_ptr<Classifier> fit(const FeatureView& X, std::span<const std::uint8_t> y,
                                          std::span<const double> w, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

class LogisticClassifier final : public Classifier {
 public:
  explicit LogisticClassifier(LogisticModel model) : model_(std::move(model)) {}
  std::vector<double> predict_proba(const FeatureView& X) const override {
    return predict(model_, X).probabilities;
  }
  const LogisticModel& model() const { return model_; }

 private:
  LogisticModel model_;
};

class LogisticTrainer final : public Trainer {
 public:
  explicit LogisticTrainer(TrainConfig config = {}) : config_(config) {}
  std::unique_ptr<Classifier> fit(const FeatureView& X, std::span<const std::uint8_t> y,
                                  std::span<const double> w, std::uint64_t seed) const override {
    TrainConfig cfg = config_;
    cfg.seed = seed;
    return std::make_unique<LogisticClassifier>(train_logistic(X, y, w, cfg));
  }
  std::string name() const override { return "logistic_regression"; }

 private:
  TrainConfig config_;
};

}  // namespace fairsift
