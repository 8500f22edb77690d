#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

#include "fairsift/error.hpp"

namespace fairsift {

// Confusion counts with the favorable label as the positive class.
struct ConfusionCell {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  std::size_t actual_positive() const { return tp + fn; }
  std::size_t actual_negative() const { return fp + tn; }
  std::size_t predicted_positive() const { return tp + fp; }

  nlohmann::ordered_json to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
  }
};

struct GroupConfusion {
  ConfusionCell privileged;
  ConfusionCell unprivileged;

  nlohmann::ordered_json to_json() const {
    return {{"privileged", privileged.to_json()}, {"unprivileged", unprivileged.to_json()}};
  }
};

inline GroupConfusion confusion_by_group(std::span<const std::uint8_t> preds,
                                         std::span<const std::uint8_t> truths,
                                         std::span<const std::uint8_t> privileged) {
  if (preds.size() != truths.size() || preds.size() != privileged.size()) {
    throw Error("confusion_by_group: size mismatch");
  }
  GroupConfusion gc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ConfusionCell& cell = privileged[i] ? gc.privileged : gc.unprivileged;
    if (truths[i]) {
      preds[i] ? cell.tp++ : cell.fn++;
    } else {
      preds[i] ? cell.fp++ : cell.tn++;
    }
  }
  return gc;
}

inline double accuracy(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> truths) {
  if (preds.empty()) throw Error("accuracy: empty input");
  if (preds.size() != truths.size()) throw Error("accuracy: size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == truths[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// Statistical parity difference, privileged minus unprivileged favorable
// rate. Positive values mean predictions favor the privileged group.
inline double spd(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> privileged) {
  if (preds.empty()) throw Error("spd: empty input");
  if (preds.size() != privileged.size()) throw Error("spd: size mismatch");
  std::size_t n_priv = 0, n_unpriv = 0, fav_priv = 0, fav_unpriv = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (privileged[i]) {
      n_priv++;
      fav_priv += preds[i] ? 1 : 0;
    } else {
      n_unpriv++;
      fav_unpriv += preds[i] ? 1 : 0;
    }
  }
  if (n_priv == 0) throw Error("spd: privileged group absent from the evaluation set");
  if (n_unpriv == 0) throw Error("spd: unprivileged group absent from the evaluation set");
  return static_cast<double>(fav_priv) / static_cast<double>(n_priv) -
         static_cast<double>(fav_unpriv) / static_cast<double>(n_unpriv);
}

inline double spd_from_confusion(const GroupConfusion& gc) {
  if (gc.privileged.total() == 0) throw Error("spd: privileged group absent from the evaluation set");
  if (gc.unprivileged.total() == 0) {
    throw Error("spd: unprivileged group absent from the evaluation set");
  }
  return static_cast<double>(gc.privileged.predicted_positive()) /
             static_cast<double>(gc.privileged.total()) -
         static_cast<double>(gc.unprivileged.predicted_positive()) /
             static_cast<double>(gc.unprivileged.total());
}

// Average odds difference: the mean of the between-group TPR and FPR gaps,
// privileged minus unprivileged (same sign convention as spd).
inline double aod_from_confusion(const GroupConfusion& gc) {
  auto rate = [](std::size_t num, std::size_t den, const char* group, const char* which) {
    if (den == 0) {
      throw Error(std::string("aod: ") + which + " undefined for the " + group +
                  " group (zero denominator)");
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const double tpr_priv = rate(gc.privileged.tp, gc.privileged.actual_positive(), "privileged", "TPR");
  const double tpr_unpriv =
      rate(gc.unprivileged.tp, gc.unprivileged.actual_positive(), "unprivileged", "TPR");
  const double fpr_priv = rate(gc.privileged.fp, gc.privileged.actual_negative(), "privileged", "FPR");
  const double fpr_unpriv =
      rate(gc.unprivileged.fp, gc.unprivileged.actual_negative(), "unprivileged", "FPR");
  return 0.5 * ((tpr_priv - tpr_unpriv) + (fpr_priv - fpr_unpriv));
}

inline double aod(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> truths,
                  std::span<const std::uint8_t> privileged) {
  return aod_from_confusion(confusion_by_group(preds, truths, privileged));
}

}  // namespace fairsift
