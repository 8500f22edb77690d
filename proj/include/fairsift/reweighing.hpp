#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsift/encoding.hpp"
#include "fairsift/error.hpp"

namespace fairsift {

// Per-instance weights making protected attribute and label independent
// under the weighted empirical distribution:
//
//   w(a, y) = (N_a * N_y) / (N * N_{a,y})
//
// All rows in one (a, y) cell share a weight, every weight is positive, and
// the weights sum back to N.
struct SampleWeights {
  std::vector<double> per_row;           // aligned with the matrix rows
  std::array<std::array<double, 2>, 2> cell{};  // [privileged][favorable]
  std::array<std::array<std::size_t, 2>, 2> cell_counts{};

  double cell_weight(bool privileged, bool favorable) const {
    return cell[privileged ? 1 : 0][favorable ? 1 : 0];
  }

  nlohmann::ordered_json cells_to_json(const GroupVocabulary& groups) const {
    nlohmann::ordered_json j;
    auto key = [&](bool priv, bool fav) {
      return (priv ? groups.privileged_value : groups.unprivileged_value) + "," +
             (fav ? groups.favorable_value : groups.unfavorable_value);
    };
    for (bool priv : {true, false}) {
      for (bool fav : {true, false}) {
        j[key(priv, fav)] = {{"count", cell_counts[priv ? 1 : 0][fav ? 1 : 0]},
                             {"weight", cell[priv ? 1 : 0][fav ? 1 : 0]}};
      }
    }
    return j;
  }
};

// Cell weights from the four (protected, label) counts. Indexed
// [privileged][favorable]. Throws naming the cell when one is empty.
inline std::array<std::array<double, 2>, 2> reweighing_cell_weights(
    const std::array<std::array<std::size_t, 2>, 2>& counts,
    const GroupVocabulary& groups = {"privileged", "unprivileged", "favorable", "unfavorable"}) {
  for (int a = 0; a < 2; ++a) {
    for (int y = 0; y < 2; ++y) {
      if (counts[a][y] == 0) {
        throw Error("cell (" + (a ? groups.privileged_value : groups.unprivileged_value) + ", " +
                    (y ? groups.favorable_value : groups.unfavorable_value) +
                    ") is empty; reweighing is undefined");
      }
    }
  }
  const double total = static_cast<double>(counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]);
  std::array<std::array<double, 2>, 2> cell{};
  for (int a = 0; a < 2; ++a) {
    const double n_a = static_cast<double>(counts[a][0] + counts[a][1]);
    for (int y = 0; y < 2; ++y) {
      const double n_y = static_cast<double>(counts[0][y] + counts[1][y]);
      cell[a][y] = (n_a * n_y) / (total * static_cast<double>(counts[a][y]));
    }
  }
  return cell;
}

inline SampleWeights compute_weights(const EncodedMatrix& train) {
  const std::size_t n = train.n_rows();
  if (n == 0) throw Error("compute_weights: empty training set");

  SampleWeights w;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = train.meta[i];
    w.cell_counts[m.privileged ? 1 : 0][m.favorable ? 1 : 0]++;
  }
  w.cell = reweighing_cell_weights(w.cell_counts, train.groups);

  w.per_row.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = train.meta[i];
    w.per_row[i] = w.cell[m.privileged ? 1 : 0][m.favorable ? 1 : 0];
  }
  return w;
}

}  // namespace fairsift
