#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "equifair/predictions.hpp"

namespace testing {

inline std::vector<std::string> sequential_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
  return ids;
}

inline equifair::LabeledPredictions hard_preds(const std::vector<std::string>& groups,
                                               const std::vector<std::uint8_t>& y,
                                               const std::vector<std::uint8_t>& y_hat,
                                               std::vector<std::string> universe = {}) {
  return equifair::make_predictions(sequential_ids(y.size()), y, groups, std::move(universe), std::nullopt, y_hat);
}

inline equifair::LabeledPredictions scored_preds(const std::vector<std::string>& groups,
                                                 const std::vector<std::uint8_t>& y,
                                                 const std::vector<double>& scores,
                                                 std::vector<std::string> universe = {}) {
  std::vector<std::uint8_t> y_hat;
  for (double s : scores) y_hat.push_back(s >= 0.5 ? 1 : 0);
  return equifair::make_predictions(sequential_ids(y.size()), y, groups, std::move(universe), scores, y_hat);
}

// Random scores on a coarse lattice so ties occur.
struct RandomBinary {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

inline RandomBinary random_binary(std::mt19937_64& gen, std::size_t n, int levels = 20) {
  std::uniform_int_distribution<int> lvl(0, levels);
  std::bernoulli_distribution coin(0.4);
  RandomBinary r;
  for (std::size_t i = 0; i < n; ++i) {
    r.scores.push_back(lvl(gen) / static_cast<double>(levels));
    r.labels.push_back(coin(gen) ? 1 : 0);
  }
  r.labels[0] = 1;
  if (n > 1) r.labels[1] = 0;
  return r;
}

}  // namespace testing
