#include "equifair/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "equifair/error.hpp"

namespace equifair {

void LabeledPredictions::validate() const {
  const std::size_t n = ids.size();
  require(n >= 1, ErrorCategory::empty_input, "predictions are empty");
  require(y_true.size() == n && group.size() == n, ErrorCategory::invalid_argument,
          "parallel arrays differ in length");
  require(scores.has_value() || y_hat.has_value(), ErrorCategory::invalid_argument,
          "neither scores nor y_hat present");
  require(!universe.empty(), ErrorCategory::invalid_argument, "group universe is empty");
  for (std::size_t i = 0; i < n; ++i) {
    require(y_true[i] <= 1, ErrorCategory::invalid_argument, "y_true must be 0 or 1 (sample " + ids[i] + ")");
    require(group[i] < universe.size(), ErrorCategory::unknown_group,
            "group index out of universe (sample " + ids[i] + ")");
  }
  if (scores) {
    require(scores->size() == n, ErrorCategory::invalid_argument, "scores length differs");
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (*scores)[i];
      require(std::isfinite(s) && s >= 0.0 && s <= 1.0, ErrorCategory::invalid_argument,
              "score outside [0,1] (sample " + ids[i] + ")");
    }
  }
  if (y_hat) {
    require(y_hat->size() == n, ErrorCategory::invalid_argument, "y_hat length differs");
    for (std::size_t i = 0; i < n; ++i)
      require((*y_hat)[i] <= 1, ErrorCategory::invalid_argument, "y_hat must be 0 or 1 (sample " + ids[i] + ")");
  }
}

LabeledPredictions make_predictions(std::vector<std::string> ids,
                                    std::vector<std::uint8_t> y_true,
                                    std::span<const std::string> group_labels,
                                    std::vector<std::string> universe,
                                    std::optional<std::vector<double>> scores,
                                    std::optional<std::vector<std::uint8_t>> y_hat) {
  require(!ids.empty(), ErrorCategory::empty_input, "predictions are empty");
  require(group_labels.size() == ids.size(), ErrorCategory::invalid_argument,
          "group labels differ in length from ids");
  if (universe.empty()) {
    std::set<std::string> seen(group_labels.begin(), group_labels.end());
    universe.assign(seen.begin(), seen.end());
  }
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t g = 0; g < universe.size(); ++g) {
    require(index.emplace(universe[g], static_cast<std::uint32_t>(g)).second,
            ErrorCategory::invalid_argument, "duplicate group in universe: " + universe[g]);
  }

  LabeledPredictions p;
  p.group.reserve(group_labels.size());
  for (const auto& label : group_labels) {
    auto it = index.find(label);
    require(it != index.end(), ErrorCategory::unknown_group, "group label outside declared universe: " + label);
    p.group.push_back(it->second);
  }
  p.ids = std::move(ids);
  p.y_true = std::move(y_true);
  p.universe = std::move(universe);
  p.scores = std::move(scores);
  p.y_hat = std::move(y_hat);
  p.validate();
  return p;
}

std::optional<std::size_t> find_group(const LabeledPredictions& preds, std::string_view name) {
  auto it = std::find(preds.universe.begin(), preds.universe.end(), name);
  if (it == preds.universe.end()) return std::nullopt;
  return static_cast<std::size_t>(it - preds.universe.begin());
}

LabeledPredictions select_rows(const LabeledPredictions& preds, std::span<const std::size_t> rows) {
  LabeledPredictions out;
  out.universe = preds.universe;
  out.ids.reserve(rows.size());
  if (preds.scores) out.scores.emplace();
  if (preds.y_hat) out.y_hat.emplace();
  for (std::size_t r : rows) {
    out.ids.push_back(preds.ids.at(r));
    out.y_true.push_back(preds.y_true[r]);
    out.group.push_back(preds.group[r]);
    if (preds.scores) out.scores->push_back((*preds.scores)[r]);
    if (preds.y_hat) out.y_hat->push_back((*preds.y_hat)[r]);
  }
  return out;
}

std::vector<std::uint8_t> hard_labels(const LabeledPredictions& preds, double threshold) {
  if (preds.y_hat) return *preds.y_hat;
  require(preds.scores.has_value(), ErrorCategory::invalid_argument, "neither scores nor y_hat present");
  std::vector<std::uint8_t> out(preds.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*preds.scores)[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace equifair
