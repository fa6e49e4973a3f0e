#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace equifair {

// Per-sample audit input. Groups are stored as indices into `universe`.
// Build through make_predictions() so the invariants hold.
struct LabeledPredictions {
  std::vector<std::string> ids;
  std::vector<std::uint8_t> y_true;
  std::vector<std::string> universe;
  std::vector<std::uint32_t> group;
  std::optional<std::vector<double>> scores;
  std::optional<std::vector<std::uint8_t>> y_hat;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t group_count() const noexcept { return universe.size(); }
  const std::string& group_name(std::size_t i) const { return universe[group[i]]; }

  // Throws Error(empty_input | invalid_argument | unknown_group).
  void validate() const;
};

// Maps group labels onto `universe`. An empty universe is inferred as the
// sorted set of labels present.
LabeledPredictions make_predictions(std::vector<std::string> ids,
                                    std::vector<std::uint8_t> y_true,
                                    std::span<const std::string> group_labels,
                                    std::vector<std::string> universe,
                                    std::optional<std::vector<double>> scores,
                                    std::optional<std::vector<std::uint8_t>> y_hat);

// Index of `name` in the universe, or nullopt.
std::optional<std::size_t> find_group(const LabeledPredictions& preds, std::string_view name);

// Rows whose index is listed, preserving universe.
LabeledPredictions select_rows(const LabeledPredictions& preds, std::span<const std::size_t> rows);

// Hard labels: y_hat if present, otherwise scores thresholded at `threshold`.
std::vector<std::uint8_t> hard_labels(const LabeledPredictions& preds, double threshold = 0.5);

}  // namespace equifair
