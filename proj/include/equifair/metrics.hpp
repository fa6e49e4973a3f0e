#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equifair/predictions.hpp"

namespace equifair {

// Confusion rates for one group. A rate is nullopt when its denominator is
// zero (no positives for tpr/fnr, no negatives for tnr/fpr).
struct GroupRate {
  std::string group;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> tpr, fnr, tnr, fpr;

  bool defined() const noexcept { return n_pos > 0 && n_neg > 0; }
};

struct GroupRates {
  std::vector<GroupRate> groups;

  const GroupRate& at(std::string_view group) const;
  std::size_t total() const noexcept;
};

struct GapRanges {
  double tpr_range = 0.0;
  double tnr_range = 0.0;
};

struct RocPoint {
  double threshold;  // predict 1 iff score >= threshold; +inf for the (0,0) point
  double fpr;
  double tpr;
};

// Builds a GroupRate from exact counts.
GroupRate make_group_rate(std::string group, std::size_t tp, std::size_t fn, std::size_t tn, std::size_t fp);

// Requires y_hat.
GroupRates confusion_rates(const LabeledPredictions& preds);
GroupRates confusion_rates(const LabeledPredictions& preds, std::span<const std::uint8_t> y_hat);

// Max minus min over groups whose rate is defined; each range is taken over
// its own defined set.
GapRanges gap_ranges(const GroupRates& rates);

// Mann-Whitney statistic: P(pos > neg) + 1/2 P(tie).
double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> y_true);

// Average precision: sum over distinct thresholds of precision * delta recall.
double auc_prc(std::span<const double> scores, std::span<const std::uint8_t> y_true);

// (0,0) followed by one point per distinct score in descending order; the
// last point is (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> y_true);

double trapezoid_area(std::span<const RocPoint> curve);

// One column per label.
using LabelColumns = std::vector<std::vector<std::uint8_t>>;
using ScoreColumns = std::vector<std::vector<double>>;

struct MultilabelAuc {
  double macro = 0.0;
  double micro = 0.0;  // "overall": auc_roc over all flattened (sample, label) pairs
  std::vector<std::optional<double>> per_label;
  std::vector<std::string> warnings;
};

MultilabelAuc multilabel_auc(const ScoreColumns& scores, const LabelColumns& y_true);

struct ReportMetadata {
  std::string task = "unnamed";
  std::uint64_t seed = 0;
  std::optional<std::string> timestamp;
  std::map<std::string, std::string> notes;
};

struct FairnessReport {
  ReportMetadata metadata;
  std::size_t n_samples = 0;
  GroupRates group_rates;
  double tpr_range = 0.0;
  double tnr_range = 0.0;
  std::optional<double> auc_roc_overall;
  std::optional<double> auc_prc_overall;
  std::map<std::string, std::optional<double>> auc_roc_per_group;
  std::optional<GroupRates> derived_rates;
  std::optional<GapRanges> derived_ranges;
};

// Rates use y_hat when present, otherwise scores >= 0.5. AUCs use scores
// when present, otherwise y_hat as a two-level score. The sources are
// recorded in metadata.notes.
FairnessReport build_report(const LabeledPredictions& preds, const std::optional<GroupRates>& derived,
                            ReportMetadata metadata = {});

}  // namespace equifair
