#include "equifair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "equifair/error.hpp"
#include "equifair/kernels.hpp"

namespace equifair {

namespace {

void check_binary_input(std::span<const double> scores, std::span<const std::uint8_t> y_true) {
  require(!scores.empty(), ErrorCategory::empty_input, "no samples");
  require(scores.size() == y_true.size(), ErrorCategory::invalid_argument, "scores and labels differ in length");
  for (double s : scores) require(std::isfinite(s), ErrorCategory::invalid_argument, "non-finite score");
}

// Indices sorted by descending score; stable so ties keep input order.
std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

struct TieBlock {
  double score;
  std::size_t pos;
  std::size_t neg;
};

std::vector<TieBlock> tie_blocks(std::span<const double> scores, std::span<const std::uint8_t> y_true) {
  std::vector<TieBlock> blocks;
  for (std::size_t i : order_descending(scores)) {
    if (blocks.empty() || blocks.back().score != scores[i]) blocks.push_back({scores[i], 0, 0});
    if (y_true[i]) ++blocks.back().pos; else ++blocks.back().neg;
  }
  return blocks;
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> y_true) {
  std::size_t pos = 0;
  for (auto y : y_true) pos += y ? 1 : 0;
  return {pos, y_true.size() - pos};
}

}  // namespace

const GroupRate& GroupRates::at(std::string_view group) const {
  for (const auto& g : groups)
    if (g.group == group) return g;
  fail(ErrorCategory::unknown_group, "no rates for group " + std::string(group));
}

std::size_t GroupRates::total() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.n_pos + g.n_neg;
  return n;
}

GroupRate make_group_rate(std::string group, std::size_t tp, std::size_t fn, std::size_t tn, std::size_t fp) {
  GroupRate r;
  r.group = std::move(group);
  r.n_pos = tp + fn;
  r.n_neg = tn + fp;
  if (r.n_pos > 0) {
    r.tpr = static_cast<double>(tp) / static_cast<double>(r.n_pos);
    r.fnr = static_cast<double>(fn) / static_cast<double>(r.n_pos);
  }
  if (r.n_neg > 0) {
    r.tnr = static_cast<double>(tn) / static_cast<double>(r.n_neg);
    r.fpr = static_cast<double>(fp) / static_cast<double>(r.n_neg);
  }
  return r;
}

GroupRates confusion_rates(const LabeledPredictions& preds) {
  require(preds.y_hat.has_value(), ErrorCategory::invalid_argument, "confusion_rates requires y_hat");
  return confusion_rates(preds, *preds.y_hat);
}

GroupRates confusion_rates(const LabeledPredictions& preds, std::span<const std::uint8_t> y_hat) {
  preds.validate();
  require(y_hat.size() == preds.size(), ErrorCategory::invalid_argument, "y_hat length differs");
  const auto counts = kernels::omp::count_confusion(preds.group, preds.y_true, y_hat, preds.group_count());
  GroupRates out;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    const auto& c = counts[g];
    out.groups.push_back(make_group_rate(preds.universe[g], c.tp, c.fn, c.tn, c.fp));
  }
  return out;
}

GapRanges gap_ranges(const GroupRates& rates) {
  auto range_of = [&](auto member, const char* name) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& g : rates.groups) {
      const auto& v = g.*member;
      if (!v) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    require(hi >= lo, ErrorCategory::invalid_argument, std::string("no group has a defined ") + name);
    return hi - lo;
  };
  return {range_of(&GroupRate::tpr, "tpr"), range_of(&GroupRate::tnr, "tnr")};
}

double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> y_true) {
  check_binary_input(scores, y_true);
  const auto [n_pos, n_neg] = class_counts(y_true);
  require(n_pos > 0 && n_neg > 0, ErrorCategory::invalid_argument, "auc_roc needs both classes");

  // Twice the Mann-Whitney U, accumulated in integers: each positive scores 2
  // per strictly lower negative and 1 per tied negative.
  std::uint64_t u2 = 0;
  std::uint64_t neg_below = n_neg;
  for (const auto& b : tie_blocks(scores, y_true)) {
    neg_below -= b.neg;
    u2 += static_cast<std::uint64_t>(b.pos) * (2 * neg_below + b.neg);
  }
  // Round u2 / D to the nearest multiple of 2^-53 (ties to even). Every such
  // value and its complement are exact doubles, so relabeling gives exactly 1 - auc.
  using u128 = unsigned __int128;
  const u128 d = static_cast<u128>(2) * n_pos * n_neg;
  const u128 scaled = static_cast<u128>(u2) << 53;
  u128 q = scaled / d;
  const u128 r = scaled % d;
  if (2 * r > d || (2 * r == d && (q & 1))) ++q;
  return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(q)), -53);
}

double auc_prc(std::span<const double> scores, std::span<const std::uint8_t> y_true) {
  check_binary_input(scores, y_true);
  const auto [n_pos, n_neg] = class_counts(y_true);
  (void)n_neg;
  require(n_pos > 0, ErrorCategory::invalid_argument, "auc_prc needs at least one positive");

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (const auto& b : tie_blocks(scores, y_true)) {
    tp += b.pos;
    seen += b.pos + b.neg;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> y_true) {
  check_binary_input(scores, y_true);
  const auto [n_pos, n_neg] = class_counts(y_true);
  require(n_pos > 0 && n_neg > 0, ErrorCategory::invalid_argument, "roc_curve needs both classes");

  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (const auto& b : tie_blocks(scores, y_true)) {
    tp += b.pos;
    fp += b.neg;
    curve.push_back({b.score, static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
  return area;
}

MultilabelAuc multilabel_auc(const ScoreColumns& scores, const LabelColumns& y_true) {
  require(scores.size() >= 2, ErrorCategory::invalid_argument, "multilabel_auc needs at least 2 labels");
  require(scores.size() == y_true.size(), ErrorCategory::invalid_argument, "score and label column counts differ");

  MultilabelAuc out;
  std::vector<double> flat_scores;
  std::vector<std::uint8_t> flat_labels;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    require(scores[l].size() == y_true[l].size() && scores[l].size() == scores[0].size(),
            ErrorCategory::invalid_argument, "label column " + std::to_string(l) + " has mismatched length");
    flat_scores.insert(flat_scores.end(), scores[l].begin(), scores[l].end());
    flat_labels.insert(flat_labels.end(), y_true[l].begin(), y_true[l].end());
    const auto [pos, neg] = class_counts(y_true[l]);
    if (pos == 0 || neg == 0) {
      out.per_label.emplace_back(std::nullopt);
      out.warnings.push_back("label " + std::to_string(l) + " has a single class; excluded from macro");
      continue;
    }
    const double a = auc_roc(scores[l], y_true[l]);
    out.per_label.emplace_back(a);
    sum += a;
    ++used;
  }
  require(used > 0, ErrorCategory::invalid_argument, "every label column has a single class");
  out.macro = sum / static_cast<double>(used);
  out.micro = auc_roc(flat_scores, flat_labels);
  return out;
}

FairnessReport build_report(const LabeledPredictions& preds, const std::optional<GroupRates>& derived,
                            ReportMetadata metadata) {
  preds.validate();
  FairnessReport r;
  r.n_samples = preds.size();

  const auto labels = hard_labels(preds);
  metadata.notes["y_hat_source"] = preds.y_hat ? "column" : "score>=0.5";
  r.group_rates = confusion_rates(preds, labels);
  const auto gaps = gap_ranges(r.group_rates);
  r.tpr_range = gaps.tpr_range;
  r.tnr_range = gaps.tnr_range;

  std::vector<double> auc_scores;
  if (preds.scores) {
    auc_scores = *preds.scores;
    metadata.notes["auc_source"] = "score";
  } else {
    auc_scores.assign(labels.begin(), labels.end());
    metadata.notes["auc_source"] = "y_hat";
  }

  const auto [n_pos, n_neg] = class_counts(preds.y_true);
  if (n_pos > 0 && n_neg > 0) r.auc_roc_overall = auc_roc(auc_scores, preds.y_true);
  if (n_pos > 0) r.auc_prc_overall = auc_prc(auc_scores, preds.y_true);

  for (std::size_t g = 0; g < preds.group_count(); ++g) {
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds.group[i] != g) continue;
      s.push_back(auc_scores[i]);
      y.push_back(preds.y_true[i]);
    }
    const auto [gp, gn] = class_counts(y);
    r.auc_roc_per_group[preds.universe[g]] =
        (gp > 0 && gn > 0) ? std::optional<double>(auc_roc(s, y)) : std::nullopt;
  }

  if (derived) {
    r.derived_rates = *derived;
    r.derived_ranges = gap_ranges(*derived);
  }
  r.metadata = std::move(metadata);
  return r;
}

}  // namespace equifair
