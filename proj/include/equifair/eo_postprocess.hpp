#pragma once

// Equalized-odds post-processing. Both variants minimize a linear expected
// loss over the (fpr, tpr) points every group can reach, subject to all
// groups landing on the same point:
//
//   hard  - each group randomizes its binary prediction: P(out=1 | y_hat=0) = p0,
//           P(out=1 | y_hat=1) = p1. Reachable set: the parallelogram spanned by
//           (0,0), (1,1), the base point and its reflection.
//   soft  - each group randomizes over score thresholds. Reachable set: the
//           convex hull of its empirical ROC vertices.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "equifair/geometry.hpp"
#include "equifair/kernels.hpp"
#include "equifair/metrics.hpp"
#include "equifair/predictions.hpp"

namespace equifair {

// Probability mass of (group, Y=1) and (group, Y=0) used to weight the loss.
struct GroupPrior {
  double pos_mass = 0.0;
  double neg_mass = 0.0;
};

struct LossSpec {
  double cost_fp = 1.0;
  double cost_fn = 1.0;
  // Empty means empirical frequencies n_pos_a / n and n_neg_a / n.
  std::map<std::string, GroupPrior> priors;

  void validate() const;
};

struct OperatingPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct FitSummary {
  double objective = 0.0;           // expected loss of the derived predictor
  double base_loss = 0.0;           // expected loss of the base hard predictor
  double unconstrained_loss = 0.0;  // best loss over the same regions without the EO constraint
  std::size_t n_samples = 0;
  std::size_t feasible_vertices = 0;
};

struct HardGroupParams {
  std::string group;
  double p0 = 0.0;  // P(out=1 | y_hat=0)
  double p1 = 1.0;  // P(out=1 | y_hat=1)
  OperatingPoint base;
  GroupPrior prior;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct HardDerivedPredictor {
  std::vector<HardGroupParams> groups;
  OperatingPoint target;
  LossSpec loss;
  FitSummary fit;

  const HardGroupParams& at(std::string_view group) const;
};

struct SoftComponent {
  double threshold = 0.0;  // +inf: never predict positive
  double weight = 0.0;
  OperatingPoint point;    // empirical operating point of the threshold at fit time
};

struct SoftGroupParams {
  std::string group;
  // Sorted by threshold ascending. At most three components: points on the
  // boundary of the group's region need two, interior points need three.
  std::vector<SoftComponent> mixture;
  GroupPrior prior;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t hull_vertices = 0;
};

struct SoftDerivedPredictor {
  std::vector<SoftGroupParams> groups;
  OperatingPoint target;
  LossSpec loss;
  FitSummary fit;

  const SoftGroupParams& at(std::string_view group) const;
};

// Uses y_hat, or scores >= 0.5 when y_hat is absent.
HardDerivedPredictor fit_eo_hard(const LabeledPredictions& preds, const LossSpec& loss = {});
SoftDerivedPredictor fit_eo_soft(const LabeledPredictions& preds, const LossSpec& loss = {});

std::vector<std::uint8_t> apply_hard(const HardDerivedPredictor& dp, const LabeledPredictions& preds,
                                     std::uint64_t seed);
std::vector<std::uint8_t> apply_soft(const SoftDerivedPredictor& dp, const LabeledPredictions& preds,
                                     std::uint64_t seed);

// Closed-form expected rates of the derived predictor.
GroupRates expected_rates(const HardDerivedPredictor& dp, const GroupRates& base);
GroupRates expected_rates(const SoftDerivedPredictor& dp);

// Expected loss of per-group operating points under the loss and priors.
double expected_loss(const LossSpec& loss, const std::vector<GroupPrior>& priors,
                     const std::vector<OperatingPoint>& points);

// Region helpers, exposed for tests and reporting.
geometry::Polygon hard_region(OperatingPoint base);
geometry::Polygon soft_region(const std::vector<RocPoint>& roc);

// The empirical or overridden priors, in universe order.
std::vector<GroupPrior> resolve_priors(const LabeledPredictions& preds, const LossSpec& loss);

}  // namespace equifair
