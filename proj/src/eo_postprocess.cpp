#include "equifair/eo_postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "equifair/error.hpp"
#include "equifair/rng.hpp"

namespace equifair {

namespace {

using geometry::Point;
using geometry::Polygon;

constexpr double kSnap = 1e-12;

double snap_unit(double p) {
  if (std::abs(p) <= kSnap) return 0.0;
  if (std::abs(p - 1.0) <= kSnap) return 1.0;
  return std::clamp(p, 0.0, 1.0);
}

struct Prepared {
  std::vector<std::size_t> active;  // universe indices with samples
  std::vector<GroupPrior> priors;   // aligned with active
  GroupRates rates;                 // full universe
  std::vector<std::uint8_t> labels;
};

Prepared prepare(const LabeledPredictions& preds, const LossSpec& loss) {
  preds.validate();
  loss.validate();
  Prepared p;
  p.labels = hard_labels(preds);
  p.rates = confusion_rates(preds, p.labels);
  const auto all_priors = resolve_priors(preds, loss);
  for (std::size_t g = 0; g < preds.group_count(); ++g) {
    const auto& r = p.rates.groups[g];
    if (r.n_pos + r.n_neg == 0) continue;
    p.active.push_back(g);
    p.priors.push_back(all_priors[g]);
  }
  require(p.active.size() >= 2, ErrorCategory::invalid_argument, "equalized odds needs at least two groups");
  return p;
}

// Loss = cx * fpr + cy * tpr + constant, summed over groups on a shared point.
std::pair<double, double> shared_point_costs(const LossSpec& loss, const std::vector<GroupPrior>& priors) {
  double neg = 0.0, pos = 0.0;
  for (const auto& p : priors) {
    neg += p.neg_mass;
    pos += p.pos_mass;
  }
  return {loss.cost_fp * neg, -loss.cost_fn * pos};
}

double unconstrained_loss(const LossSpec& loss, const std::vector<GroupPrior>& priors,
                          const std::vector<Polygon>& regions) {
  double total = 0.0;
  for (std::size_t a = 0; a < regions.size(); ++a) {
    const auto& pr = priors[a];
    const auto best = geometry::minimize_linear(regions[a], loss.cost_fp * pr.neg_mass, -loss.cost_fn * pr.pos_mass);
    total += best.value + loss.cost_fn * pr.pos_mass;
  }
  return total;
}

std::vector<std::uint64_t> sample_keys(const LabeledPredictions& preds) {
  std::vector<std::uint64_t> keys(preds.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = rng::hash_string(preds.ids[i]);
  return keys;
}

// Maps each universe group of `preds` onto the derived predictor's groups.
// Groups without samples may be missing from the predictor.
template <class Params>
std::vector<const Params*> align_groups(const std::vector<Params>& groups, const LabeledPredictions& preds) {
  std::vector<const Params*> out(preds.group_count(), nullptr);
  for (std::size_t g = 0; g < preds.group_count(); ++g)
    for (const auto& p : groups)
      if (p.group == preds.universe[g]) out[g] = &p;
  for (std::size_t i = 0; i < preds.size(); ++i)
    require(out[preds.group[i]] != nullptr, ErrorCategory::unknown_group,
            "group not covered by the derived predictor: " + preds.group_name(i));
  return out;
}

GroupRate rate_from_point(const std::string& group, std::size_t n_pos, std::size_t n_neg, OperatingPoint p) {
  GroupRate r;
  r.group = group;
  r.n_pos = n_pos;
  r.n_neg = n_neg;
  r.tpr = p.tpr;
  r.fnr = 1.0 - p.tpr;
  r.fpr = p.fpr;
  r.tnr = 1.0 - p.fpr;
  return r;
}

OperatingPoint hard_point(const HardGroupParams& g) {
  return {g.p0 * (1.0 - g.base.fpr) + g.p1 * g.base.fpr, g.p0 * (1.0 - g.base.tpr) + g.p1 * g.base.tpr};
}

OperatingPoint soft_point(const SoftGroupParams& g) {
  OperatingPoint p{0.0, 0.0};
  for (const auto& c : g.mixture) {
    p.fpr += c.weight * c.point.fpr;
    p.tpr += c.weight * c.point.tpr;
  }
  return p;
}

}  // namespace

void LossSpec::validate() const {
  require(std::isfinite(cost_fp) && std::isfinite(cost_fn) && cost_fp >= 0.0 && cost_fn >= 0.0,
          ErrorCategory::invalid_argument, "costs must be finite and non-negative");
  require(cost_fp > 0.0 || cost_fn > 0.0, ErrorCategory::invalid_argument, "cost_fp and cost_fn are both zero");
  for (const auto& [group, p] : priors)
    require(p.pos_mass >= 0.0 && p.neg_mass >= 0.0, ErrorCategory::invalid_argument,
            "negative prior mass for group " + group);
}

const HardGroupParams& HardDerivedPredictor::at(std::string_view group) const {
  for (const auto& g : groups)
    if (g.group == group) return g;
  fail(ErrorCategory::unknown_group, "derived predictor has no group " + std::string(group));
}

const SoftGroupParams& SoftDerivedPredictor::at(std::string_view group) const {
  for (const auto& g : groups)
    if (g.group == group) return g;
  fail(ErrorCategory::unknown_group, "derived predictor has no group " + std::string(group));
}

std::vector<GroupPrior> resolve_priors(const LabeledPredictions& preds, const LossSpec& loss) {
  std::vector<GroupPrior> out(preds.group_count());
  if (!loss.priors.empty()) {
    for (std::size_t g = 0; g < preds.group_count(); ++g) {
      auto it = loss.priors.find(preds.universe[g]);
      require(it != loss.priors.end(), ErrorCategory::invalid_argument,
              "loss priors missing group " + preds.universe[g]);
      out[g] = it->second;
    }
    return out;
  }
  const double n = static_cast<double>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& p = out[preds.group[i]];
    if (preds.y_true[i]) p.pos_mass += 1.0; else p.neg_mass += 1.0;
  }
  for (auto& p : out) {
    p.pos_mass /= n;
    p.neg_mass /= n;
  }
  return out;
}

double expected_loss(const LossSpec& loss, const std::vector<GroupPrior>& priors,
                     const std::vector<OperatingPoint>& points) {
  require(priors.size() == points.size(), ErrorCategory::invalid_argument, "priors and points differ in length");
  double total = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a)
    total += loss.cost_fp * priors[a].neg_mass * points[a].fpr +
             loss.cost_fn * priors[a].pos_mass * (1.0 - points[a].tpr);
  return total;
}

Polygon hard_region(OperatingPoint base) {
  const std::vector<Point> pts{{0.0, 0.0}, {1.0, 1.0}, {base.fpr, base.tpr}, {1.0 - base.fpr, 1.0 - base.tpr}};
  return geometry::convex_hull(pts);
}

Polygon soft_region(const std::vector<RocPoint>& roc) {
  std::vector<Point> pts;
  pts.reserve(roc.size());
  for (const auto& r : roc) pts.push_back({r.fpr, r.tpr});
  return geometry::convex_hull(pts);
}

HardDerivedPredictor fit_eo_hard(const LabeledPredictions& preds, const LossSpec& loss) {
  const auto prep = prepare(preds, loss);

  std::vector<Polygon> regions;
  std::vector<OperatingPoint> base_points;
  for (std::size_t g : prep.active) {
    const auto& r = prep.rates.groups[g];
    require(r.defined(), ErrorCategory::invalid_argument,
            "group " + r.group + " has undefined base rates (needs positives and negatives)");
    base_points.push_back({*r.fpr, *r.tpr});
    regions.push_back(hard_region(base_points.back()));
  }

  const auto feasible = geometry::intersect(regions);
  require(!feasible.empty(), ErrorCategory::degenerate, "empty intersection of achievable regions");
  const auto [cx, cy] = shared_point_costs(loss, prep.priors);
  const auto opt = geometry::minimize_linear(feasible, cx, cy);

  HardDerivedPredictor dp;
  dp.loss = loss;
  dp.target = {opt.point.x, opt.point.y};
  std::vector<OperatingPoint> realized;
  for (std::size_t a = 0; a < prep.active.size(); ++a) {
    const auto& r = prep.rates.groups[prep.active[a]];
    const double f = base_points[a].fpr, t = base_points[a].tpr;
    const double x = dp.target.fpr, y = dp.target.tpr;
    HardGroupParams gp;
    gp.group = r.group;
    gp.base = base_points[a];
    gp.prior = prep.priors[a];
    gp.n_pos = r.n_pos;
    gp.n_neg = r.n_neg;
    const double det = t - f;
    if (std::abs(det) <= kSnap) {
      // base sits on the diagonal: only coin flips are reachable
      gp.p0 = gp.p1 = snap_unit(0.5 * (x + y));
    } else {
      gp.p0 = snap_unit((x * t - f * y) / det);
      gp.p1 = snap_unit(((1.0 - f) * y - (1.0 - t) * x) / det);
    }
    realized.push_back(hard_point(gp));
    dp.groups.push_back(std::move(gp));
  }

  dp.fit.objective = expected_loss(loss, prep.priors, realized);
  dp.fit.base_loss = expected_loss(loss, prep.priors, base_points);
  dp.fit.unconstrained_loss = unconstrained_loss(loss, prep.priors, regions);
  dp.fit.n_samples = preds.size();
  dp.fit.feasible_vertices = feasible.size();
  return dp;
}

SoftDerivedPredictor fit_eo_soft(const LabeledPredictions& preds, const LossSpec& loss) {
  require(preds.scores.has_value(), ErrorCategory::invalid_argument, "soft equalized odds requires scores");
  const auto prep = prepare(preds, loss);

  struct GroupHull {
    Polygon region;
    std::vector<double> thresholds;  // aligned with region vertices
  };
  std::vector<GroupHull> hulls;
  std::vector<OperatingPoint> base_points;
  for (std::size_t g : prep.active) {
    const auto& r = prep.rates.groups[g];
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds.group[i] != g) continue;
      s.push_back((*preds.scores)[i]);
      y.push_back(preds.y_true[i]);
    }
    require(r.defined(), ErrorCategory::invalid_argument, "group " + r.group + " lacks one of the classes");
    const auto roc = roc_curve(s, y);
    std::vector<Point> pts;
    for (const auto& p : roc) pts.push_back({p.fpr, p.tpr});
    GroupHull h;
    for (std::size_t k : geometry::convex_hull_indices(pts)) {
      h.region.push_back(pts[k]);
      h.thresholds.push_back(roc[k].threshold);
    }
    hulls.push_back(std::move(h));
    base_points.push_back({*r.fpr, *r.tpr});
  }

  std::vector<Polygon> regions;
  for (const auto& h : hulls) regions.push_back(h.region);
  const auto feasible = geometry::intersect(regions);
  require(!feasible.empty(), ErrorCategory::degenerate, "empty intersection of achievable regions");
  const auto [cx, cy] = shared_point_costs(loss, prep.priors);
  const auto opt = geometry::minimize_linear(feasible, cx, cy);

  SoftDerivedPredictor dp;
  dp.loss = loss;
  dp.target = {opt.point.x, opt.point.y};
  std::vector<OperatingPoint> realized;
  for (std::size_t a = 0; a < prep.active.size(); ++a) {
    const auto& r = prep.rates.groups[prep.active[a]];
    const auto& h = hulls[a];
    SoftGroupParams gp;
    gp.group = r.group;
    gp.prior = prep.priors[a];
    gp.n_pos = r.n_pos;
    gp.n_neg = r.n_neg;
    gp.hull_vertices = h.region.size();
    // Among decompositions of the target, pick the one that randomizes the
    // fewest samples: the variance of the realized rates around the target.
    const double n_pos = static_cast<double>(r.n_pos), n_neg = static_cast<double>(r.n_neg);
    auto spread = [&](const geometry::Decomposition& d) {
      auto parts = d;
      std::sort(parts.begin(), parts.end(),
                [&](const auto& l, const auto& r) { return h.thresholds[l.first] < h.thresholds[r.first]; });
      double var_t = 0.0, var_f = 0.0, q = 0.0;
      for (std::size_t j = 0; j + 1 < parts.size(); ++j) {
        q += parts[j].second;
        const auto& lo = h.region[parts[j].first];
        const auto& hi = h.region[parts[j + 1].first];
        const double qq = q * (1.0 - q);
        var_t += (lo.y - hi.y) * qq;
        var_f += (lo.x - hi.x) * qq;
      }
      return (n_pos > 0 ? var_t / n_pos : 0.0) + (n_neg > 0 ? var_f / n_neg : 0.0);
    };
    for (const auto& [k, w] : geometry::cheapest_convex_weights(h.region, opt.point, spread))
      gp.mixture.push_back({h.thresholds[k], w, {h.region[k].x, h.region[k].y}});
    std::sort(gp.mixture.begin(), gp.mixture.end(),
              [](const SoftComponent& l, const SoftComponent& r) { return l.threshold < r.threshold; });
    realized.push_back(soft_point(gp));
    dp.groups.push_back(std::move(gp));
  }

  dp.fit.objective = expected_loss(loss, prep.priors, realized);
  dp.fit.base_loss = expected_loss(loss, prep.priors, base_points);
  dp.fit.unconstrained_loss = unconstrained_loss(loss, prep.priors, regions);
  dp.fit.n_samples = preds.size();
  dp.fit.feasible_vertices = feasible.size();
  return dp;
}

std::vector<std::uint8_t> apply_hard(const HardDerivedPredictor& dp, const LabeledPredictions& preds,
                                     std::uint64_t seed) {
  preds.validate();
  const auto aligned = align_groups(dp.groups, preds);
  std::vector<double> p0(preds.group_count(), 0.0), p1(preds.group_count(), 1.0);
  for (std::size_t g = 0; g < aligned.size(); ++g) {
    if (!aligned[g]) continue;
    p0[g] = aligned[g]->p0;
    p1[g] = aligned[g]->p1;
  }
  const auto labels = hard_labels(preds);
  return kernels::omp::apply_flip(preds.group, labels, sample_keys(preds), p0, p1,
                                    rng::derive_seed(seed, "apply-hard"));
}

std::vector<std::uint8_t> apply_soft(const SoftDerivedPredictor& dp, const LabeledPredictions& preds,
                                     std::uint64_t seed) {
  preds.validate();
  require(preds.scores.has_value(), ErrorCategory::invalid_argument, "apply_soft requires scores");
  const auto aligned = align_groups(dp.groups, preds);
  std::vector<kernels::ThresholdMixture> mixtures(preds.group_count());
  for (std::size_t g = 0; g < aligned.size(); ++g) {
    if (!aligned[g]) continue;
    for (const auto& c : aligned[g]->mixture) mixtures[g].push_back({c.threshold, c.weight});
  }
  return kernels::omp::apply_mixture(preds.group, *preds.scores, sample_keys(preds), mixtures,
                                       rng::derive_seed(seed, "apply-soft"));
}

GroupRates expected_rates(const HardDerivedPredictor& dp, const GroupRates& base) {
  GroupRates out;
  for (const auto& g : dp.groups) {
    const auto& b = base.at(g.group);
    require(b.defined(), ErrorCategory::invalid_argument, "base rates undefined for group " + g.group);
    HardGroupParams shifted = g;
    shifted.base = {*b.fpr, *b.tpr};
    out.groups.push_back(rate_from_point(g.group, b.n_pos, b.n_neg, hard_point(shifted)));
  }
  return out;
}

GroupRates expected_rates(const SoftDerivedPredictor& dp) {
  GroupRates out;
  for (const auto& g : dp.groups) out.groups.push_back(rate_from_point(g.group, g.n_pos, g.n_neg, soft_point(g)));
  return out;
}

}  // namespace equifair
