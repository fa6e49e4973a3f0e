#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "equifair/eo_postprocess.hpp"
#include "equifair/error.hpp"
#include "equifair/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace equifair;

namespace {

// Group `name` with `pos` positives (`tp` predicted 1) and `neg` negatives (`fp` predicted 1).
void append_group(std::vector<std::string>& g, std::vector<std::uint8_t>& y, std::vector<std::uint8_t>& yh,
                  const std::string& name, int pos, int tp, int neg, int fp) {
  for (int i = 0; i < pos; ++i) {
    g.push_back(name);
    y.push_back(1);
    yh.push_back(i < tp ? 1 : 0);
  }
  for (int i = 0; i < neg; ++i) {
    g.push_back(name);
    y.push_back(0);
    yh.push_back(i < fp ? 1 : 0);
  }
}

LabeledPredictions two_group_example() {
  std::vector<std::string> g;
  std::vector<std::uint8_t> y, yh;
  append_group(g, y, yh, "a", 10, 9, 10, 2);  // (tpr, fpr) = (0.9, 0.2)
  append_group(g, y, yh, "b", 10, 6, 10, 3);  // (0.6, 0.3)
  return testing::hard_preds(g, y, yh);
}

std::vector<oracle::GroupBase> bases(const LabeledPredictions& preds) {
  const auto rates = confusion_rates(preds, hard_labels(preds));
  const double n = static_cast<double>(preds.size());
  std::vector<oracle::GroupBase> out;
  for (const auto& r : rates.groups)
    out.push_back({*r.fpr, *r.tpr, static_cast<double>(r.n_pos) / n, static_cast<double>(r.n_neg) / n});
  return out;
}

double max_range(const GroupRates& rates, bool tpr) {
  double lo = 1e300, hi = -1e300;
  for (const auto& r : rates.groups) {
    const double v = tpr ? *r.tpr : *r.fpr;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

// Random scored cohort with `groups` groups; y_hat = score >= 0.5.
LabeledPredictions random_cohort(std::mt19937_64& gen, int groups, int per_group) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-0.5, 1.5);
  std::vector<std::string> g;
  std::vector<std::uint8_t> y;
  std::vector<double> s;
  for (int a = 0; a < groups; ++a) {
    const double sep = shift(gen);
    const double offset = 0.5 * noise(gen);
    for (int i = 0; i < per_group; ++i) {
      const std::uint8_t label = (i % 3 == 0) ? 1 : 0;
      const double logit = offset + (label ? sep : -sep) + noise(gen);
      g.push_back("g" + std::to_string(a));
      y.push_back(label);
      // coarse rounding so groups have ties
      s.push_back(std::round(100.0 / (1.0 + std::exp(-logit))) / 100.0);
    }
  }
  return testing::scored_preds(g, y, s);
}

bool all_base_above_diagonal(const LabeledPredictions& preds) {
  for (const auto& b : bases(preds))
    if (b.tpr < b.fpr) return false;
  return true;
}

}  // namespace

TEST_CASE("hard EO on already-equal base rates is the identity") {
  std::vector<std::string> g;
  std::vector<std::uint8_t> y, yh;
  append_group(g, y, yh, "a", 10, 8, 10, 3);
  append_group(g, y, yh, "b", 20, 16, 30, 9);
  const auto preds = testing::hard_preds(g, y, yh);
  const auto dp = fit_eo_hard(preds);
  for (const auto& p : dp.groups) {
    CHECK(p.p0 == 0.0);
    CHECK(p.p1 == 1.0);
  }
  CHECK(dp.fit.objective == doctest::Approx(dp.fit.base_loss).epsilon(1e-12));
  CHECK(apply_hard(dp, preds, 99) == yh);
}

TEST_CASE("hard EO on one group duplicated under two names is the identity") {
  std::vector<std::string> g;
  std::vector<std::uint8_t> y, yh;
  append_group(g, y, yh, "x", 12, 7, 15, 4);
  append_group(g, y, yh, "y", 12, 7, 15, 4);
  const auto dp = fit_eo_hard(testing::hard_preds(g, y, yh));
  CHECK(dp.at("x").p0 == 0.0);
  CHECK(dp.at("x").p1 == 1.0);
  CHECK(dp.at("y").p0 == 0.0);
  CHECK(dp.at("y").p1 == 1.0);
}

TEST_CASE("hard EO (0.9,0.2)/(0.6,0.3) matches the grid oracle") {
  const auto preds = two_group_example();
  const auto dp = fit_eo_hard(preds);
  const double grid = oracle::hard_grid(bases(preds), 1.0, 1.0, 0.02);
  CHECK(std::abs(dp.fit.objective - grid) <= 1e-3);
  CHECK(dp.fit.objective <= grid + 1e-12);  // the grid only sees a subset

  const auto rates = expected_rates(dp, confusion_rates(preds));
  CHECK(max_range(rates, true) <= 1e-9);
  CHECK(max_range(rates, false) <= 1e-9);
  CHECK(dp.fit.objective ==
        doctest::Approx(oracle::point_loss(bases(preds), dp.target.fpr, dp.target.tpr, 1, 1)).epsilon(1e-12));
}

TEST_CASE("hard EO respects costs and explicit priors") {
  const auto preds = two_group_example();
  LossSpec loss;
  loss.cost_fp = 1.0;
  loss.cost_fn = 5.0;
  const auto dp = fit_eo_hard(preds, loss);
  const double grid = oracle::hard_grid(bases(preds), 1.0, 5.0, 0.02);
  CHECK(std::abs(dp.fit.objective - grid) <= 1e-3);

  loss.priors["a"] = {0.1, 0.4};
  CHECK_THROWS_AS(fit_eo_hard(preds, loss), Error);  // b has no prior
  loss.priors["b"] = {0.3, 0.2};
  const auto weighted = fit_eo_hard(preds, loss);
  std::vector<oracle::GroupBase> b = bases(preds);
  b[0].pos_mass = 0.1;
  b[0].neg_mass = 0.4;
  b[1].pos_mass = 0.3;
  b[1].neg_mass = 0.2;
  CHECK(std::abs(weighted.fit.objective - oracle::hard_grid(b, 1.0, 5.0, 0.02)) <= 1e-3);
}

TEST_CASE("EO fitting rejects unusable inputs") {
  const auto one = testing::hard_preds({"a", "a"}, {1, 0}, {1, 0});
  CHECK_THROWS_AS(fit_eo_hard(one), Error);
  const auto no_pos = testing::hard_preds({"a", "a", "b", "b"}, {1, 0, 0, 0}, {1, 0, 0, 1});
  CHECK_THROWS_AS(fit_eo_hard(no_pos), Error);
  CHECK_THROWS_AS(fit_eo_soft(two_group_example()), Error);  // no scores
  LossSpec bad;
  bad.cost_fp = -1.0;
  CHECK_THROWS_AS(fit_eo_hard(two_group_example(), bad), Error);
}

TEST_CASE("soft EO on identical groups picks the single-group optimal vertex with one threshold") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.55, 0.4, 0.3, 0.2, 0.1, 0.05};
  const std::vector<std::uint8_t> y{1, 1, 0, 1, 0, 1, 0, 0, 0, 0};
  std::vector<std::string> g;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const char* name : {"p", "q"})
    for (std::size_t i = 0; i < s.size(); ++i) {
      g.push_back(name);
      scores.push_back(s[i]);
      labels.push_back(y[i]);
    }
  const auto dp = fit_eo_soft(testing::scored_preds(g, labels, scores));

  const auto roc = roc_curve(s, y);
  double best = 1e300;
  RocPoint best_pt{};
  for (const auto& p : roc) {
    const double l = 6.0 * p.fpr + 4.0 * (1.0 - p.tpr);  // neg, pos counts of one group
    if (l < best - 1e-12 || (std::abs(l - best) <= 1e-12 && p.tpr > best_pt.tpr)) {
      best = l;
      best_pt = p;
    }
  }
  CHECK(dp.target.fpr == doctest::Approx(best_pt.fpr));
  CHECK(dp.target.tpr == doctest::Approx(best_pt.tpr));
  for (const auto& gp : dp.groups) {
    REQUIRE(gp.mixture.size() == 1);
    CHECK(gp.mixture[0].threshold == best_pt.threshold);
  }
}

TEST_CASE("soft EO with an uninformative group lands on the diagonal") {
  std::vector<std::string> g{"flat", "flat", "flat", "flat", "good", "good", "good", "good", "good"};
  std::vector<std::uint8_t> y{1, 0, 1, 0, 1, 1, 0, 0, 0};
  std::vector<double> s{0.4, 0.4, 0.4, 0.4, 0.9, 0.7, 0.6, 0.2, 0.1};
  const auto dp = fit_eo_soft(testing::scored_preds(g, y, s));
  CHECK(dp.target.fpr == doctest::Approx(dp.target.tpr).epsilon(1e-12));
  const auto rates = expected_rates(dp);
  CHECK(max_range(rates, true) <= 1e-9);
  CHECK(max_range(rates, false) <= 1e-9);
}

TEST_CASE("soft EO on a two-group synthetic cohort matches the lattice oracle") {
  synth::CohortConfig cfg = synth::default_cohort_config();
  cfg.n = 300;
  cfg.seed = 8;
  const auto preds = synth::generate_cohort(cfg).modalities.front();
  const auto dp = fit_eo_soft(preds);

  std::vector<std::vector<std::pair<double, double>>> rocs;
  for (std::size_t a = 0; a < preds.group_count(); ++a) {
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds.group[i] == a) {
        s.push_back((*preds.scores)[i]);
        y.push_back(preds.y_true[i]);
      }
    rocs.push_back(oracle::roc_sweep(s, y));
  }
  const double lattice = oracle::soft_grid(rocs, bases(preds), 1.0, 1.0, 1e-3);
  CHECK(std::abs(dp.fit.objective - lattice) <= 1e-3);
  CHECK(dp.fit.objective <= lattice + 1e-12);
}

TEST_CASE("EO invariants on random cohorts") {
  std::mt19937_64 gen(17);
  int soft_vs_hard = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int groups = 2 + trial % 3;
    const auto preds = random_cohort(gen, groups, 30 + trial);
    HardDerivedPredictor hard;
    SoftDerivedPredictor soft;
    try {
      hard = fit_eo_hard(preds);
      soft = fit_eo_soft(preds);
    } catch (const Error& e) {
      // a group without both classes is rejected up front
      CHECK(e.category() == ErrorCategory::invalid_argument);
      continue;
    }
    const auto base = confusion_rates(preds, hard_labels(preds));
    const auto hr = expected_rates(hard, base);
    const auto sr = expected_rates(soft);
    CHECK(max_range(hr, true) <= 1e-9);
    CHECK(max_range(hr, false) <= 1e-9);
    CHECK(max_range(sr, true) <= 1e-9);
    CHECK(max_range(sr, false) <= 1e-9);
    CHECK(hard.fit.objective >= hard.fit.unconstrained_loss - 1e-9);
    CHECK(soft.fit.objective >= soft.fit.unconstrained_loss - 1e-9);
    if (all_base_above_diagonal(preds)) {
      CHECK(soft.fit.objective <= hard.fit.objective + 1e-9);
      ++soft_vs_hard;
    }
  }
  CHECK(soft_vs_hard >= 20);
}

TEST_CASE("EO fits are invariant under group renaming") {
  std::mt19937_64 gen(23);
  const auto preds = random_cohort(gen, 3, 80);
  // reverse the alphabetical order of the names
  std::vector<std::string> renamed;
  for (std::size_t i = 0; i < preds.size(); ++i) renamed.push_back("z" + std::to_string(9 - preds.group[i]));
  auto other = make_predictions(preds.ids, preds.y_true, renamed, {}, preds.scores, preds.y_hat);

  const auto h1 = fit_eo_hard(preds), h2 = fit_eo_hard(other);
  CHECK(h1.fit.objective == doctest::Approx(h2.fit.objective).epsilon(1e-12));
  const auto s1 = fit_eo_soft(preds), s2 = fit_eo_soft(other);
  CHECK(s1.fit.objective == doctest::Approx(s2.fit.objective).epsilon(1e-12));
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& from = preds.universe[a];
    const std::string to = "z" + std::to_string(9 - a);
    CHECK(h1.at(from).p0 == doctest::Approx(h2.at(to).p0).epsilon(1e-9));
    CHECK(h1.at(from).p1 == doctest::Approx(h2.at(to).p1).epsilon(1e-9));
    REQUIRE(s1.at(from).mixture.size() == s2.at(to).mixture.size());
    for (std::size_t c = 0; c < s1.at(from).mixture.size(); ++c) {
      CHECK(s1.at(from).mixture[c].threshold == s2.at(to).mixture[c].threshold);
      CHECK(s1.at(from).mixture[c].weight == doctest::Approx(s2.at(to).mixture[c].weight).epsilon(1e-9));
    }
  }
}

TEST_CASE("apply_hard: identity, all-ones and determinism") {
  const auto preds = two_group_example();
  HardDerivedPredictor identity;
  for (const char* g : {"a", "b"}) identity.groups.push_back({g, 0.0, 1.0, {}, {}, 0, 0});
  CHECK(apply_hard(identity, preds, 1) == *preds.y_hat);

  HardDerivedPredictor ones = identity;
  for (auto& g : ones.groups) g.p0 = g.p1 = 1.0;
  CHECK(apply_hard(ones, preds, 1) == std::vector<std::uint8_t>(preds.size(), 1));
  const auto er = expected_rates(ones, confusion_rates(preds));
  for (const auto& r : er.groups) {
    CHECK(*r.tpr == 1.0);
    CHECK(*r.fpr == 1.0);
  }
  const auto id_rates = expected_rates(identity, confusion_rates(preds));
  CHECK(*id_rates.at("a").tpr == doctest::Approx(0.9));
  CHECK(*id_rates.at("b").fpr == doctest::Approx(0.3));

  const auto dp = fit_eo_hard(preds);
  CHECK(apply_hard(dp, preds, 5) == apply_hard(dp, preds, 5));
}

TEST_CASE("apply_soft: all-ones and single-threshold mixtures") {
  const auto preds = testing::scored_preds({"a", "a", "b", "b", "b"}, {1, 0, 1, 0, 0}, {0.2, 0.7, 0.9, 0.1, 0.5});
  SoftDerivedPredictor ones;
  for (const char* g : {"a", "b"}) ones.groups.push_back({g, {{0.0, 1.0, {1, 1}}}, {}, 0, 0, 0});
  CHECK(apply_soft(ones, preds, 3) == std::vector<std::uint8_t>(5, 1));

  SoftDerivedPredictor plain;
  for (const char* g : {"a", "b"}) plain.groups.push_back({g, {{0.5, 1.0, {}}}, {}, 0, 0, 0});
  CHECK(apply_soft(plain, preds, 3) == *preds.y_hat);
  CHECK(apply_soft(plain, preds, 3) == apply_soft(plain, preds, 4));
}

TEST_CASE("applied rates concentrate around expected rates at n = 1e5") {
  synth::CohortConfig cfg = synth::default_cohort_config();
  cfg.n = 100000;
  cfg.seed = 31;
  const auto preds = synth::generate_cohort(cfg).modalities.front();
  const auto base = confusion_rates(preds);

  auto check_within_3_sigma = [&](const GroupRates& expected, const std::vector<std::uint8_t>& y_tilde) {
    const auto realized = confusion_rates(preds, y_tilde);
    for (const auto& e : expected.groups) {
      const auto& r = realized.at(e.group);
      const double sd_t = std::sqrt(*e.tpr * (1 - *e.tpr) / static_cast<double>(e.n_pos));
      const double sd_f = std::sqrt(*e.fpr * (1 - *e.fpr) / static_cast<double>(e.n_neg));
      // a randomized predictor at a hull vertex has zero variance; allow one count
      CHECK(std::abs(*r.tpr - *e.tpr) <= 3 * sd_t + 1.0 / e.n_pos);
      CHECK(std::abs(*r.fpr - *e.fpr) <= 3 * sd_f + 1.0 / e.n_neg);
    }
  };
  const auto hard = fit_eo_hard(preds);
  check_within_3_sigma(expected_rates(hard, base), apply_hard(hard, preds, 77));
  const auto soft = fit_eo_soft(preds);
  check_within_3_sigma(expected_rates(soft), apply_soft(soft, preds, 77));
  // reusing the generator's seed must not correlate the coin flips with the labels
  check_within_3_sigma(expected_rates(hard, base), apply_hard(hard, preds, cfg.seed));
  check_within_3_sigma(expected_rates(soft), apply_soft(soft, preds, cfg.seed));
}
