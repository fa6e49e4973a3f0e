// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "equifair/cli.hpp"
#include "equifair/debias.hpp"
#include "equifair/ensemble.hpp"
#include "equifair/eo_postprocess.hpp"
#include "equifair/io.hpp"
#include "equifair/metrics.hpp"
#include "equifair/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace equifair;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::pair<double, double> ranges(const GroupRates& r) {
  double tlo = 1, thi = 0, flo = 1, fhi = 0;
  for (const auto& g : r.groups) {
    if (!g.tpr || !g.fpr) continue;
    tlo = std::min(tlo, *g.tpr);
    thi = std::max(thi, *g.tpr);
    flo = std::min(flo, *g.fpr);
    fhi = std::max(fhi, *g.fpr);
  }
  return {thi - tlo, fhi - flo};
}

std::vector<oracle::GroupBase> bases(const LabeledPredictions& p) {
  const auto rates = confusion_rates(p, hard_labels(p));
  const double n = static_cast<double>(p.size());
  std::vector<oracle::GroupBase> out;
  for (const auto& r : rates.groups)
    out.push_back({*r.fpr, *r.tpr, static_cast<double>(r.n_pos) / n, static_cast<double>(r.n_neg) / n});
  return out;
}

// Copies every row `times` times under fresh ids.
LabeledPredictions replicate(const LabeledPredictions& p, std::size_t times) {
  std::vector<std::string> ids, groups;
  std::vector<std::uint8_t> y, y_hat;
  std::vector<double> scores;
  for (std::size_t k = 0; k < times; ++k)
    for (std::size_t i = 0; i < p.size(); ++i) {
      ids.push_back(p.ids[i] + "#" + std::to_string(k));
      groups.push_back(p.group_name(i));
      y.push_back(p.y_true[i]);
      y_hat.push_back((*p.y_hat)[i]);
      scores.push_back((*p.scores)[i]);
    }
  return make_predictions(ids, y, groups, p.universe, scores, y_hat);
}

Outcome eo_exactness() {
  Outcome o;
  synth::CohortConfig cfg;
  cfg.groups = synth::preset_groups("ethnicity");
  cfg.n = 20000;
  cfg.seed = 2024;
  const auto cohort = synth::generate_cohort(cfg);
  const auto& preds = cohort.modalities.front();
  o.require(preds.group_count() == 5, "expected 5 groups");
  double lo = 1, hi = 0;
  for (const auto& a : cohort.analytic) {
    lo = std::min(lo, a.tpr);
    hi = std::max(hi, a.tpr);
  }
  o.require(hi - lo >= 0.15, "planted tpr gap " + fmt(hi - lo));

  const auto base = confusion_rates(preds);
  const auto hard = fit_eo_hard(preds);
  const auto soft = fit_eo_soft(preds);
  const auto [ht, hf] = ranges(expected_rates(hard, base));
  const auto [st, sf] = ranges(expected_rates(soft));
  o.require(std::max({ht, hf, st, sf}) <= 1e-9, "expected ranges hard " + fmt(ht) + "/" + fmt(hf) + " soft " +
                                                    fmt(st) + "/" + fmt(sf));

  const auto big = replicate(preds, 5);  // 10^5 applications
  const auto [eht, ehf] = ranges(confusion_rates(big, apply_hard(hard, big, 1)));
  const auto [est, esf] = ranges(confusion_rates(big, apply_soft(soft, big, 1)));
  o.require(std::max({eht, ehf, est, esf}) <= 0.03, "empirical ranges hard " + fmt(eht) + "/" + fmt(ehf) +
                                                        " soft " + fmt(est) + "/" + fmt(esf));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("hard target (") + fmt(hard.target.fpr) + "," +
              fmt(hard.target.tpr) + "), soft target (" + fmt(soft.target.fpr) + "," + fmt(soft.target.tpr) +
              "), empirical max range " + fmt(std::max({eht, ehf, est, esf}));
  return o;
}

Outcome trade_off() {
  Outcome o;
  int cohorts = 0;
  double worst_gain = -1e300, worst_soft = -1e300;
  for (const auto& preset : synth::preset_names())
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      synth::CohortConfig cfg;
      cfg.groups = synth::preset_groups(preset);
      cfg.n = 5000;
      cfg.seed = seed;
      const auto preds = synth::generate_cohort(cfg).modalities.front();
      const auto hard = fit_eo_hard(preds);
      const auto soft = fit_eo_soft(preds);
      // unit costs with empirical priors: loss is the expected error rate
      const double base_acc = 1.0 - hard.fit.base_loss;
      for (const auto* fit : {&hard.fit, &soft.fit}) {
        const double gain = (1.0 - fit->objective) - base_acc;
        worst_gain = std::max(worst_gain, gain);
        if (gain > 1e-9) o.require(false, preset + "/" + std::to_string(seed) + " accuracy gain " + fmt(gain));
      }
      worst_soft = std::max(worst_soft, soft.fit.objective - hard.fit.objective);
      if (soft.fit.objective > hard.fit.objective + 1e-9)
        o.require(false, preset + "/" + std::to_string(seed) + " soft loss above hard by " +
                             fmt(soft.fit.objective - hard.fit.objective));
      ++cohorts;
    }
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(cohorts) + " cohorts, max accuracy gain " +
              fmt(worst_gain) + ", max soft-hard " + fmt(worst_soft);
  return o;
}

// Two groups with fixed confusion counts: (pos, tp, neg, fp) each.
LabeledPredictions two_groups(const std::array<std::array<int, 4>, 2>& counts) {
  std::vector<std::string> g, ids;
  std::vector<std::uint8_t> y, yh;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto [pos, t, neg, f] = counts[k];
    const std::string name = k == 0 ? "a" : "b";
    for (int i = 0; i < pos + neg; ++i) {
      g.push_back(name);
      y.push_back(i < pos);
      yh.push_back(i < pos ? i < t : i - pos < f);
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i) ids.push_back("r" + std::to_string(i));
  return make_predictions(ids, y, g, {}, std::nullopt, yh);
}

Outcome lp_oracle() {
  Outcome o;
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> count(20, 200);
  std::vector<LabeledPredictions> instances{two_groups({{{10, 9, 10, 2}, {10, 6, 10, 3}}})};
  for (int trial = 0; trial < 25; ++trial) {
    std::array<std::array<int, 4>, 2> c{};
    for (auto& grp : c) {
      const int pos = count(gen), neg = count(gen);
      std::uniform_int_distribution<int> tp(1, pos - 1), fp(1, neg - 1);
      grp = {pos, tp(gen), neg, fp(gen)};
    }
    instances.push_back(two_groups(c));
  }

  // The criterion at the default unit costs.
  double worst_hard = 0.0, worst_soft = 0.0;
  for (const auto& preds : instances)
    worst_hard = std::max(worst_hard, std::abs(fit_eo_hard(preds).fit.objective -
                                               oracle::hard_grid(bases(preds), 1.0, 1.0)));

  // Unequal costs scale the loss, and with it the coarse grid's own
  // discretization error, so there the library must never lose to the 0.02
  // grid and must match a 0.001 grid to the same tolerance.
  double worst_above = -1.0, worst_fine = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    LossSpec loss;
    loss.cost_fn = 2.0 + static_cast<double>(i % 3);
    const double lib = fit_eo_hard(instances[i], loss).fit.objective;
    const auto b = bases(instances[i]);
    worst_above = std::max(worst_above, lib - oracle::hard_grid(b, 1.0, loss.cost_fn));
    worst_fine = std::max(worst_fine, std::abs(lib - oracle::hard_grid(b, 1.0, loss.cost_fn, 1e-3)));
  }

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synth::CohortConfig cfg = synth::default_cohort_config();
    cfg.n = 400;
    cfg.seed = seed;
    const auto preds = synth::generate_cohort(cfg).modalities.front();
    std::vector<std::vector<std::pair<double, double>>> rocs;
    for (std::size_t a = 0; a < preds.group_count(); ++a) {
      std::vector<double> s;
      std::vector<std::uint8_t> yy;
      for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds.group[i] == a) {
          s.push_back((*preds.scores)[i]);
          yy.push_back(preds.y_true[i]);
        }
      rocs.push_back(oracle::roc_sweep(s, yy));
    }
    const double diff = std::abs(fit_eo_soft(preds).fit.objective - oracle::soft_grid(rocs, bases(preds), 1.0, 1.0));
    worst_soft = std::max(worst_soft, diff);
  }
  o.require(worst_hard <= 1e-3, "hard gap " + fmt(worst_hard));
  o.require(worst_above <= 1e-12, "hard objective above the grid by " + fmt(worst_above));
  o.require(worst_fine <= 1e-3, "weighted hard gap to fine grid " + fmt(worst_fine));
  o.require(worst_soft <= 1e-3, "soft gap " + fmt(worst_soft));
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(instances.size()) + " hard instances max |diff| " +
              fmt(worst_hard) + ", weighted max above grid " + fmt(worst_above) + " fine |diff| " +
              fmt(worst_fine) + ", 5 soft instances max |diff| " + fmt(worst_soft);
  return o;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Outcome debias_invariants() {
  Outcome o;
  synth::EmbeddingPlantConfig cfg;
  cfg.sets = io::equality_sets_from_json(io::load_json(std::string(EQUIFAIR_DATA_DIR) + "/presets/gender.json"));
  cfg.vocab_size = 50;
  cfg.dim = 25;
  cfg.noise = 0.01;
  cfg.seed = 99;
  const auto plant = synth::generate_embeddings(cfg);
  const auto res = hard_debias(plant.embeddings, plant.sets, NeutralPolicy::all_except_sets(), 1);
  const auto& out = res.embeddings;
  const auto b = res.subspace.direction(0);

  double max_proj = 0.0, max_norm_dev = 0.0, max_spread = 0.0;
  for (const auto& w : plant.neutral_words) max_proj = std::max(max_proj, std::abs(dot(out.row(*out.find(w)), b)));
  for (std::size_t i = 0; i < out.size(); ++i)
    max_norm_dev = std::max(max_norm_dev, std::abs(std::sqrt(dot(out.row(i), out.row(i))) - 1.0));
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int p = 0; p < 100; ++p) {
    std::vector<double> v(cfg.dim);
    for (double& x : v) x = n(gen);
    const auto vb = project(v, res.subspace);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= vb[j];
    for (const auto& set : plant.sets) {
      const double first = dot(out.row(*out.find(set[0])), v);
      for (const auto& w : set) max_spread = std::max(max_spread, std::abs(dot(out.row(*out.find(w)), v) - first));
    }
  }
  const double cosine = std::abs(dot(b, plant.planted.direction(0)));
  o.require(max_proj <= 1e-9, "neutral projection " + fmt(max_proj));
  o.require(max_norm_dev <= 1e-9, "norm deviation " + fmt(max_norm_dev));
  o.require(max_spread <= 1e-9, "equidistance spread " + fmt(max_spread));
  o.require(cosine >= 0.99, "recovery |cos| " + fmt(cosine));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("max proj ") + fmt(max_proj) + ", norm dev " +
              fmt(max_norm_dev) + ", spread " + fmt(max_spread) + ", |cos| " + fmt(cosine);
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  std::mt19937_64 gen(123);
  std::uniform_int_distribution<int> size(2, 200), levels(2, 50);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(gen);
    std::uniform_int_distribution<int> lvl(0, levels(gen));
    std::bernoulli_distribution coin(0.3);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < n; ++i) {
      s.push_back(lvl(gen) / 7.0);
      y.push_back(coin(gen));
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(auc_roc(s, y) - oracle::pairwise_auc(s, y)));
  }
  synth::MultilabelConfig mc;
  mc.n = 400;
  mc.seed = 8;
  const auto data = synth::generate_multilabel(mc);
  const auto m = multilabel_auc(data.scores, data.labels);
  double sum = 0.0;
  int used = 0;
  std::vector<double> fs;
  std::vector<std::uint8_t> fy;
  for (std::size_t l = 0; l < data.labels.size(); ++l) {
    fs.insert(fs.end(), data.scores[l].begin(), data.scores[l].end());
    fy.insert(fy.end(), data.labels[l].begin(), data.labels[l].end());
    const auto pos = std::count(data.labels[l].begin(), data.labels[l].end(), 1);
    if (pos == 0 || pos == static_cast<long>(mc.n)) continue;
    sum += oracle::pairwise_auc(data.scores[l], data.labels[l]);
    ++used;
  }
  const double macro_diff = std::abs(m.macro - sum / used);
  const double micro_diff = std::abs(m.micro - oracle::pairwise_auc(fs, fy));
  o.require(worst <= 1e-12, "auc_roc deviation " + fmt(worst));
  o.require(macro_diff <= 1e-12, "macro deviation " + fmt(macro_diff));
  o.require(micro_diff <= 1e-12, "micro deviation " + fmt(micro_diff));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("1000 trials max ") + fmt(worst) + ", macro " +
              fmt(macro_diff) + ", micro " + fmt(micro_diff);
  return o;
}

FeatureMatrix complementary(std::size_t n, std::uint64_t seed, std::vector<std::uint8_t>& y) {
  synth::CohortConfig cfg = synth::default_cohort_config();
  cfg.n = n;
  cfg.seed = seed;
  cfg.segments = 2;
  cfg.modalities = {{"left", {1, 0}}, {"right", {0, 1}}};
  const auto cohort = synth::generate_cohort(cfg);
  FeatureMatrix x{n, 2, {}};
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& m : cohort.modalities) x.values.push_back((*m.scores)[i]);
  y = cohort.modalities[0].y_true;
  return x;
}

Outcome ensemble_lift() {
  Outcome o;
  std::vector<std::uint8_t> yf, yt;
  const auto xf = complementary(10000, 41, yf);
  const auto xt = complementary(10000, 42, yt);
  const auto model = fit_ensemble(xf, yf);
  const double combined = auc_roc(predict_proba(model, xt), yt);
  double best = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < xt.rows; ++i) col.push_back(xt.values[2 * i + j]);
    best = std::max(best, auc_roc(col, yt));
  }
  o.require(combined >= best + 0.02, "lift " + fmt(combined - best));

  double worst = 0.0;
  for (const std::vector<double>& p : {std::vector<double>{0, 0, 0}, {2.0, -1.0, 0.5}, model.weights.size() == 2
                                           ? std::vector<double>{model.weights[0], model.weights[1], model.intercept}
                                           : std::vector<double>{1, 1, 1}}) {
    const auto g = ensemble_gradient(p, xf, yf, 1.0);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& q) { return ensemble_objective(q, xf, yf, 1.0); }, p, 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(g[i] - fd[i]));
  }
  o.require(worst <= 1e-6, "gradient deviation " + fmt(worst));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("ensemble ") + fmt(combined) + " vs best constituent " +
              fmt(best) + ", gradient deviation " + fmt(worst);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const std::string sets = std::string(EQUIFAIR_DATA_DIR) + "/presets/gender.json";
  struct Config {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Config> configs{
      {"eo-hard",
       {"pipeline", "--preset", "ethnicity", "--n", "8000", "--modalities", "2", "--intervention", "eo-hard", "--seed", "7"},
       {"report.json", "report_base.json", "derived.json", "ensemble.json", "predictions_derived.csv", "plot.csv"}},
      {"eo-soft",
       {"pipeline", "--preset", "insurance", "--n", "8000", "--intervention", "eo-soft", "--seed", "7"},
       {"report.json", "report_base.json", "derived.json", "predictions_derived.csv", "plot.csv"}},
      {"debias",
       {"pipeline", "--preset", "gender", "--n", "4000", "--intervention", "debias", "--equality-sets", sets, "--seed", "7"},
       {"report.json", "debiased_embeddings.txt", "subspace.json", "debias_audit.json"}},
  };
  const auto root = fs::temp_directory_path() / "equifair_acceptance";
  fs::remove_all(root);
  std::size_t compared = 0;
  for (const auto& c : configs) {
    std::string first_run[2];
    for (int r = 0; r < 2; ++r) {
      const auto dir = root / (c.name + "_" + std::to_string(r));
      auto args = c.args;
      args.insert(args.end(), {"--out", dir.string()});
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      if (code != 0) {
        o.require(false, c.name + " exit " + std::to_string(code) + ": " + err.str());
        break;
      }
    }
    for (const auto& f : c.files) {
      const auto a = root / (c.name + "_0") / f;
      const auto b = root / (c.name + "_1") / f;
      o.require(fs::exists(a) && fs::exists(b), c.name + " missing " + f);
      o.require(slurp(a) == slurp(b), c.name + " differs in " + f);
      ++compared;
    }
  }
  fs::remove_all(root);
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(compared) + " files compared byte for byte";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria{
      {1, "EO exactness", eo_exactness, 5.0},
      {2, "trade-off direction", trade_off, 0.0},
      {3, "LP oracle equivalence", lp_oracle, 60.0},
      {4, "debias invariants", debias_invariants, 1.0},
      {5, "metric oracles", metric_oracles, 0.0},
      {6, "ensemble lift", ensemble_lift, 0.0},
      {7, "determinism", determinism, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) o.require(false, "runtime " + fmt(secs) + " s over budget");
    if (!o.pass) ++failures;
    std::printf("criterion %d %-22s %s  (%.2f s) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
