#include "equifair/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "equifair/debias.hpp"
#include "equifair/ensemble.hpp"
#include "equifair/eo_postprocess.hpp"
#include "equifair/error.hpp"
#include "equifair/io.hpp"
#include "equifair/metrics.hpp"
#include "equifair/rng.hpp"
#include "equifair/synth.hpp"

namespace equifair::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

// ---------------------------------------------------------------- options

struct Common {
  std::string seed_text;
  std::string out = ".";
  std::string task = "unnamed";
  std::string timestamp;
  std::string group_col = "group";
};

struct SynthOpts {
  std::string preset = "gender";
  std::size_t n = 20000;
  std::size_t modalities = 1;
  double positive_rate = 0.131;
  double fit_fraction = 0.5;
  std::string plant_sets;
  std::size_t vocab_size = 50;
  std::size_t dim = 25;
  double noise = 0.01;
};

struct Opts {
  Common common;
  SynthOpts synth;
  std::string input;
  std::string derived;
  std::string model;
  std::string embeddings;
  std::string equality_sets;
  std::string neutral;
  std::string intervention = "none";
  bool allow_combined = false;
  std::string fit_split;
  std::string classifier = "base";
  double cost_fp = 1.0;
  double cost_fn = 1.0;
  double C = 1.0;
  std::size_t k = 0;
};

std::uint64_t resolve_seed(const std::string& text) {
  std::string s = text;
  if (s.empty())
    if (const char* env = std::getenv("EQUIFAIR_SEED")) s = env;
  if (s.empty()) return 0;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCategory::usage,
          "seed must be a non-negative integer, got '" + s + "'");
  return v;
}

std::optional<std::string> resolve_timestamp(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return std::nullopt;
  long long epoch = 0;
  const std::string s = env;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), epoch);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCategory::usage, "SOURCE_DATE_EPOCH is not an integer");
  const std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

struct Interventions {
  bool eo_hard = false;
  bool eo_soft = false;
  bool debias = false;
  bool combined = false;
  std::string text;
};

Interventions parse_interventions(const std::string& text, bool allow_combined) {
  Interventions iv;
  iv.text = text;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  require(!parts.empty(), ErrorCategory::usage, "empty --intervention");
  for (const auto& p : parts) {
    if (p == "none") continue;
    if (p == "eo-hard") iv.eo_hard = true;
    else if (p == "eo-soft") iv.eo_soft = true;
    else if (p == "debias") iv.debias = true;
    else fail(ErrorCategory::usage, "unknown intervention '" + p + "' (none|eo-hard|eo-soft|debias)");
  }
  const int active = int(iv.eo_hard) + int(iv.eo_soft) + int(iv.debias);
  require(!(parts.size() > 1 && std::count(parts.begin(), parts.end(), "none") > 0), ErrorCategory::usage,
          "'none' cannot be combined with other interventions");
  require(!(iv.eo_hard && iv.eo_soft), ErrorCategory::usage, "eo-hard and eo-soft are alternative EO passes");
  if (active > 1) {
    require(allow_combined, ErrorCategory::usage,
            "interventions are mutually exclusive; pass --allow-combined to compose them");
    iv.combined = true;
  }
  return iv;
}

// ---------------------------------------------------------------- run record

// Collects input/output hashes into out/manifest.json.
class Run {
 public:
  Run(std::string command, const Opts& o, const std::vector<std::string>& args)
      : out_(o.common.out), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    require(!ec && fs::is_directory(out_), ErrorCategory::io, "cannot create output directory " + out_.string());
    manifest_["tool"] = "equifair";
    manifest_["version"] = kVersion;
    manifest_["command"] = command_;
    manifest_["arguments"] = args;
    manifest_["seeds"] = Json::object();
    manifest_["inputs"] = Json::array();
    manifest_["outputs"] = Json::array();
  }

  fs::path path(const std::string& name) const { return out_ / name; }
  void input(const fs::path& p) { manifest_["inputs"].push_back({{"path", p.string()}, {"sha256", io::sha256_hex(p)}}); }
  void seed(const std::string& name, std::uint64_t v) { manifest_["seeds"][name] = v; }
  void note(const std::string& key, Json v) { manifest_["notes"][key] = std::move(v); }

  void json(const std::string& name, const Json& j) {
    io::save_json(path(name), j);
    output(name);
  }
  template <class Writer>
  void text(const std::string& name, Writer&& write) {
    std::ofstream f(path(name), std::ios::binary);
    require(f.good(), ErrorCategory::io, "cannot write " + path(name).string());
    write(f);
    f.close();
    require(!f.fail(), ErrorCategory::io, "write failed: " + path(name).string());
    output(name);
  }
  void output(const std::string& name) {
    manifest_["outputs"].push_back({{"path", name}, {"sha256", io::sha256_hex(path(name))}});
  }

  void finish(std::ostream& out) {
    io::save_json(path("manifest.json"), manifest_);
    for (const auto& o : manifest_["outputs"]) out << (out_ / o["path"].get<std::string>()).string() << '\n';
    out << path("manifest.json").string() << '\n';
  }

 private:
  fs::path out_;
  std::string command_;
  Json manifest_;
};

// ---------------------------------------------------------------- helpers

io::PredictionTable load_table(Run& run, const Opts& o) {
  require(!o.input.empty(), ErrorCategory::usage, "--input is required");
  io::CsvOptions csv;
  csv.group_col = o.common.group_col;
  auto t = io::load_predictions(o.input, csv);
  run.input(o.input);
  return t;
}

std::vector<std::size_t> rows_where(const io::PredictionTable& t, const std::function<bool(const std::string&)>& keep) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < t.preds.size(); ++i)
    if (!t.split || keep((*t.split)[i])) rows.push_back(i);
  return rows;
}

io::PredictionTable subset(const io::PredictionTable& t, const std::vector<std::size_t>& rows) {
  io::PredictionTable out;
  out.preds = select_rows(t.preds, rows);
  out.feature_names = t.feature_names;
  out.features.rows = rows.size();
  out.features.cols = t.features.cols;
  for (std::size_t r : rows) {
    const auto v = t.features.row(r);
    out.features.values.insert(out.features.values.end(), v.begin(), v.end());
  }
  if (t.split) {
    out.split.emplace();
    for (std::size_t r : rows) out.split->push_back((*t.split)[r]);
  }
  return out;
}

ReportMetadata metadata_for(const Opts& o, std::uint64_t seed) {
  ReportMetadata m;
  m.task = o.common.task;
  m.seed = seed;
  m.timestamp = resolve_timestamp(o.common.timestamp);
  m.notes["overall_auc"] = "micro";
  return m;
}

LossSpec loss_for(const Opts& o) {
  LossSpec l;
  l.cost_fp = o.cost_fp;
  l.cost_fn = o.cost_fn;
  l.validate();
  return l;
}

void write_report(Run& run, const std::string& stem, const std::string& classifier, const FairnessReport& r,
                  std::vector<io::PlotRow>& plot) {
  run.json(stem + ".json", io::to_json(r));
  const auto rows = io::plot_rows(classifier, r);
  plot.insert(plot.end(), rows.begin(), rows.end());
}

io::PredictionTable cohort_table(const synth::Cohort& c, double fit_fraction, std::uint64_t split_seed) {
  io::PredictionTable t;
  t.preds = c.modalities.front();
  if (c.modalities.size() > 1) {
    const std::size_t n = t.preds.size();
    t.features.rows = n;
    t.features.cols = c.modalities.size();
    t.features.values.resize(n * c.modalities.size());
    for (std::size_t k = 0; k < c.modalities.size(); ++k) {
      t.feature_names.push_back("m" + std::to_string(k));
      for (std::size_t i = 0; i < n; ++i) t.features.values[i * c.modalities.size() + k] = (*c.modalities[k].scores)[i];
    }
  }
  t.split.emplace();
  for (const auto& id : t.preds.ids)
    t.split->push_back(rng::uniform(split_seed, rng::hash_string(id), 0) < fit_fraction ? "fit" : "test");
  return t;
}

synth::CohortConfig cohort_config(const SynthOpts& s, std::uint64_t seed) {
  synth::CohortConfig cfg;
  cfg.groups = synth::preset_groups(s.preset);
  cfg.n = s.n;
  cfg.seed = seed;
  cfg.positive_rate = s.positive_rate;
  require(s.modalities >= 1, ErrorCategory::usage, "--modalities must be at least 1");
  require(s.fit_fraction > 0.0 && s.fit_fraction < 1.0, ErrorCategory::usage, "--fit-fraction must lie in (0,1)");
  if (s.modalities > 1) {
    // each modality is informative on its own segment of the cohort
    cfg.segments = s.modalities;
    cfg.modalities.clear();
    for (std::size_t k = 0; k < s.modalities; ++k) {
      synth::ModalitySpec m;
      m.name = "m" + std::to_string(k);
      m.informative.assign(s.modalities, 0);
      m.informative[k] = 1;
      cfg.modalities.push_back(m);
    }
  }
  return cfg;
}

EqualitySets load_sets(Run& run, const std::string& path) {
  require(!path.empty(), ErrorCategory::usage, "--equality-sets is required");
  auto sets = io::equality_sets_from_json(io::load_json(path));
  run.input(path);
  return sets;
}

// Largest |<w, b_i>| over the listed rows.
double max_projection(const EmbeddingMatrix& emb, const BiasSubspace& sub, const std::vector<std::string>& tokens) {
  double m = 0.0;
  for (const auto& t : tokens) {
    const auto r = emb.find(t);
    if (!r) continue;
    const auto w = emb.row(*r);
    for (std::size_t i = 0; i < sub.k(); ++i) {
      const auto b = sub.direction(i);
      double d = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) d += w[j] * b[j];
      m = std::max(m, std::abs(d));
    }
  }
  return m;
}

struct DebiasOutcome {
  DebiasResult result;
  Json audit;
};

DebiasOutcome run_debias(Run& run, const EmbeddingMatrix& emb, const EqualitySets& sets, const Opts& o) {
  NeutralPolicy policy;
  if (!o.neutral.empty()) {
    const auto j = io::load_json(o.neutral);
    run.input(o.neutral);
    try {
      policy = NeutralPolicy::listed(j.get<std::vector<std::string>>());
    } catch (const Json::exception& e) {
      fail(ErrorCategory::format, "neutral word list must be a JSON list of strings");
    }
  }
  const std::size_t k = o.k ? o.k : std::max<std::size_t>(1, sets.front().size() - 1);
  auto result = hard_debias(emb, sets, policy, k);

  std::vector<std::string> neutral;
  if (policy.kind == NeutralPolicy::Kind::listed) {
    neutral = policy.tokens;
  } else {
    std::vector<std::uint8_t> in_set(emb.size(), 0);
    for (const auto& s : sets)
      for (const auto& t : s)
        if (auto r = emb.find(t)) in_set[*r] = 1;
    for (std::size_t i = 0; i < emb.size(); ++i)
      if (!in_set[i]) neutral.push_back(emb.token(i));
  }
  Json audit;
  audit["k"] = k;
  audit["neutralized"] = result.neutralized;
  audit["equalized_sets"] = result.equalized_sets;
  audit["max_neutral_projection_before"] = max_projection(emb, result.subspace, neutral);
  audit["max_neutral_projection_after"] = max_projection(result.embeddings, result.subspace, neutral);
  audit["skipped"] = io::to_json(result.skipped);
  return {std::move(result), std::move(audit)};
}

// ---------------------------------------------------------------- commands

void cmd_synth(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("synth", o, args);
  const auto seed = resolve_seed(o.common.seed_text);
  run.seed("seed", seed);
  const auto cohort_seed = rng::derive_seed(seed, "cohort");
  const auto split_seed = rng::derive_seed(seed, "split");
  run.seed("cohort", cohort_seed);
  run.seed("split", split_seed);
  const auto cohort = synth::generate_cohort(cohort_config(o.synth, cohort_seed));
  const auto table = cohort_table(cohort, o.synth.fit_fraction, split_seed);
  run.text("predictions.csv", [&](std::ostream& f) { io::write_predictions(f, table, o.common.group_col); });
  run.json("analytic_rates.json", io::to_json(cohort.analytic));

  if (!o.synth.plant_sets.empty()) {
    synth::EmbeddingPlantConfig pc;
    pc.sets = load_sets(run, o.synth.plant_sets);
    pc.vocab_size = o.synth.vocab_size;
    pc.dim = o.synth.dim;
    pc.noise = o.synth.noise;
    pc.seed = rng::derive_seed(seed, "embeddings");
    run.seed("embeddings", pc.seed);
    const auto planted = synth::generate_embeddings(pc);
    run.text("embeddings.txt", [&](std::ostream& f) { write_embeddings(planted.embeddings, f); });
    run.json("planted_subspace.json", io::to_json(planted.planted));
  }
  run.finish(out);
}

void cmd_metrics(const std::string& name, const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run(name, o, args);
  const auto table = load_table(run, o);
  const auto seed = resolve_seed(o.common.seed_text);
  run.seed("seed", seed);
  std::optional<GroupRates> derived;
  if (!o.derived.empty()) {
    const auto j = io::load_json(o.derived);
    run.input(o.derived);
    const std::string kind = j.value("kind", "");
    if (kind == "eo-hard") {
      const auto dp = io::hard_predictor_from_json(j);
      derived = expected_rates(dp, confusion_rates(table.preds, hard_labels(table.preds)));
    } else if (kind == "eo-soft") {
      derived = expected_rates(io::soft_predictor_from_json(j));
    } else {
      fail(ErrorCategory::format, "unknown derived predictor kind '" + kind + "'");
    }
  }
  auto report = build_report(table.preds, derived, metadata_for(o, seed));
  if (derived) report.derived_ranges = gap_ranges(*derived);
  std::vector<io::PlotRow> plot;
  write_report(run, "report", o.classifier, report, plot);
  run.text("plot.csv", [&](std::ostream& f) { io::write_plot_csv(f, plot); });
  run.finish(out);
}

void cmd_eo_fit(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("eo-fit", o, args);
  const auto iv = parse_interventions(o.intervention, false);
  require(iv.eo_hard || iv.eo_soft, ErrorCategory::usage, "eo-fit needs --intervention eo-hard or eo-soft");
  auto table = load_table(run, o);
  if (!o.fit_split.empty()) {
    require(table.split.has_value(), ErrorCategory::usage, "--fit-split given but the input has no split column");
    table = subset(table, rows_where(table, [&](const std::string& s) { return s == o.fit_split; }));
    require(table.preds.size() > 0, ErrorCategory::empty_input, "no rows in split " + o.fit_split);
  }
  const auto loss = loss_for(o);
  if (iv.eo_hard) run.json("derived.json", io::to_json(fit_eo_hard(table.preds, loss)));
  else run.json("derived.json", io::to_json(fit_eo_soft(table.preds, loss)));
  run.finish(out);
}

std::vector<std::uint8_t> apply_derived(const Json& j, const LabeledPredictions& preds, std::uint64_t seed) {
  const std::string kind = j.value("kind", "");
  if (kind == "eo-hard") return apply_hard(io::hard_predictor_from_json(j), preds, seed);
  if (kind == "eo-soft") return apply_soft(io::soft_predictor_from_json(j), preds, seed);
  fail(ErrorCategory::format, "unknown derived predictor kind '" + kind + "'");
}

io::PredictionTable derived_table(const io::PredictionTable& base, std::vector<std::uint8_t> y_tilde) {
  io::PredictionTable t;
  t.preds = base.preds;
  t.preds.scores.reset();
  t.preds.y_hat = std::move(y_tilde);
  t.split = base.split;
  return t;
}

void cmd_eo_apply(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("eo-apply", o, args);
  const auto table = load_table(run, o);
  require(!o.derived.empty(), ErrorCategory::usage, "--derived is required");
  const auto j = io::load_json(o.derived);
  run.input(o.derived);
  const auto seed = resolve_seed(o.common.seed_text);
  run.seed("seed", seed);
  const auto t = derived_table(table, apply_derived(j, table.preds, seed));
  run.text("predictions.csv", [&](std::ostream& f) { io::write_predictions(f, t, o.common.group_col); });
  run.finish(out);
}

void cmd_debias(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("debias", o, args);
  require(!o.embeddings.empty(), ErrorCategory::usage, "--embeddings is required");
  const auto emb = load_embeddings(o.embeddings);
  run.input(o.embeddings);
  const auto sets = load_sets(run, o.equality_sets);
  const auto outcome = run_debias(run, emb, sets, o);
  run.text("embeddings.txt", [&](std::ostream& f) { write_embeddings(outcome.result.embeddings, f); });
  run.json("subspace.json", io::to_json(outcome.result.subspace));
  run.json("debias_audit.json", outcome.audit);
  run.finish(out);
}

EnsembleModel fit_on_split(const io::PredictionTable& table, const std::string& split, double C) {
  require(!split.empty(), ErrorCategory::usage, "--fit-split is required (a split value, or 'all')");
  require(table.features.cols >= 1, ErrorCategory::format, "no score_<model> feature columns in the input");
  io::PredictionTable fit = table;
  if (split != "all") {
    require(table.split.has_value(), ErrorCategory::usage,
            "input has no split column; pass --fit-split all to fit on every row");
    fit = subset(table, rows_where(table, [&](const std::string& s) { return s == split; }));
    require(fit.preds.size() > 0, ErrorCategory::empty_input, "no rows in split " + split);
  }
  auto model = fit_ensemble(fit.features, fit.preds.y_true, C);
  model.feature_names = table.feature_names;
  return model;
}

io::PredictionTable ensemble_table(const io::PredictionTable& table, const EnsembleModel& model) {
  require(model.feature_names == table.feature_names, ErrorCategory::invalid_argument,
          "input feature columns do not match the model");
  io::PredictionTable t = table;
  auto scores = predict_proba(model, table.features);
  std::vector<std::uint8_t> y_hat(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) y_hat[i] = scores[i] >= 0.5 ? 1 : 0;
  t.preds.scores = std::move(scores);
  t.preds.y_hat = std::move(y_hat);
  return t;
}

void cmd_ensemble_fit(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("ensemble-fit", o, args);
  const auto table = load_table(run, o);
  run.note("fit_split", o.fit_split);
  run.json("ensemble.json", io::to_json(fit_on_split(table, o.fit_split, o.C)));
  run.finish(out);
}

void cmd_ensemble_predict(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("ensemble-predict", o, args);
  const auto table = load_table(run, o);
  require(!o.model.empty(), ErrorCategory::usage, "--model is required");
  const auto model = io::ensemble_from_json(io::load_json(o.model));
  run.input(o.model);
  const auto t = ensemble_table(table, model);
  run.text("predictions.csv", [&](std::ostream& f) { io::write_predictions(f, t, o.common.group_col); });
  run.finish(out);
}

void cmd_pipeline(const Opts& o, const std::vector<std::string>& args, std::ostream& out) {
  Run run("pipeline", o, args);
  const auto iv = parse_interventions(o.intervention, o.allow_combined);
  const auto seed = resolve_seed(o.common.seed_text);
  run.seed("seed", seed);
  auto meta = metadata_for(o, seed);
  meta.notes["intervention"] = iv.text;
  if (iv.combined) meta.notes["combined_interventions"] = "true";

  // ingest
  io::PredictionTable table;
  if (o.input.empty()) {
    const auto cohort_seed = rng::derive_seed(seed, "cohort");
    const auto split_seed = rng::derive_seed(seed, "split");
    run.seed("cohort", cohort_seed);
    run.seed("split", split_seed);
    table = cohort_table(synth::generate_cohort(cohort_config(o.synth, cohort_seed)), o.synth.fit_fraction,
                         split_seed);
    run.text("cohort.csv", [&](std::ostream& f) { io::write_predictions(f, table, o.common.group_col); });
    meta.notes["source"] = "synth:" + o.synth.preset;
  } else {
    table = load_table(run, o);
    meta.notes["source"] = "input";
  }
  const std::string fit_split = o.fit_split.empty() ? (table.split ? "fit" : "all") : o.fit_split;
  meta.notes["fit_split"] = fit_split;

  // debias: embeddings only, scores come from upstream models
  if (iv.debias) {
    const auto sets = load_sets(run, o.equality_sets.empty() ? std::string() : o.equality_sets);
    EmbeddingMatrix emb;
    if (!o.embeddings.empty()) {
      emb = load_embeddings(o.embeddings);
      run.input(o.embeddings);
    } else {
      synth::EmbeddingPlantConfig pc;
      pc.sets = sets;
      pc.vocab_size = o.synth.vocab_size;
      pc.dim = o.synth.dim;
      pc.noise = o.synth.noise;
      pc.seed = rng::derive_seed(seed, "embeddings");
      run.seed("embeddings", pc.seed);
      emb = synth::generate_embeddings(pc).embeddings;
      run.text("embeddings_input.txt", [&](std::ostream& f) { write_embeddings(emb, f); });
    }
    const auto outcome = run_debias(run, emb, sets, o);
    run.text("debiased_embeddings.txt", [&](std::ostream& f) { write_embeddings(outcome.result.embeddings, f); });
    run.json("subspace.json", io::to_json(outcome.result.subspace));
    run.json("debias_audit.json", outcome.audit);
    meta.notes["debias"] = "embeddings";
  }

  // ensemble
  if (table.features.cols >= 2) {
    auto model = fit_on_split(table, fit_split, o.C);
    run.json("ensemble.json", io::to_json(model));
    table = ensemble_table(table, model);
    meta.notes["classifier"] = "ensemble";
  } else {
    meta.notes["classifier"] = "single";
  }

  const bool has_test = table.split && std::count(table.split->begin(), table.split->end(), "test") > 0;
  const auto eval = has_test ? subset(table, rows_where(table, [](const std::string& s) { return s == "test"; }))
                             : table;
  meta.notes["eval_split"] = has_test ? "test" : "all";
  std::vector<io::PlotRow> plot;

  if (!iv.eo_hard && !iv.eo_soft) {
    write_report(run, "report", o.classifier, build_report(eval.preds, std::nullopt, meta), plot);
  } else {
    const auto fit = fit_split == "all"
                         ? table
                         : subset(table, rows_where(table, [&](const std::string& s) { return s == fit_split; }));
    require(fit.preds.size() > 0, ErrorCategory::empty_input, "no rows in split " + fit_split);
    const auto loss = loss_for(o);
    write_report(run, "report_base", o.classifier, build_report(eval.preds, std::nullopt, meta), plot);

    const auto apply_seed = rng::derive_seed(seed, "eo-apply");
    run.seed("eo-apply", apply_seed);
    Json dp_json;
    GroupRates expected;
    const std::string label = iv.eo_hard ? "eo-hard" : "eo-soft";
    if (iv.eo_hard) {
      const auto dp = fit_eo_hard(fit.preds, loss);
      dp_json = io::to_json(dp);
      expected = expected_rates(dp, confusion_rates(eval.preds, hard_labels(eval.preds)));
    } else {
      const auto dp = fit_eo_soft(fit.preds, loss);
      dp_json = io::to_json(dp);
      expected = expected_rates(dp);
    }
    run.json("derived.json", dp_json);
    const auto derived = derived_table(eval, apply_derived(dp_json, eval.preds, apply_seed));
    run.text("predictions_derived.csv", [&](std::ostream& f) { io::write_predictions(f, derived, o.common.group_col); });
    auto report = build_report(derived.preds, expected, meta);
    report.derived_ranges = gap_ranges(expected);
    write_report(run, "report", label, report, plot);
  }
  run.text("plot.csv", [&](std::ostream& f) { io::write_plot_csv(f, plot); });
  run.finish(out);
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* app, Opts& o) {
  app->add_option("--seed", o.common.seed_text, "Random seed (falls back to EQUIFAIR_SEED, then 0)");
  app->add_option("--out", o.common.out, "Output directory")->capture_default_str();
  app->add_option("--task", o.common.task, "Task name recorded in reports")->capture_default_str();
  app->add_option("--timestamp", o.common.timestamp, "Timestamp recorded in reports (default: SOURCE_DATE_EPOCH or none)");
  app->add_option("--group-col", o.common.group_col, "Sensitive-attribute column")->capture_default_str();
}

void add_synth(CLI::App* app, Opts& o) {
  app->add_option("--preset", o.synth.preset, "Group preset: gender, ethnicity, insurance")->capture_default_str();
  app->add_option("--n", o.synth.n, "Sample count")->capture_default_str();
  app->add_option("--modalities", o.synth.modalities, "Constituent models, each informative on its own segment")
      ->capture_default_str();
  app->add_option("--positive-rate", o.synth.positive_rate, "Positive base rate")->capture_default_str();
  app->add_option("--fit-fraction", o.synth.fit_fraction, "Share of rows labelled split=fit")->capture_default_str();
  app->add_option("--vocab-size", o.synth.vocab_size, "Planted embedding vocabulary size")->capture_default_str();
  app->add_option("--dim", o.synth.dim, "Planted embedding dimension")->capture_default_str();
  app->add_option("--noise", o.synth.noise, "Planted embedding noise scale")->capture_default_str();
}

void add_loss(CLI::App* app, Opts& o) {
  app->add_option("--cost-fp", o.cost_fp, "Cost of a false positive")->capture_default_str();
  app->add_option("--cost-fn", o.cost_fn, "Cost of a false negative")->capture_default_str();
}

void add_debias(CLI::App* app, Opts& o) {
  app->add_option("--embeddings", o.embeddings, "Embedding text file");
  app->add_option("--equality-sets", o.equality_sets, "JSON list of word lists");
  app->add_option("--neutral", o.neutral, "JSON list of words to neutralize (default: all words outside the sets)");
  app->add_option("--k", o.k, "Subspace dimension (default: set size - 1)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-fairness auditing: equalized-odds post-processing, embedding debiasing, ensembling", "equifair"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Opts o;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic cohort (and optionally embeddings)");
  add_common(synth_cmd, o);
  add_synth(synth_cmd, o);
  synth_cmd->add_option("--plant-sets", o.synth.plant_sets, "Equality sets for a planted embedding matrix");

  auto* metrics_cmd = app.add_subcommand("metrics", "Group rates, gaps and AUCs for a prediction file");
  auto* report_cmd = app.add_subcommand("report", "Fairness report, optionally with a derived predictor's expected rates");
  for (auto* c : {metrics_cmd, report_cmd}) {
    add_common(c, o);
    c->add_option("--input", o.input, "Prediction CSV");
    c->add_option("--classifier", o.classifier, "Classifier name for plot rows")->capture_default_str();
  }
  report_cmd->add_option("--derived", o.derived, "Derived predictor JSON");

  auto* fit_cmd = app.add_subcommand("eo-fit", "Fit an equalized-odds derived predictor");
  add_common(fit_cmd, o);
  add_loss(fit_cmd, o);
  fit_cmd->add_option("--input", o.input, "Prediction CSV");
  fit_cmd->add_option("--intervention", o.intervention, "eo-hard or eo-soft")->required();
  fit_cmd->add_option("--fit-split", o.fit_split, "Fit only on rows with this split value");

  auto* apply_cmd = app.add_subcommand("eo-apply", "Apply a derived predictor to a prediction file");
  add_common(apply_cmd, o);
  apply_cmd->add_option("--input", o.input, "Prediction CSV");
  apply_cmd->add_option("--derived", o.derived, "Derived predictor JSON");

  auto* debias_cmd = app.add_subcommand("debias", "Hard-debias an embedding file");
  add_common(debias_cmd, o);
  add_debias(debias_cmd, o);

  auto* efit_cmd = app.add_subcommand("ensemble-fit", "Fit a logistic ensemble over score_<model> columns");
  add_common(efit_cmd, o);
  efit_cmd->add_option("--input", o.input, "Prediction CSV with score_<model> columns");
  efit_cmd->add_option("--fit-split", o.fit_split, "Split value to fit on, or 'all'")->required();
  efit_cmd->add_option("--C", o.C, "Inverse L2 strength")->capture_default_str();

  auto* epred_cmd = app.add_subcommand("ensemble-predict", "Score a prediction file with a fitted ensemble");
  add_common(epred_cmd, o);
  epred_cmd->add_option("--input", o.input, "Prediction CSV with score_<model> columns");
  epred_cmd->add_option("--model", o.model, "Ensemble JSON");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Ingest or synthesize, optionally debias, ensemble, optionally EO, report");
  add_common(pipe_cmd, o);
  add_synth(pipe_cmd, o);
  add_loss(pipe_cmd, o);
  add_debias(pipe_cmd, o);
  pipe_cmd->add_option("--input", o.input, "Prediction CSV (default: synthesize a cohort)");
  pipe_cmd->add_option("--intervention", o.intervention, "none, eo-hard, eo-soft or debias")->capture_default_str();
  pipe_cmd->add_flag("--allow-combined", o.allow_combined, "Permit a comma list of interventions (not a standard configuration)");
  pipe_cmd->add_option("--fit-split", o.fit_split, "Split used to fit the ensemble and EO (default: fit, or all)");
  pipe_cmd->add_option("--C", o.C, "Inverse L2 strength for the ensemble")->capture_default_str();
  pipe_cmd->add_option("--classifier", o.classifier, "Classifier name for base plot rows")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << category_name(ErrorCategory::usage) << ": " << msg << '\n';
    return exit_code(ErrorCategory::usage);
  }

  try {
    if (synth_cmd->parsed()) cmd_synth(o, args, out);
    else if (metrics_cmd->parsed()) cmd_metrics("metrics", o, args, out);
    else if (report_cmd->parsed()) cmd_metrics("report", o, args, out);
    else if (fit_cmd->parsed()) cmd_eo_fit(o, args, out);
    else if (apply_cmd->parsed()) cmd_eo_apply(o, args, out);
    else if (debias_cmd->parsed()) cmd_debias(o, args, out);
    else if (efit_cmd->parsed()) cmd_ensemble_fit(o, args, out);
    else if (epred_cmd->parsed()) cmd_ensemble_predict(o, args, out);
    else if (pipe_cmd->parsed()) cmd_pipeline(o, args, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << category_name(e.category()) << ": " << msg << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 70;
  }
  return 0;
}

}  // namespace equifair::cli
