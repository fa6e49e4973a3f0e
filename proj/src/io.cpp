#include "equifair/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "equifair/error.hpp"

namespace equifair::io {

namespace {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// Splits the whole document into records; quoted fields may span lines.
std::vector<Record> parse_csv(const std::string& text) {
  std::vector<Record> out;
  Record cur;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  std::size_t line = 1;
  cur.line = 1;
  auto end_field = [&] {
    cur.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = cur.fields.size() == 1 && cur.fields[0].empty();
    if (!blank) out.push_back(std::move(cur));
    cur = Record{};
    cur.line = line + 1;
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        require(!field_started, ErrorCategory::format, "line " + std::to_string(line) + ": stray quote in field");
        quoted = field_started = any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = any = true;
    }
  }
  require(!quoted, ErrorCategory::format, "line " + std::to_string(line) + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  return out;
}

std::string where(std::size_t line, const std::string& what) { return "line " + std::to_string(line) + ": " + what; }

double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  require(ec == std::errc() && ptr == end && std::isfinite(v), ErrorCategory::format,
          where(line, "cannot parse " + column + " value '" + s + "'"));
  return v;
}

std::uint8_t parse_bit(const std::string& s, std::size_t line, const std::string& column) {
  require(s == "0" || s == "1", ErrorCategory::format, where(line, column + " must be 0 or 1, found '" + s + "'"));
  return s == "1" ? 1 : 0;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json threshold_json(double t) { return std::isinf(t) ? Json(nullptr) : Json(t); }

double threshold_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

Json loss_json(const LossSpec& loss) {
  Json j;
  j["cost_fp"] = loss.cost_fp;
  j["cost_fn"] = loss.cost_fn;
  Json pri = Json::object();
  for (const auto& [g, p] : loss.priors) pri[g] = {{"pos_mass", p.pos_mass}, {"neg_mass", p.neg_mass}};
  j["priors"] = pri;
  return j;
}

LossSpec loss_from(const Json& j) {
  LossSpec l;
  l.cost_fp = j.at("cost_fp").get<double>();
  l.cost_fn = j.at("cost_fn").get<double>();
  if (j.contains("priors"))
    for (const auto& [g, p] : j.at("priors").items())
      l.priors[g] = {p.at("pos_mass").get<double>(), p.at("neg_mass").get<double>()};
  return l;
}

Json fit_json(const FitSummary& f) {
  return {{"objective", f.objective},
          {"base_loss", f.base_loss},
          {"unconstrained_loss", f.unconstrained_loss},
          {"n_samples", f.n_samples},
          {"feasible_vertices", f.feasible_vertices}};
}

FitSummary fit_from(const Json& j) {
  FitSummary f;
  f.objective = j.at("objective").get<double>();
  f.base_loss = j.at("base_loss").get<double>();
  f.unconstrained_loss = j.at("unconstrained_loss").get<double>();
  f.n_samples = j.at("n_samples").get<std::size_t>();
  f.feasible_vertices = j.at("feasible_vertices").get<std::size_t>();
  return f;
}

Json point_json(OperatingPoint p) { return {{"fpr", p.fpr}, {"tpr", p.tpr}}; }
OperatingPoint point_from(const Json& j) { return {j.at("fpr").get<double>(), j.at("tpr").get<double>()}; }

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorCategory::format, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> split_csv_record(const std::string& line) {
  auto recs = parse_csv(line);
  if (recs.empty()) return {""};
  return std::move(recs.front().fields);
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

PredictionTable read_predictions(std::istream& in, const CsvOptions& options) {
  std::stringstream buf;
  buf << in.rdbuf();
  auto text = buf.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
  const auto records = parse_csv(text);
  require(!records.empty(), ErrorCategory::empty_input, "prediction file is empty");
  require(records.size() > 1, ErrorCategory::empty_input, "prediction file has a header but no rows");

  const auto& header = records.front().fields;
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c)
    require(col.emplace(header[c], c).second, ErrorCategory::format, "duplicate column: " + header[c]);
  auto need = [&](const std::string& name) {
    auto it = col.find(name);
    require(it != col.end(), ErrorCategory::format, "missing required column: " + name);
    return it->second;
  };
  auto maybe = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = col.find(name);
    if (it == col.end()) return std::nullopt;
    return it->second;
  };
  const auto c_id = need("id");
  const auto c_group = need(options.group_col);
  const auto c_y = need("y_true");
  const auto c_score = maybe("score");
  const auto c_yhat = maybe("y_hat");
  const auto c_split = maybe("split");

  PredictionTable table;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].rfind("score_", 0) == 0 && header[c].size() > 6) {
      feature_cols.push_back(c);
      table.feature_names.push_back(header[c].substr(6));
    }

  const std::size_t n = records.size() - 1;
  std::vector<std::string> ids, groups, split;
  std::vector<std::uint8_t> y_true;
  std::vector<std::optional<double>> scores;
  std::vector<std::optional<std::uint8_t>> y_hat;
  table.features.rows = n;
  table.features.cols = feature_cols.size();
  table.features.values.reserve(n * feature_cols.size());

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    require(rec.fields.size() == header.size(), ErrorCategory::format,
            where(rec.line, "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(rec.fields.size())));
    const auto& f = rec.fields;
    require(!f[c_id].empty(), ErrorCategory::format, where(rec.line, "empty id"));
    ids.push_back(f[c_id]);
    groups.push_back(f[c_group]);
    y_true.push_back(parse_bit(f[c_y], rec.line, "y_true"));
    const bool has_score = c_score && !f[*c_score].empty();
    const bool has_yhat = c_yhat && !f[*c_yhat].empty();
    require(has_score || has_yhat, ErrorCategory::format, where(rec.line, "score and y_hat are both empty"));
    scores.push_back(has_score ? std::optional(parse_double(f[*c_score], rec.line, "score")) : std::nullopt);
    y_hat.push_back(has_yhat ? std::optional(parse_bit(f[*c_yhat], rec.line, "y_hat")) : std::nullopt);
    for (std::size_t c : feature_cols)
      table.features.values.push_back(parse_double(f[c], rec.line, header[c]));
    if (c_split) split.push_back(f[*c_split]);
  }

  auto collect = [&](const auto& column, const char* name) {
    using T = typename std::decay_t<decltype(column)>::value_type::value_type;
    std::size_t present = 0;
    for (const auto& v : column) present += v.has_value();
    if (present == 0) return std::optional<std::vector<T>>{};
    require(present == column.size(), ErrorCategory::format,
            std::string(name) + " is present on some rows but not all");
    std::vector<T> out;
    for (const auto& v : column) out.push_back(*v);
    return std::optional<std::vector<T>>(std::move(out));
  };

  table.preds = make_predictions(std::move(ids), std::move(y_true), groups, options.universe,
                                 collect(scores, "score"), collect(y_hat, "y_hat"));
  if (c_split) table.split = std::move(split);
  return table;
}

PredictionTable load_predictions(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::missing_file, "cannot open predictions: " + path.string());
  return read_predictions(in, options);
}

void write_predictions(std::ostream& out, const PredictionTable& table, const std::string& group_col) {
  const auto& p = table.preds;
  out << "id," << csv_field(group_col) << ",y_true,score,y_hat";
  for (const auto& name : table.feature_names) out << ',' << csv_field("score_" + name);
  if (table.split) out << ",split";
  out << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << csv_field(p.ids[i]) << ',' << csv_field(p.group_name(i)) << ',' << int(p.y_true[i]) << ',';
    if (p.scores) out << format_double((*p.scores)[i]);
    out << ',';
    if (p.y_hat) out << int((*p.y_hat)[i]);
    for (std::size_t c = 0; c < table.features.cols; ++c) out << ',' << format_double(table.features.row(i)[c]);
    if (table.split) out << ',' << csv_field((*table.split)[i]);
    out << '\n';
  }
}

void save_predictions(const std::filesystem::path& path, const PredictionTable& table, const std::string& group_col) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCategory::io, "cannot write predictions: " + path.string());
  write_predictions(out, table, group_col);
  require(out.good(), ErrorCategory::io, "write failed: " + path.string());
}

Json to_json(const GroupRates& rates) {
  Json arr = Json::array();
  for (const auto& g : rates.groups)
    arr.push_back({{"group", g.group},
                   {"n_pos", g.n_pos},
                   {"n_neg", g.n_neg},
                   {"tpr", optional_number(g.tpr)},
                   {"fnr", optional_number(g.fnr)},
                   {"tnr", optional_number(g.tnr)},
                   {"fpr", optional_number(g.fpr)}});
  return arr;
}

Json to_json(const FairnessReport& r) {
  Json j;
  Json notes = Json::object();
  for (const auto& [k, v] : r.metadata.notes) notes[k] = v;
  j["metadata"] = {{"task", r.metadata.task},
                   {"seed", r.metadata.seed},
                   {"timestamp", r.metadata.timestamp ? Json(*r.metadata.timestamp) : Json(nullptr)},
                   {"notes", notes}};
  j["n_samples"] = r.n_samples;
  j["group_rates"] = to_json(r.group_rates);
  j["tpr_range"] = r.tpr_range;
  j["tnr_range"] = r.tnr_range;
  j["auc_roc_overall"] = optional_number(r.auc_roc_overall);
  j["auc_prc_overall"] = optional_number(r.auc_prc_overall);
  Json per = Json::object();
  for (const auto& [g, v] : r.auc_roc_per_group) per[g] = optional_number(v);
  j["auc_roc_per_group"] = per;
  j["derived_rates"] = r.derived_rates ? to_json(*r.derived_rates) : Json(nullptr);
  j["derived_ranges"] = r.derived_ranges ? Json{{"tpr_range", r.derived_ranges->tpr_range},
                                                {"tnr_range", r.derived_ranges->tnr_range}}
                                         : Json(nullptr);
  return j;
}

Json to_json(const HardDerivedPredictor& dp) {
  Json j;
  j["kind"] = "eo-hard";
  j["target"] = point_json(dp.target);
  Json groups = Json::array();
  for (const auto& g : dp.groups)
    groups.push_back({{"group", g.group},
                      {"p0", g.p0},
                      {"p1", g.p1},
                      {"base", point_json(g.base)},
                      {"prior", {{"pos_mass", g.prior.pos_mass}, {"neg_mass", g.prior.neg_mass}}},
                      {"n_pos", g.n_pos},
                      {"n_neg", g.n_neg}});
  j["groups"] = groups;
  j["loss"] = loss_json(dp.loss);
  j["fit"] = fit_json(dp.fit);
  return j;
}

Json to_json(const SoftDerivedPredictor& dp) {
  Json j;
  j["kind"] = "eo-soft";
  j["target"] = point_json(dp.target);
  Json groups = Json::array();
  for (const auto& g : dp.groups) {
    Json mix = Json::array();
    for (const auto& c : g.mixture)
      mix.push_back({{"threshold", threshold_json(c.threshold)}, {"weight", c.weight}, {"point", point_json(c.point)}});
    groups.push_back({{"group", g.group},
                      {"mixture", mix},
                      {"prior", {{"pos_mass", g.prior.pos_mass}, {"neg_mass", g.prior.neg_mass}}},
                      {"n_pos", g.n_pos},
                      {"n_neg", g.n_neg},
                      {"hull_vertices", g.hull_vertices}});
  }
  j["groups"] = groups;
  j["loss"] = loss_json(dp.loss);
  j["fit"] = fit_json(dp.fit);
  return j;
}

HardDerivedPredictor hard_predictor_from_json(const Json& j) {
  return guarded("hard derived predictor", [&] {
    require(j.at("kind") == "eo-hard", ErrorCategory::format, "not a hard derived predictor");
    HardDerivedPredictor dp;
    dp.target = point_from(j.at("target"));
    for (const auto& g : j.at("groups")) {
      HardGroupParams p;
      p.group = g.at("group").get<std::string>();
      p.p0 = g.at("p0").get<double>();
      p.p1 = g.at("p1").get<double>();
      require(p.p0 >= 0.0 && p.p0 <= 1.0 && p.p1 >= 0.0 && p.p1 <= 1.0, ErrorCategory::format,
              "p0/p1 outside [0,1] for group " + p.group);
      p.base = point_from(g.at("base"));
      p.prior = {g.at("prior").at("pos_mass").get<double>(), g.at("prior").at("neg_mass").get<double>()};
      p.n_pos = g.at("n_pos").get<std::size_t>();
      p.n_neg = g.at("n_neg").get<std::size_t>();
      dp.groups.push_back(std::move(p));
    }
    dp.loss = loss_from(j.at("loss"));
    dp.fit = fit_from(j.at("fit"));
    return dp;
  });
}

SoftDerivedPredictor soft_predictor_from_json(const Json& j) {
  return guarded("soft derived predictor", [&] {
    require(j.at("kind") == "eo-soft", ErrorCategory::format, "not a soft derived predictor");
    SoftDerivedPredictor dp;
    dp.target = point_from(j.at("target"));
    for (const auto& g : j.at("groups")) {
      SoftGroupParams p;
      p.group = g.at("group").get<std::string>();
      double total = 0.0;
      for (const auto& c : g.at("mixture")) {
        p.mixture.push_back({threshold_from(c.at("threshold")), c.at("weight").get<double>(), point_from(c.at("point"))});
        total += p.mixture.back().weight;
      }
      require(std::abs(total - 1.0) <= 1e-9, ErrorCategory::format, "mixture weights must sum to 1 for " + p.group);
      p.prior = {g.at("prior").at("pos_mass").get<double>(), g.at("prior").at("neg_mass").get<double>()};
      p.n_pos = g.at("n_pos").get<std::size_t>();
      p.n_neg = g.at("n_neg").get<std::size_t>();
      p.hull_vertices = g.at("hull_vertices").get<std::size_t>();
      dp.groups.push_back(std::move(p));
    }
    dp.loss = loss_from(j.at("loss"));
    dp.fit = fit_from(j.at("fit"));
    return dp;
  });
}

Json to_json(const EnsembleModel& m) {
  Json j;
  j["kind"] = "ensemble";
  j["feature_names"] = m.feature_names;
  j["weights"] = m.weights;
  j["intercept"] = m.intercept;
  j["C"] = m.C;
  j["diagnostics"] = {{"iterations", m.diagnostics.iterations},
                      {"gradient_norm", m.diagnostics.gradient_norm},
                      {"converged", m.diagnostics.converged},
                      {"loss_trace", m.diagnostics.loss_trace}};
  return j;
}

EnsembleModel ensemble_from_json(const Json& j) {
  return guarded("ensemble model", [&] {
    require(j.at("kind") == "ensemble", ErrorCategory::format, "not an ensemble model");
    EnsembleModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    require(m.weights.size() == m.feature_names.size(), ErrorCategory::format,
            "weights and feature names differ in length");
    m.intercept = j.at("intercept").get<double>();
    m.C = j.at("C").get<double>();
    const auto& d = j.at("diagnostics");
    m.diagnostics.iterations = d.at("iterations").get<int>();
    m.diagnostics.gradient_norm = d.at("gradient_norm").get<double>();
    m.diagnostics.converged = d.at("converged").get<bool>();
    m.diagnostics.loss_trace = d.at("loss_trace").get<std::vector<double>>();
    return m;
  });
}

Json to_json(const BiasSubspace& s) {
  Json basis = Json::array();
  for (std::size_t i = 0; i < s.k(); ++i) {
    const auto v = s.direction(i);
    basis.push_back(std::vector<double>(v.begin(), v.end()));
  }
  return {{"dim", s.dim}, {"basis", basis}, {"explained_variance", s.explained_variance}};
}

BiasSubspace subspace_from_json(const Json& j) {
  return guarded("bias subspace", [&] {
    BiasSubspace s;
    s.dim = j.at("dim").get<std::size_t>();
    for (const auto& row : j.at("basis")) {
      auto v = row.get<std::vector<double>>();
      require(v.size() == s.dim, ErrorCategory::format, "basis vector has the wrong dimension");
      s.basis.insert(s.basis.end(), v.begin(), v.end());
    }
    s.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    return s;
  });
}

Json to_json(const SkipReport& s) {
  return {{"missing_tokens", s.missing_tokens},
          {"dropped_sets", s.dropped_sets},
          {"degenerate_words", s.degenerate_words},
          {"degenerate_sets", s.degenerate_sets}};
}

Json to_json(const MultilabelAuc& a) {
  Json per = Json::array();
  for (const auto& v : a.per_label) per.push_back(optional_number(v));
  return {{"macro", a.macro}, {"micro", a.micro}, {"per_label", per}, {"warnings", a.warnings}};
}

Json to_json(const std::vector<synth::AnalyticRates>& rates) {
  Json arr = Json::array();
  for (const auto& r : rates)
    arr.push_back({{"modality", r.modality}, {"group", r.group}, {"tpr", r.tpr}, {"fpr", r.fpr}});
  return arr;
}

EqualitySets equality_sets_from_json(const Json& j) {
  return guarded("equality sets", [&] {
    require(j.is_array(), ErrorCategory::format, "equality sets must be a JSON list of lists");
    EqualitySets sets;
    for (const auto& s : j) {
      auto words = s.get<std::vector<std::string>>();
      require(words.size() >= 2, ErrorCategory::format, "equality set with fewer than two words");
      sets.push_back(std::move(words));
    }
    return sets;
  });
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::missing_file, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCategory::format, path.string() + ": " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCategory::io, "cannot write " + path.string());
  out << dump(j);
  require(out.good(), ErrorCategory::io, "write failed: " + path.string());
}

std::vector<PlotRow> plot_rows(const std::string& classifier, const FairnessReport& r) {
  std::vector<PlotRow> rows;
  for (const auto& g : r.group_rates.groups) {
    if (g.tpr) rows.push_back({classifier, g.group, "tpr", *g.tpr});
    if (g.tnr) rows.push_back({classifier, g.group, "tnr", *g.tnr});
    auto it = r.auc_roc_per_group.find(g.group);
    if (it != r.auc_roc_per_group.end() && it->second) rows.push_back({classifier, g.group, "auc_roc", *it->second});
  }
  rows.push_back({classifier, "ALL", "tpr_range", r.tpr_range});
  rows.push_back({classifier, "ALL", "tnr_range", r.tnr_range});
  if (r.auc_roc_overall) rows.push_back({classifier, "ALL", "auc_roc", *r.auc_roc_overall});
  if (r.auc_prc_overall) rows.push_back({classifier, "ALL", "auc_prc", *r.auc_prc_overall});
  return rows;
}

void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows) {
  out << "classifier,group,metric,value\n";
  for (const auto& r : rows)
    out << csv_field(r.classifier) << ',' << csv_field(r.group) << ',' << r.metric << ',' << format_double(r.value)
        << '\n';
}

std::string sha256_hex_bytes(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorCategory::io,
          "sha256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::missing_file, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex_bytes(buf.str());
}

}  // namespace equifair::io
