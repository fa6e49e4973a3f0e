#pragma once

// File formats: the prediction CSV, JSON documents for every fitted artifact,
// the tidy plot CSV and SHA-256 digests for run manifests.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "equifair/debias.hpp"
#include "equifair/ensemble.hpp"
#include "equifair/eo_postprocess.hpp"
#include "equifair/metrics.hpp"
#include "equifair/predictions.hpp"
#include "equifair/synth.hpp"

namespace equifair::io {

using Json = nlohmann::ordered_json;

// A parsed prediction CSV. Columns named score_<model> become ensemble
// features; a `split` column, when present, is kept per row.
struct PredictionTable {
  LabeledPredictions preds;
  std::vector<std::string> feature_names;  // without the score_ prefix
  FeatureMatrix features;
  std::optional<std::vector<std::string>> split;
};

struct CsvOptions {
  std::string group_col = "group";
  std::vector<std::string> universe;  // empty: inferred from the data
};

// Header required; `id`, the group column and `y_true` are mandatory.
// `score` and `y_hat` may be empty per row but not both.
PredictionTable read_predictions(std::istream& in, const CsvOptions& options = {});
PredictionTable load_predictions(const std::filesystem::path& path, const CsvOptions& options = {});

// Rows keep their order. Features are written as score_<name> columns.
void write_predictions(std::ostream& out, const PredictionTable& table, const std::string& group_col = "group");
void save_predictions(const std::filesystem::path& path, const PredictionTable& table,
                      const std::string& group_col = "group");

// RFC 4180 record splitting; exposed for tests.
std::vector<std::string> split_csv_record(const std::string& line);
std::string csv_field(const std::string& value);

Json to_json(const GroupRates& rates);
Json to_json(const FairnessReport& report);
Json to_json(const HardDerivedPredictor& dp);
Json to_json(const SoftDerivedPredictor& dp);
Json to_json(const EnsembleModel& model);
Json to_json(const BiasSubspace& subspace);
Json to_json(const SkipReport& skips);
Json to_json(const MultilabelAuc& auc);
Json to_json(const std::vector<synth::AnalyticRates>& rates);

HardDerivedPredictor hard_predictor_from_json(const Json& j);
SoftDerivedPredictor soft_predictor_from_json(const Json& j);
EnsembleModel ensemble_from_json(const Json& j);
BiasSubspace subspace_from_json(const Json& j);
EqualitySets equality_sets_from_json(const Json& j);

// Parse errors map to Error(format); unopenable files to Error(missing_file).
Json load_json(const std::filesystem::path& path);
// Two-space indent, trailing newline.
void save_json(const std::filesystem::path& path, const Json& j);
std::string dump(const Json& j);

// Tidy rows (classifier, group, metric, value). Group "ALL" carries the
// overall and range metrics.
struct PlotRow {
  std::string classifier;
  std::string group;
  std::string metric;
  double value;
};
std::vector<PlotRow> plot_rows(const std::string& classifier, const FairnessReport& report);
void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows);

std::string sha256_hex(const std::filesystem::path& path);
std::string sha256_hex_bytes(std::string_view bytes);

}  // namespace equifair::io
