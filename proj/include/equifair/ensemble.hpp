#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace equifair {

// Row-major sample x feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return std::span(values).subspan(i * cols, cols); }
};

struct EnsembleDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::vector<double> loss_trace;  // objective after each accepted step, starting at the zero model
};

struct EnsembleModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double intercept = 0.0;
  double C = 1.0;
  EnsembleDiagnostics diagnostics;
};

struct EnsembleFitOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
};

// Minimizes mean logistic loss + |w|^2 / (2 C n); intercept unpenalized.
// Starts from zero, damped Newton with gradient-descent fallback.
EnsembleModel fit_ensemble(const FeatureMatrix& features, std::span<const std::uint8_t> y_true, double C = 1.0,
                           const EnsembleFitOptions& options = {});

std::vector<double> predict_proba(const EnsembleModel& model, const FeatureMatrix& features);
double predict_proba(const EnsembleModel& model, std::span<const double> features);

// Objective and gradient over the packed parameters (w_1..w_m, intercept).
double ensemble_objective(std::span<const double> params, const FeatureMatrix& features,
                          std::span<const std::uint8_t> y_true, double C);
std::vector<double> ensemble_gradient(std::span<const double> params, const FeatureMatrix& features,
                                      std::span<const std::uint8_t> y_true, double C);

}  // namespace equifair
