#include "equifair/ensemble.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "equifair/error.hpp"

namespace equifair {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear(std::span<const double> params, std::span<const double> x) {
  const std::size_t m = x.size();
  double z = params[m];
  for (std::size_t j = 0; j < m; ++j) z += params[j] * x[j];
  return z;
}

void check_problem(const FeatureMatrix& X, std::span<const std::uint8_t> y, double C) {
  require(X.rows > 0, ErrorCategory::empty_input, "no samples to fit");
  require(X.cols > 0 && X.values.size() == X.rows * X.cols, ErrorCategory::invalid_argument,
          "feature matrix shape mismatch");
  require(y.size() == X.rows, ErrorCategory::invalid_argument, "labels and features differ in length");
  require(std::isfinite(C) && C > 0.0, ErrorCategory::invalid_argument, "C must be positive");
}

Eigen::VectorXd gradient_of(const Eigen::VectorXd& theta, const FeatureMatrix& X, std::span<const std::uint8_t> y,
                            double C) {
  const auto g = ensemble_gradient(std::span<const double>(theta.data(), theta.size()), X, y, C);
  return Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
}

double objective_of(const Eigen::VectorXd& theta, const FeatureMatrix& X, std::span<const std::uint8_t> y, double C) {
  return ensemble_objective(std::span<const double>(theta.data(), theta.size()), X, y, C);
}

Eigen::MatrixXd hessian_of(const Eigen::VectorXd& theta, const FeatureMatrix& X, double C) {
  const auto p = static_cast<Eigen::Index>(X.cols + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xt(p);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) xt(static_cast<Eigen::Index>(j)) = x[j];
    xt(p - 1) = 1.0;
    const double s = sigmoid(linear(std::span<const double>(theta.data(), theta.size()), x));
    H.noalias() += s * (1.0 - s) * xt * xt.transpose();
  }
  const double n = static_cast<double>(X.rows);
  H /= n;
  for (Eigen::Index j = 0; j + 1 < p; ++j) H(j, j) += 1.0 / (C * n);
  return H;
}

}  // namespace

double ensemble_objective(std::span<const double> params, const FeatureMatrix& X, std::span<const std::uint8_t> y,
                          double C) {
  check_problem(X, y, C);
  require(params.size() == X.cols + 1, ErrorCategory::invalid_argument, "parameter count mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double z = linear(params, X.row(i));
    loss += softplus(z) - (y[i] ? z : 0.0);
  }
  const double n = static_cast<double>(X.rows);
  double penalty = 0.0;
  for (std::size_t j = 0; j < X.cols; ++j) penalty += params[j] * params[j];
  return loss / n + penalty / (2.0 * C * n);
}

std::vector<double> ensemble_gradient(std::span<const double> params, const FeatureMatrix& X,
                                      std::span<const std::uint8_t> y, double C) {
  check_problem(X, y, C);
  require(params.size() == X.cols + 1, ErrorCategory::invalid_argument, "parameter count mismatch");
  std::vector<double> g(X.cols + 1, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    const double r = sigmoid(linear(params, x)) - (y[i] ? 1.0 : 0.0);
    for (std::size_t j = 0; j < X.cols; ++j) g[j] += r * x[j];
    g[X.cols] += r;
  }
  const double n = static_cast<double>(X.rows);
  for (double& v : g) v /= n;
  for (std::size_t j = 0; j < X.cols; ++j) g[j] += params[j] / (C * n);
  return g;
}

EnsembleModel fit_ensemble(const FeatureMatrix& X, std::span<const std::uint8_t> y, double C,
                           const EnsembleFitOptions& options) {
  check_problem(X, y, C);
  for (double v : X.values)
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCategory::invalid_argument,
            "ensemble features must be probabilities in [0,1]");
  std::size_t pos = 0;
  for (auto v : y) {
    require(v <= 1, ErrorCategory::invalid_argument, "labels must be 0 or 1");
    pos += v;
  }
  require(pos > 0 && pos < y.size(), ErrorCategory::invalid_argument, "ensemble fit needs both classes");

  const auto p = static_cast<Eigen::Index>(X.cols + 1);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double f = objective_of(theta, X, y, C);
  Eigen::VectorXd g = gradient_of(theta, X, y, C);

  EnsembleModel model;
  model.C = C;
  model.diagnostics.loss_trace.push_back(f);
  int it = 0;
  for (; it < options.max_iterations && g.norm() > options.tolerance; ++it) {
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian_of(theta, X, C));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(-g);
    if (step.size() != p || !step.allFinite() || step.dot(g) >= 0.0) step = -g;

    // Armijo backtracking; the descent direction guarantees acceptance for a
    // small enough step unless f is already flat to round-off.
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Eigen::VectorXd cand = theta + t * step;
      const double fc = objective_of(cand, X, y, C);
      if (fc <= f + 1e-4 * t * step.dot(g)) {
        theta = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    g = gradient_of(theta, X, y, C);
    model.diagnostics.loss_trace.push_back(f);
  }

  model.weights.assign(theta.data(), theta.data() + X.cols);
  model.intercept = theta(p - 1);
  model.diagnostics.iterations = it;
  model.diagnostics.gradient_norm = g.norm();
  model.diagnostics.converged = g.norm() <= options.tolerance;
  for (double w : model.weights) require(std::isfinite(w), ErrorCategory::degenerate, "non-finite ensemble weight");
  return model;
}

double predict_proba(const EnsembleModel& model, std::span<const double> features) {
  require(features.size() == model.weights.size(), ErrorCategory::invalid_argument,
          "feature arity " + std::to_string(features.size()) + " does not match model arity " +
              std::to_string(model.weights.size()));
  double z = model.intercept;
  for (std::size_t j = 0; j < features.size(); ++j) {
    require(std::isfinite(features[j]), ErrorCategory::invalid_argument, "non-finite feature");
    z += model.weights[j] * features[j];
  }
  return std::clamp(sigmoid(z), std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

std::vector<double> predict_proba(const EnsembleModel& model, const FeatureMatrix& features) {
  require(features.cols == model.weights.size(), ErrorCategory::invalid_argument,
          "feature arity does not match the model");
  std::vector<double> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) out[i] = predict_proba(model, features.row(i));
  return out;
}

}  // namespace equifair
