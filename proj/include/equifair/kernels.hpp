#pragma once

// Data-parallel inner loops. Each kernel exists twice: a plain serial
// reference (kernels::serial) and an OpenMP version (kernels::omp). The two
// must agree bit-for-bit; tests enforce it and bench/ compares their speed.
// Module code calls kernels::omp, which degrades to a serial loop when the
// build has no OpenMP.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace equifair::kernels {

struct ConfusionCounts {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  std::size_t positives() const noexcept { return tp + fn; }
  std::size_t negatives() const noexcept { return tn + fp; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Predict 1 iff score >= threshold; +inf never predicts positive.
struct ThresholdComponent {
  double threshold = std::numeric_limits<double>::infinity();
  double weight = 1.0;
};

// Per-group randomized threshold: a discrete distribution over components.
using ThresholdMixture = std::vector<ThresholdComponent>;

enum class RowStatus : std::uint8_t { ok, degenerate };

// Row-major matrix view used by the embedding kernels.
struct RowMatrix {
  std::span<double> data;
  std::size_t dim = 0;
  std::size_t rows() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<double> row(std::size_t r) const noexcept { return data.subspan(r * dim, dim); }
};

// `basis` holds k orthonormal vectors of length dim, row-major.
struct BasisView {
  std::span<const double> data;
  std::size_t dim = 0;
  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> vec(std::size_t i) const noexcept { return data.subspan(i * dim, dim); }
};

namespace serial {
std::vector<ConfusionCounts> count_confusion(std::span<const std::uint32_t> group,
                                             std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_hat,
                                             std::size_t n_groups);

// Keeps or flips base labels: P(out=1) = p1[g] if y_hat=1 else p0[g].
std::vector<std::uint8_t> apply_flip(std::span<const std::uint32_t> group,
                                     std::span<const std::uint8_t> y_hat,
                                     std::span<const std::uint64_t> keys,
                                     std::span<const double> p0, std::span<const double> p1,
                                     std::uint64_t seed);

// Single-component mixtures consume no randomness.
std::vector<std::uint8_t> apply_mixture(std::span<const std::uint32_t> group,
                                        std::span<const double> scores,
                                        std::span<const std::uint64_t> keys,
                                        std::span<const ThresholdMixture> mixtures,
                                        std::uint64_t seed);

// Rows with norm below eps are left untouched and marked degenerate.
void normalize_rows(RowMatrix m, std::span<const std::size_t> rows, double eps,
                    std::span<RowStatus> status);

// Removes the basis component from each listed row and renormalizes.
void neutralize_rows(RowMatrix m, BasisView basis, std::span<const std::size_t> rows,
                     double eps, std::span<RowStatus> status);
}  // namespace serial

namespace omp {
std::vector<ConfusionCounts> count_confusion(std::span<const std::uint32_t> group,
                                             std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_hat,
                                             std::size_t n_groups);

std::vector<std::uint8_t> apply_flip(std::span<const std::uint32_t> group,
                                     std::span<const std::uint8_t> y_hat,
                                     std::span<const std::uint64_t> keys,
                                     std::span<const double> p0, std::span<const double> p1,
                                     std::uint64_t seed);

std::vector<std::uint8_t> apply_mixture(std::span<const std::uint32_t> group,
                                        std::span<const double> scores,
                                        std::span<const std::uint64_t> keys,
                                        std::span<const ThresholdMixture> mixtures,
                                        std::uint64_t seed);

void normalize_rows(RowMatrix m, std::span<const std::size_t> rows, double eps,
                    std::span<RowStatus> status);

void neutralize_rows(RowMatrix m, BasisView basis, std::span<const std::size_t> rows,
                     double eps, std::span<RowStatus> status);
}  // namespace omp

// Number of threads the omp kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace equifair::kernels
