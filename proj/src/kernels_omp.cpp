#include "equifair/kernels.hpp"
#include "kernel_ops.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace equifair::kernels {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

using index_t = std::int64_t;

std::vector<ConfusionCounts> count_confusion(std::span<const std::uint32_t> group,
                                             std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_hat,
                                             std::size_t n_groups) {
  std::vector<ConfusionCounts> counts(n_groups);
  const auto n = static_cast<index_t>(group.size());
#pragma omp parallel
  {
    std::vector<ConfusionCounts> local(n_groups);
#pragma omp for schedule(static) nowait
    for (index_t i = 0; i < n; ++i) detail::tally(local[group[i]], y_true[i], y_hat[i]);
    // integer sums: merge order does not matter
#pragma omp critical(equifair_confusion_merge)
    for (std::size_t g = 0; g < n_groups; ++g) {
      counts[g].tp += local[g].tp;
      counts[g].fn += local[g].fn;
      counts[g].tn += local[g].tn;
      counts[g].fp += local[g].fp;
    }
  }
  return counts;
}

std::vector<std::uint8_t> apply_flip(std::span<const std::uint32_t> group,
                                     std::span<const std::uint8_t> y_hat,
                                     std::span<const std::uint64_t> keys,
                                     std::span<const double> p0, std::span<const double> p1,
                                     std::uint64_t seed) {
  std::vector<std::uint8_t> out(group.size());
  const auto n = static_cast<index_t>(group.size());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < n; ++i) {
    const auto g = group[i];
    out[i] = detail::flip_one(y_hat[i], p0[g], p1[g], keys[i], seed);
  }
  return out;
}

std::vector<std::uint8_t> apply_mixture(std::span<const std::uint32_t> group,
                                        std::span<const double> scores,
                                        std::span<const std::uint64_t> keys,
                                        std::span<const ThresholdMixture> mixtures,
                                        std::uint64_t seed) {
  std::vector<std::uint8_t> out(group.size());
  const auto n = static_cast<index_t>(group.size());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < n; ++i) out[i] = detail::mixture_one(scores[i], mixtures[group[i]], keys[i], seed);
  return out;
}

void normalize_rows(RowMatrix m, std::span<const std::size_t> rows, double eps,
                    std::span<RowStatus> status) {
  const auto n = static_cast<index_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < n; ++i) status[i] = detail::normalize_one(m.row(rows[i]), eps);
}

void neutralize_rows(RowMatrix m, BasisView basis, std::span<const std::size_t> rows, double eps,
                     std::span<RowStatus> status) {
  const auto n = static_cast<index_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (index_t i = 0; i < n; ++i) status[i] = detail::neutralize_one(m.row(rows[i]), basis, eps);
}

}  // namespace omp
}  // namespace equifair::kernels
