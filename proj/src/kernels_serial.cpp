#include "equifair/kernels.hpp"
#include "kernel_ops.hpp"

namespace equifair::kernels::serial {

std::vector<ConfusionCounts> count_confusion(std::span<const std::uint32_t> group,
                                             std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_hat,
                                             std::size_t n_groups) {
  std::vector<ConfusionCounts> counts(n_groups);
  for (std::size_t i = 0; i < group.size(); ++i) detail::tally(counts[group[i]], y_true[i], y_hat[i]);
  return counts;
}

std::vector<std::uint8_t> apply_flip(std::span<const std::uint32_t> group,
                                     std::span<const std::uint8_t> y_hat,
                                     std::span<const std::uint64_t> keys,
                                     std::span<const double> p0, std::span<const double> p1,
                                     std::uint64_t seed) {
  std::vector<std::uint8_t> out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
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
  for (std::size_t i = 0; i < group.size(); ++i)
    out[i] = detail::mixture_one(scores[i], mixtures[group[i]], keys[i], seed);
  return out;
}

void normalize_rows(RowMatrix m, std::span<const std::size_t> rows, double eps,
                    std::span<RowStatus> status) {
  for (std::size_t i = 0; i < rows.size(); ++i) status[i] = detail::normalize_one(m.row(rows[i]), eps);
}

void neutralize_rows(RowMatrix m, BasisView basis, std::span<const std::size_t> rows, double eps,
                     std::span<RowStatus> status) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    status[i] = detail::neutralize_one(m.row(rows[i]), basis, eps);
}

}  // namespace equifair::kernels::serial
