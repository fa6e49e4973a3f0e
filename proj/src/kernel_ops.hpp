#pragma once

// Per-element bodies shared by the serial and OpenMP kernels and by the
// single-vector debias operations, so every path produces identical bits.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "equifair/kernels.hpp"
#include "equifair/rng.hpp"

namespace equifair::detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

// w <- w - sum_i <w, b_i> b_i
inline void remove_component(std::span<double> w, const kernels::BasisView& basis) noexcept {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto b = basis.vec(i);
    const double c = dot(w, b);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= c * b[j];
  }
}

// Two Gram-Schmidt passes keep the residual orthogonal to round-off.
inline kernels::RowStatus neutralize_one(std::span<double> w, const kernels::BasisView& basis,
                                         double eps) {
  std::vector<double> r(w.begin(), w.end());
  remove_component(r, basis);
  remove_component(r, basis);
  const double n = norm(r);
  if (!(n >= eps)) return kernels::RowStatus::degenerate;
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = r[j] / n;
  return kernels::RowStatus::ok;
}

inline kernels::RowStatus normalize_one(std::span<double> w, double eps) noexcept {
  const double n = norm(w);
  if (!(n >= eps)) return kernels::RowStatus::degenerate;
  for (double& v : w) v /= n;
  return kernels::RowStatus::ok;
}

inline std::uint8_t flip_one(std::uint8_t base, double p0, double p1, std::uint64_t key,
                             std::uint64_t seed) noexcept {
  const double p = base ? p1 : p0;
  return rng::uniform(seed, key, 0) < p ? 1 : 0;
}

inline std::uint8_t mixture_one(double score, const kernels::ThresholdMixture& mix, std::uint64_t key,
                                std::uint64_t seed) noexcept {
  if (mix.empty()) return 0;
  std::size_t pick = 0;
  if (mix.size() > 1) {
    const double u = rng::uniform(seed, key, 1);
    double acc = 0.0;
    pick = mix.size() - 1;
    for (std::size_t k = 0; k < mix.size(); ++k) {
      acc += mix[k].weight;
      if (u < acc) {
        pick = k;
        break;
      }
    }
  }
  return score >= mix[pick].threshold ? 1 : 0;
}

inline void tally(kernels::ConfusionCounts& c, std::uint8_t truth, std::uint8_t pred) noexcept {
  if (truth) {
    if (pred) ++c.tp; else ++c.fn;
  } else {
    if (pred) ++c.fp; else ++c.tn;
  }
}

}  // namespace equifair::detail
