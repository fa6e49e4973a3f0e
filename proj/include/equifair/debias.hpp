#pragma once

// Hard debiasing of word embeddings: find a bias subspace from equality sets,
// strip it from neutral words (neutralize), and re-center each equality set so
// its members differ only inside the subspace (equalize).

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equifair/embedding.hpp"
#include "equifair/kernels.hpp"

namespace equifair {

// Tuples of words whose differences define the subspace, e.g. {"he", "she"}.
using EqualitySets = std::vector<std::vector<std::string>>;

// Orthonormal basis, one row per direction.
struct BiasSubspace {
  std::size_t dim = 0;
  std::vector<double> basis;               // k * dim, row-major
  std::vector<double> explained_variance;  // fraction per direction

  std::size_t k() const noexcept { return dim == 0 ? 0 : basis.size() / dim; }
  std::span<const double> direction(std::size_t i) const { return std::span(basis).subspan(i * dim, dim); }
  kernels::BasisView view() const noexcept { return {basis, dim}; }
};

struct SkipReport {
  std::vector<std::string> missing_tokens;
  std::vector<std::size_t> dropped_sets;     // fewer than two resolvable members
  std::vector<std::string> degenerate_words; // entirely inside the subspace
  std::vector<std::size_t> degenerate_sets;  // a member with no in-subspace offset

  bool empty() const noexcept {
    return missing_tokens.empty() && dropped_sets.empty() && degenerate_words.empty() && degenerate_sets.empty();
  }
};

inline constexpr double kDegenerateNorm = 1e-8;

// Resolves each set against the vocabulary; unresolvable tokens and sets with
// fewer than two members are reported in `skips` (when given).
std::vector<std::vector<std::size_t>> resolve_sets(const EmbeddingMatrix& emb, const EqualitySets& sets,
                                                   SkipReport* skips = nullptr);

// Top-k principal directions of the per-set centered, unit-normalized
// members. Each direction's sign makes its largest-magnitude entry positive.
BiasSubspace identify_subspace(const EmbeddingMatrix& emb, const EqualitySets& sets, std::size_t k,
                               SkipReport* skips = nullptr);

std::vector<double> project(std::span<const double> w, const BiasSubspace& subspace);

// (w - w_B) / |w - w_B|. Throws Error(degenerate) naming `token` when the
// residual norm is below eps.
std::vector<double> neutralize(std::span<const double> w, const BiasSubspace& subspace,
                               std::string_view token = {}, double eps = kDegenerateNorm);

// nu + sqrt(1 - |nu|^2) (w_B - mu_B) / |w_B - mu_B| with nu = mu - mu_B.
std::vector<std::vector<double>> equalize(const std::vector<std::vector<double>>& members,
                                          const BiasSubspace& subspace, double eps = kDegenerateNorm);

struct NeutralPolicy {
  enum class Kind { all_except_sets, listed, none };
  Kind kind = Kind::all_except_sets;
  std::vector<std::string> tokens;  // for Kind::listed

  static NeutralPolicy all_except_sets() { return {}; }
  static NeutralPolicy listed(std::vector<std::string> t) { return {Kind::listed, std::move(t)}; }
  static NeutralPolicy none() { return {Kind::none, {}}; }
};

struct DebiasResult {
  EmbeddingMatrix embeddings;
  BiasSubspace subspace;
  SkipReport skipped;
  std::size_t neutralized = 0;
  std::size_t equalized_sets = 0;
};

// Sets are equalized in order; a word shared by several sets keeps the value
// from the last set that contains it.
DebiasResult hard_debias(const EmbeddingMatrix& emb, const EqualitySets& sets, const NeutralPolicy& policy,
                         std::size_t k);
DebiasResult hard_debias(const EmbeddingMatrix& emb, const EqualitySets& sets, const NeutralPolicy& policy,
                         const BiasSubspace& subspace);

}  // namespace equifair
