#include "equifair/debias.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "equifair/error.hpp"
#include "kernel_ops.hpp"

namespace equifair {

namespace {

std::vector<double> unit(std::span<const double> w) {
  std::vector<double> out(w.begin(), w.end());
  const double n = detail::norm(out);
  if (n > 0.0)
    for (double& v : out) v /= n;
  return out;
}

// Coefficients of w in the basis.
std::vector<double> coefficients(std::span<const double> w, const BiasSubspace& sub) {
  std::vector<double> c(sub.k());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = detail::dot(w, sub.direction(i));
  return c;
}

std::vector<double> combine(const std::vector<double>& c, const BiasSubspace& sub) {
  std::vector<double> out(sub.dim, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto b = sub.direction(i);
    for (std::size_t j = 0; j < sub.dim; ++j) out[j] += c[i] * b[j];
  }
  return out;
}

void check_dim(std::span<const double> w, const BiasSubspace& sub) {
  require(w.size() == sub.dim, ErrorCategory::invalid_argument,
          "vector dimension " + std::to_string(w.size()) + " does not match subspace dimension " +
              std::to_string(sub.dim));
}

DebiasResult apply_debias(const EmbeddingMatrix& emb, const EqualitySets& sets, const NeutralPolicy& policy,
                          const BiasSubspace& sub, SkipReport skips,
                          const std::vector<std::vector<std::size_t>>& resolved_sets) {
  require(sub.dim == emb.dim(), ErrorCategory::invalid_argument, "subspace and embedding dimensions differ");
  std::vector<double> values(emb.values().begin(), emb.values().end());
  kernels::RowMatrix m{values, emb.dim()};

  std::unordered_set<std::size_t> set_rows;
  for (const auto& set : sets)
    for (const auto& tok : set)
      if (auto r = emb.find(tok)) set_rows.insert(*r);

  std::vector<std::size_t> neutral;
  switch (policy.kind) {
    case NeutralPolicy::Kind::all_except_sets:
      for (std::size_t r = 0; r < emb.size(); ++r)
        if (!set_rows.count(r)) neutral.push_back(r);
      break;
    case NeutralPolicy::Kind::listed:
      for (const auto& tok : policy.tokens) {
        if (auto r = emb.find(tok)) neutral.push_back(*r);
        else skips.missing_tokens.push_back(tok);
      }
      std::sort(neutral.begin(), neutral.end());
      neutral.erase(std::unique(neutral.begin(), neutral.end()), neutral.end());
      break;
    case NeutralPolicy::Kind::none:
      break;
  }

  std::vector<kernels::RowStatus> status(neutral.size());
  kernels::omp::neutralize_rows(m, sub.view(), neutral, kDegenerateNorm, status);

  DebiasResult out;
  for (std::size_t i = 0; i < neutral.size(); ++i) {
    if (status[i] == kernels::RowStatus::ok) ++out.neutralized;
    else skips.degenerate_words.push_back(emb.token(neutral[i]));
  }

  for (std::size_t s = 0; s < resolved_sets.size(); ++s) {
    const auto& rows = resolved_sets[s];
    if (rows.size() < 2) continue;
    std::vector<std::vector<double>> members;
    for (std::size_t r : rows) members.push_back(unit(m.row(r)));
    try {
      const auto eq = equalize(members, sub);
      for (std::size_t i = 0; i < rows.size(); ++i) std::copy(eq[i].begin(), eq[i].end(), m.row(rows[i]).begin());
      ++out.equalized_sets;
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::degenerate) throw;
      skips.degenerate_sets.push_back(s);
    }
  }

  out.embeddings = EmbeddingMatrix(emb.vocabulary(), emb.dim(), std::move(values));
  out.subspace = sub;
  out.skipped = std::move(skips);
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> resolve_sets(const EmbeddingMatrix& emb, const EqualitySets& sets,
                                                   SkipReport* skips) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<std::size_t> rows;
    for (const auto& tok : sets[s]) {
      if (auto r = emb.find(tok)) {
        if (std::find(rows.begin(), rows.end(), *r) == rows.end()) rows.push_back(*r);
      } else if (skips &&
                 std::find(skips->missing_tokens.begin(), skips->missing_tokens.end(), tok) ==
                     skips->missing_tokens.end()) {
        skips->missing_tokens.push_back(tok);
      }
    }
    if (rows.size() < 2) {
      if (skips) skips->dropped_sets.push_back(s);
      rows.clear();
    }
    out.push_back(std::move(rows));
  }
  return out;
}

BiasSubspace identify_subspace(const EmbeddingMatrix& emb, const EqualitySets& sets, std::size_t k,
                               SkipReport* skips) {
  const std::size_t d = emb.dim();
  require(k >= 1 && k <= d, ErrorCategory::invalid_argument, "subspace dimension k must be in [1, dim]");
  const auto resolved = resolve_sets(emb, sets, skips);

  std::vector<std::vector<double>> residuals;
  for (const auto& rows : resolved) {
    if (rows.size() < 2) continue;
    std::vector<std::vector<double>> members;
    std::vector<double> mean(d, 0.0);
    for (std::size_t r : rows) {
      members.push_back(unit(emb.row(r)));
      for (std::size_t j = 0; j < d; ++j) mean[j] += members.back()[j];
    }
    for (double& v : mean) v /= static_cast<double>(rows.size());
    for (auto& w : members) {
      for (std::size_t j = 0; j < d; ++j) w[j] -= mean[j];
      residuals.push_back(std::move(w));
    }
  }
  require(!residuals.empty(), ErrorCategory::invalid_argument, "no equality set resolves to two or more words");

  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(residuals.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < residuals.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) stacked(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = residuals[i][j];

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  require(sv.size() > 0 && sv(0) > 1e-12, ErrorCategory::degenerate,
          "all equality-set residuals are zero; no bias direction");
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * sv(0)) ++rank;
  require(static_cast<Eigen::Index>(k) <= rank, ErrorCategory::degenerate,
          "insufficient rank: requested k=" + std::to_string(k) + " but residuals have rank " + std::to_string(rank));

  BiasSubspace sub;
  sub.dim = d;
  const double total = sv.squaredNorm();
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(i));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    v.normalize();
    sub.basis.insert(sub.basis.end(), v.data(), v.data() + v.size());
    sub.explained_variance.push_back(sv(static_cast<Eigen::Index>(i)) * sv(static_cast<Eigen::Index>(i)) / total);
  }
  return sub;
}

std::vector<double> project(std::span<const double> w, const BiasSubspace& subspace) {
  check_dim(w, subspace);
  return combine(coefficients(w, subspace), subspace);
}

std::vector<double> neutralize(std::span<const double> w, const BiasSubspace& subspace, std::string_view token,
                               double eps) {
  check_dim(w, subspace);
  std::vector<double> out(w.begin(), w.end());
  if (detail::neutralize_one(out, subspace.view(), eps) != kernels::RowStatus::ok)
    fail(ErrorCategory::degenerate, "word lies inside the bias subspace: " +
                                        (token.empty() ? std::string("<unnamed>") : std::string(token)));
  return out;
}

std::vector<std::vector<double>> equalize(const std::vector<std::vector<double>>& members,
                                          const BiasSubspace& subspace, double eps) {
  require(members.size() >= 2, ErrorCategory::invalid_argument, "equality set needs at least two members");
  const std::size_t d = subspace.dim;
  std::vector<double> mean(d, 0.0);
  for (const auto& w : members) {
    check_dim(w, subspace);
    for (std::size_t j = 0; j < d; ++j) mean[j] += w[j];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());

  // shared off-subspace part
  std::vector<double> nu = mean;
  detail::remove_component(nu, subspace.view());
  detail::remove_component(nu, subspace.view());
  const double nu2 = detail::dot(nu, nu);
  require(nu2 <= 1.0 + 1e-9, ErrorCategory::invalid_argument, "equality set members must be unit vectors");
  const double scale = std::sqrt(std::max(0.0, 1.0 - nu2));

  const auto mean_c = coefficients(mean, subspace);
  std::vector<std::vector<double>> out;
  for (std::size_t m = 0; m < members.size(); ++m) {
    auto c = coefficients(members[m], subspace);
    double len2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] -= mean_c[i];
      len2 += c[i] * c[i];
    }
    const double len = std::sqrt(len2);
    require(len >= eps, ErrorCategory::degenerate,
            "equality set member " + std::to_string(m) + " has no offset inside the subspace");
    for (double& v : c) v *= scale / len;
    auto w = combine(c, subspace);
    for (std::size_t j = 0; j < d; ++j) w[j] += nu[j];
    out.push_back(std::move(w));
  }
  return out;
}

DebiasResult hard_debias(const EmbeddingMatrix& emb, const EqualitySets& sets, const NeutralPolicy& policy,
                         std::size_t k) {
  SkipReport skips;
  const auto sub = identify_subspace(emb, sets, k, &skips);
  return apply_debias(emb, sets, policy, sub, std::move(skips), resolve_sets(emb, sets));
}

DebiasResult hard_debias(const EmbeddingMatrix& emb, const EqualitySets& sets, const NeutralPolicy& policy,
                         const BiasSubspace& subspace) {
  SkipReport skips;
  const auto resolved = resolve_sets(emb, sets, &skips);
  return apply_debias(emb, sets, policy, subspace, std::move(skips), resolved);
}

}  // namespace equifair
