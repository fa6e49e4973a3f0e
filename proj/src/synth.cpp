#include "equifair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "equifair/error.hpp"
#include "equifair/rng.hpp"
#include "kernel_ops.hpp"

namespace equifair::synth {

namespace {

// Streams per sample.
constexpr std::uint64_t kGroupStream = 0;
constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kSegmentStream = 2;
constexpr std::uint64_t kModalityStream = 16;  // + modality index (normal() uses 2s, 2s+1)

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

bool informative(const ModalitySpec& m, std::size_t segment) {
  return m.informative.empty() || m.informative[segment] != 0;
}

double informative_fraction(const ModalitySpec& m, std::size_t segments) {
  if (m.informative.empty()) return 1.0;
  const auto on = std::count_if(m.informative.begin(), m.informative.end(), [](auto v) { return v != 0; });
  return static_cast<double>(on) / static_cast<double>(segments);
}

std::vector<double> gaussian_vector(std::uint64_t seed, std::string_view key, std::size_t dim) {
  const auto k = rng::hash_string(key);
  std::vector<double> v(dim);
  for (std::size_t j = 0; j < dim; ++j) v[j] = rng::normal(seed, k, j);
  return v;
}

void scale_to_unit(std::vector<double>& v) {
  const double n = detail::norm(v);
  require(n > 0.0, ErrorCategory::degenerate, "generated a zero vector");
  for (double& x : v) x /= n;
}

// Unit vector orthogonal to the rows of `basis`.
std::vector<double> orthogonal_unit(std::uint64_t seed, std::string_view key, const std::vector<double>& basis,
                                    std::size_t dim) {
  auto v = gaussian_vector(seed, key, dim);
  const kernels::BasisView view{basis, dim};
  detail::remove_component(v, view);
  detail::remove_component(v, view);
  scale_to_unit(v);
  return v;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double prob_nonnegative(double mean, double sd) { return 0.5 * std::erfc(-mean / (sd * std::sqrt(2.0))); }

void CohortConfig::validate() const {
  require(!groups.empty(), ErrorCategory::invalid_argument, "cohort needs at least one group");
  double total = 0.0;
  for (const auto& g : groups) {
    require(g.proportion >= 0.0, ErrorCategory::invalid_argument, "negative proportion for group " + g.name);
    require(g.pos_sd > 0.0 && g.neg_sd > 0.0, ErrorCategory::invalid_argument, "logit sd must be positive");
    total += g.proportion;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCategory::invalid_argument, "group proportions must sum to 1");
  require(positive_rate > 0.0 && positive_rate < 1.0, ErrorCategory::invalid_argument,
          "positive rate must lie in (0,1)");
  require(n >= 1, ErrorCategory::invalid_argument, "sample count must be at least 1");
  require(segments >= 1, ErrorCategory::invalid_argument, "segment count must be at least 1");
  require(!modalities.empty(), ErrorCategory::invalid_argument, "cohort needs at least one modality");
  for (const auto& m : modalities) {
    require(m.informative.empty() || m.informative.size() == segments, ErrorCategory::invalid_argument,
            "informativeness mask of modality " + m.name + " must have one flag per segment");
    require(m.noise_sd > 0.0, ErrorCategory::invalid_argument, "noise sd must be positive");
  }
}

std::vector<std::string> preset_names() { return {"gender", "ethnicity", "insurance"}; }

std::vector<GroupModel> preset_groups(std::string_view name) {
  std::vector<std::pair<std::string, double>> groups;
  if (name == "gender") {
    groups = {{"F", 0.440}, {"M", 0.560}};
  } else if (name == "ethnicity") {
    groups = {{"ASIAN", 0.019}, {"BLACK", 0.089}, {"HISPANIC", 0.033}, {"OTHER", 0.144}, {"WHITE", 0.715}};
  } else if (name == "insurance") {
    groups = {{"Government", 0.023}, {"Medicaid", 0.064}, {"Medicare", 0.550},
              {"Private", 0.292},    {"Self Pay", 0.010}, {"UNKNOWN", 0.061}};
  } else {
    fail(ErrorCategory::invalid_argument, "unknown group preset: " + std::string(name));
  }
  // Equal-variance Gaussian logits with separation d and variance d are
  // calibrated at base rate pi when the class means straddle logit(pi), so
  // thresholding at 0.5 is the accuracy-optimal rule within every group.
  // d runs from 3 to 6 across groups: tpr at 0.5 spans about 0.41..0.67 while
  // fpr stays within 0.023..0.025.
  const double center = std::log(kDefaultPositiveRate / (1.0 - kDefaultPositiveRate));
  std::vector<GroupModel> out;
  const double last = static_cast<double>(groups.size() - 1);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double d = 3.0 + 3.0 * static_cast<double>(i) / last;
    const double sd = std::sqrt(d);
    out.push_back({groups[i].first, groups[i].second, center + 0.5 * d, sd, center - 0.5 * d, sd});
  }
  return out;
}

CohortConfig default_cohort_config() {
  CohortConfig cfg;
  cfg.groups = preset_groups("gender");
  return cfg;
}

Cohort generate_cohort(const CohortConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n;
  const std::size_t m = cfg.modalities.size();

  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& g : cfg.groups) cumulative.push_back(acc += g.proportion);

  std::vector<std::string> ids(n);
  std::vector<std::uint8_t> y(n);
  std::vector<std::uint32_t> group(n);
  std::vector<std::size_t> segment(n);
  std::vector<std::vector<double>> scores(m, std::vector<double>(n));

  // Sample keys are shared with apply-time randomness; a derived seed keeps
  // the two independent when callers reuse one seed.
  const auto seed = rng::derive_seed(cfg.seed, "cohort");
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    ids[i] = "s" + std::to_string(i);
    const auto key = rng::hash_string(ids[i]);
    const double ug = rng::uniform(seed, key, kGroupStream);
    std::size_t g = 0;
    while (g + 1 < cumulative.size() && ug >= cumulative[g]) ++g;
    group[i] = static_cast<std::uint32_t>(g);
    y[i] = rng::uniform(seed, key, kLabelStream) < cfg.positive_rate ? 1 : 0;
    segment[i] = std::min(cfg.segments - 1, static_cast<std::size_t>(rng::uniform(seed, key, kSegmentStream) *
                                                                       static_cast<double>(cfg.segments)));
    const auto& gm = cfg.groups[g];
    for (std::size_t k = 0; k < m; ++k) {
      const auto& mod = cfg.modalities[k];
      const double z = rng::normal(seed, key, kModalityStream + k);
      double logit;
      if (informative(mod, segment[i]))
        logit = y[i] ? gm.pos_mean + gm.pos_sd * z : gm.neg_mean + gm.neg_sd * z;
      else
        logit = mod.noise_mean + mod.noise_sd * z;
      scores[k][i] = sigmoid(logit);
    }
  }

  std::vector<std::string> universe;
  for (const auto& g : cfg.groups) universe.push_back(g.name);

  Cohort out;
  for (std::size_t k = 0; k < m; ++k) {
    LabeledPredictions p;
    p.ids = ids;
    p.y_true = y;
    p.universe = universe;
    p.group = group;
    std::vector<std::uint8_t> y_hat(n);
    for (std::size_t i = 0; i < n; ++i) y_hat[i] = scores[k][i] >= 0.5 ? 1 : 0;
    p.scores = std::move(scores[k]);
    p.y_hat = std::move(y_hat);
    p.validate();
    out.modalities.push_back(std::move(p));
  }
  out.segment = std::move(segment);

  for (const auto& mod : cfg.modalities) {
    const double frac = informative_fraction(mod, cfg.segments);
    const double noise = prob_nonnegative(mod.noise_mean, mod.noise_sd);
    for (const auto& g : cfg.groups) {
      out.analytic.push_back({mod.name, g.name, frac * prob_nonnegative(g.pos_mean, g.pos_sd) + (1.0 - frac) * noise,
                              frac * prob_nonnegative(g.neg_mean, g.neg_sd) + (1.0 - frac) * noise});
    }
  }
  return out;
}

void MultilabelConfig::validate() const {
  require(n >= 1, ErrorCategory::invalid_argument, "sample count must be at least 1");
  require(labels >= 1, ErrorCategory::invalid_argument, "label count must be at least 1");
  require(first_prevalence > 0.0 && first_prevalence < 1.0, ErrorCategory::invalid_argument,
          "prevalence must lie in (0,1)");
  require(decay > 0.0 && decay <= 1.0, ErrorCategory::invalid_argument, "decay must lie in (0,1]");
}

MultilabelData generate_multilabel(const MultilabelConfig& cfg) {
  cfg.validate();
  MultilabelData out;
  out.scores.assign(cfg.labels, std::vector<double>(cfg.n));
  out.labels.assign(cfg.labels, std::vector<std::uint8_t>(cfg.n));
  const auto seed = rng::derive_seed(cfg.seed, "multilabel");
  for (std::size_t l = 0; l < cfg.labels; ++l) {
    const double prev = cfg.first_prevalence * std::pow(cfg.decay, static_cast<double>(l));
    out.prevalence.push_back(prev);
    // Separation shrinks slowly with rarity so per-label AUCs differ.
    const double sep = cfg.separation * (1.0 - 0.5 * static_cast<double>(l) / static_cast<double>(cfg.labels));
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const auto key = rng::hash_string("s" + std::to_string(i));
      const std::uint64_t stream = 4 * l;
      const bool pos = rng::uniform(seed, key, stream) < prev;
      out.labels[l][i] = pos ? 1 : 0;
      out.scores[l][i] = sigmoid((pos ? sep : 0.0) - 1.5 + rng::normal(seed, key, stream + 1));
    }
  }
  return out;
}

std::size_t EmbeddingPlantConfig::classes() const { return sets.empty() ? 0 : sets.front().size(); }

void EmbeddingPlantConfig::validate() const {
  require(!sets.empty(), ErrorCategory::invalid_argument, "plant needs at least one equality set");
  const std::size_t c = classes();
  require(c >= 2, ErrorCategory::invalid_argument, "equality sets need at least two members");
  for (const auto& s : sets)
    require(s.size() == c, ErrorCategory::invalid_argument, "all equality sets must have the same length");
  require(dim >= c, ErrorCategory::invalid_argument, "dimension must exceed the number of planted directions");
  require(noise >= 0.0 && std::isfinite(noise), ErrorCategory::invalid_argument, "noise must be non-negative");
  require(bias_scale > 0.0 && bias_scale < 1.0, ErrorCategory::invalid_argument, "bias scale must lie in (0,1)");
}

PlantedEmbeddings generate_embeddings(const EmbeddingPlantConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  const std::size_t c = cfg.classes();
  const std::size_t k = c - 1;

  // Planted directions: Gram-Schmidt over seeded Gaussian draws.
  std::vector<double> basis;
  for (std::size_t j = 0; j < k; ++j) {
    const auto v = orthogonal_unit(cfg.seed, "#direction" + std::to_string(j), basis, d);
    basis.insert(basis.end(), v.begin(), v.end());
  }

  // Centered simplex anchors via the Helmert basis, scaled to unit length.
  std::vector<std::vector<double>> anchors(c, std::vector<double>(d, 0.0));
  for (std::size_t r = 1; r <= k; ++r) {
    const double h = 1.0 / std::sqrt(static_cast<double>(r * (r + 1)));
    for (std::size_t cls = 0; cls < c; ++cls) {
      const double coef = cls < r ? h : (cls == r ? -static_cast<double>(r) * h : 0.0);
      for (std::size_t j = 0; j < d; ++j) anchors[cls][j] += coef * basis[(r - 1) * d + j];
    }
  }
  for (auto& a : anchors) scale_to_unit(a);

  // Tokens in first-appearance order; class is the first position seen.
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> cls_of;
  for (const auto& s : cfg.sets)
    for (std::size_t p = 0; p < s.size(); ++p)
      if (index.emplace(s[p], tokens.size()).second) {
        tokens.push_back(s[p]);
        cls_of.push_back(p);
      }
  require(tokens.size() <= cfg.vocab_size, ErrorCategory::invalid_argument,
          "vocabulary size is smaller than the number of equality-set words");

  DisjointSets ds{std::vector<std::size_t>(tokens.size())};
  std::iota(ds.parent.begin(), ds.parent.end(), 0);
  for (const auto& s : cfg.sets)
    for (std::size_t p = 1; p < s.size(); ++p) ds.unite(index[s[0]], index[s[p]]);

  const double along = cfg.bias_scale;
  const double across = std::sqrt(1.0 - along * along);
  std::map<std::size_t, std::vector<double>> bases;
  std::vector<double> values;
  values.reserve(cfg.vocab_size * d);

  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::size_t root = ds.find(t);
    auto it = bases.find(root);
    if (it == bases.end())
      it = bases.emplace(root, orthogonal_unit(cfg.seed, "#base:" + tokens[root], basis, d)).first;
    const auto noise = gaussian_vector(cfg.seed, "#noise:" + tokens[t], d);
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j)
      w[j] = across * it->second[j] + along * anchors[cls_of[t]][j] + cfg.noise * noise[j];
    scale_to_unit(w);
    values.insert(values.end(), w.begin(), w.end());
  }

  PlantedEmbeddings out;
  const std::size_t neutral = cfg.vocab_size - tokens.size();
  const std::size_t width = std::to_string(neutral).size();
  for (std::size_t i = 0; i < neutral; ++i) {
    std::string name = std::to_string(i);
    name = "word" + std::string(width - name.size(), '0') + name;
    require(!index.count(name), ErrorCategory::invalid_argument, "equality set word collides with filler " + name);
    auto w = orthogonal_unit(cfg.seed, "#neutral:" + name, basis, d);
    const auto noise = gaussian_vector(cfg.seed, "#noise:" + name, d);
    for (std::size_t j = 0; j < d; ++j) w[j] += cfg.noise * noise[j];
    scale_to_unit(w);
    values.insert(values.end(), w.begin(), w.end());
    tokens.push_back(name);
    out.neutral_words.push_back(std::move(name));
  }

  out.embeddings = EmbeddingMatrix(std::move(tokens), d, std::move(values));
  out.sets = cfg.sets;
  out.planted.dim = d;
  out.planted.basis = std::move(basis);
  out.planted.explained_variance.assign(k, 1.0 / static_cast<double>(k));
  return out;
}

}  // namespace equifair::synth
