#pragma once

// Seeded generators. Every draw is keyed by (seed, sample or word id), so
// output depends only on the configuration.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "equifair/debias.hpp"
#include "equifair/embedding.hpp"
#include "equifair/metrics.hpp"
#include "equifair/predictions.hpp"

namespace equifair::synth {

// Class-conditional score logits for one group: N(pos_mean, pos_sd) for
// positives, N(neg_mean, neg_sd) for negatives.
struct GroupModel {
  std::string name;
  double proportion = 0.0;
  double pos_mean = 1.0;
  double pos_sd = 1.0;
  double neg_mean = -1.5;
  double neg_sd = 1.0;
};

// Samples fall into `segments` equal-probability segments. A modality is
// informative on segments where its mask is 1 and emits class-independent
// N(noise_mean, noise_sd) logits elsewhere.
struct ModalitySpec {
  std::string name = "base";
  std::vector<std::uint8_t> informative;  // one flag per segment; empty = everywhere
  double noise_mean = -1.5;
  double noise_sd = 1.0;
};

inline constexpr double kDefaultPositiveRate = 0.131;

struct CohortConfig {
  std::vector<GroupModel> groups;
  double positive_rate = kDefaultPositiveRate;
  std::vector<ModalitySpec> modalities{ModalitySpec{}};
  std::size_t segments = 1;
  std::size_t n = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Rates of the generating model at threshold 0.5 (logit 0).
struct AnalyticRates {
  std::string modality;
  std::string group;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct Cohort {
  std::vector<LabeledPredictions> modalities;  // same ids, labels and groups
  std::vector<std::size_t> segment;            // per sample
  std::vector<AnalyticRates> analytic;
};

// Named group universes with their test-split proportions: "gender",
// "ethnicity", "insurance". Positive-class logit means are spread across
// groups to plant a tpr gap of at least 0.15 at threshold 0.5. Scores are
// calibrated at the default positive rate.
std::vector<GroupModel> preset_groups(std::string_view name);
std::vector<std::string> preset_names();

CohortConfig default_cohort_config();  // gender preset, one modality

Cohort generate_cohort(const CohortConfig& cfg);

// P(N(mean, sd) >= 0).
double prob_nonnegative(double mean, double sd);

// Multilabel phenotype-style data with prevalence first_prevalence * decay^l.
struct MultilabelConfig {
  std::size_t n = 2000;
  std::size_t labels = 25;
  double first_prevalence = 0.3;
  double decay = 0.9;
  double separation = 1.5;  // positive logit mean minus negative logit mean
  std::uint64_t seed = 0;

  void validate() const;
};

struct MultilabelData {
  ScoreColumns scores;
  LabelColumns labels;
  std::vector<double> prevalence;
};

MultilabelData generate_multilabel(const MultilabelConfig& cfg);

// Equality-set words share one base vector per connected component of
// overlapping sets and are offset by `bias_scale` along a class anchor; the
// anchors form a centered simplex in the planted directions, one direction per
// class beyond the first. Neutral filler words are orthogonal to the plant.
// Isotropic noise of scale `noise` is added before unit normalization.
struct EmbeddingPlantConfig {
  std::size_t vocab_size = 50;
  std::size_t dim = 25;
  EqualitySets sets;
  double noise = 0.01;
  double bias_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t classes() const;
};

struct PlantedEmbeddings {
  EmbeddingMatrix embeddings;
  EqualitySets sets;
  BiasSubspace planted;
  std::vector<std::string> neutral_words;
};

PlantedEmbeddings generate_embeddings(const EmbeddingPlantConfig& cfg);

}  // namespace equifair::synth
