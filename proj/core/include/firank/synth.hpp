#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firank/dataset.hpp"
#include "firank/schema.hpp"
#include "firank/tensor.hpp"

namespace firank {

// One planted second-order interaction between categorical features a and b:
// its contribution to the log-odds is weight * u_a^T * mixing * u_b, where
// u_a, u_b are the latent vectors of the two feature values.  The mixing
// matrix is fixed per pair and dense, so the joint effect is non-additive
// and differs from pair to pair even when a feature participates in several.
struct PlantedPair {
  int64_t a = 0, b = 0;
  Tensor<double> mixing;  // u x u
  double weight = 1.0;
};

struct SynthSpec {
  std::vector<int64_t> vocab_sizes;  // per categorical feature
  int64_t dense_count = 4;           // label-independent distractors
  int64_t latent_dim = 8;            // u
  std::vector<PlantedPair> pairs;
  double bias = 0.0;  // calibrated so the expected positive rate hits target
  double target_rate = 0.3;
  uint64_t seed = 0;
  int64_t n_train = 200000, n_valid = 20000, n_test = 20000;

  // Latent vectors per feature: |C| matrices of V_i x u.
  std::vector<Tensor<double>> latents;

  // Monotone shaping of the uniform draw for each dense distractor:
  // value = lo + (hi - lo) * pow(uniform, power).
  std::vector<double> dense_lo, dense_hi, dense_power;

  int64_t total_rows() const { return n_train + n_valid + n_test; }
  int64_t categorical_count() const { return static_cast<int64_t>(vocab_sizes.size()); }
  void validate() const;
};

// Deterministic spec with |C| categorical features (vocab 100 each), 4 dense
// distractors, latent dim 8 and the first n_pairs planted pairs from a
// canonical list that reuses features across pairs.  The bias is calibrated
// by bisection to an expected positive rate of 0.3.
SynthSpec make_synth_spec(uint64_t seed, int64_t n_pairs = 6,
                          int64_t n_train = 200000, int64_t n_valid = 20000,
                          int64_t n_test = 20000);

// Log-odds of the planted model for one example's categorical ids.
double true_logit(const SynthSpec& spec, const int32_t* ids);

// Rows [first, first+count) of the infinite example stream.  Same spec and
// range always produce identical bytes; ranges may be generated in parallel.
Dataset generate_rows(const SynthSpec& spec, int64_t first, int64_t count);

// Train/valid/test splits are consecutive, disjoint index ranges.
Dataset generate_split(const SynthSpec& spec, const std::string& split);

FeatureSchema schema_for(const SynthSpec& spec, int64_t dense_groups = 4,
                         int64_t tasks = 1, int64_t model_dim = 128);

struct OracleMetrics {
  double auc = 0;
  double logloss = 0;
  double base_rate = 0;
};

// Metrics of the true-probability predictor on a generated dataset: the
// ceiling no trained model can beat in expectation.
OracleMetrics oracle_metrics(const SynthSpec& spec, const Dataset& ds);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);
SynthSpec load_synth_spec(const std::string& path);
void save_synth_spec(const std::string& path, const SynthSpec& spec);

}  // namespace firank
