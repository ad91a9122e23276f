#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace firank {

// Declares the feature layout.  The embedding list length is
// L = |C| + n_dense_groups + tasks; task rows sit at the end.
struct FeatureSchema {
  std::vector<int64_t> categorical_vocab_sizes;  // V_i per categorical feature
  int64_t dense_count = 0;                       // |D|
  int64_t dense_group_count = 0;                 // n^D
  int64_t task_count = 1;                        // t
  int64_t model_dim = 128;                       // d

  int64_t categorical_count() const {
    return static_cast<int64_t>(categorical_vocab_sizes.size());
  }

  int64_t list_length() const {
    return categorical_count() + dense_group_count + task_count;
  }

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

FeatureSchema schema_from_json(const std::string& text);
std::string schema_to_json(const FeatureSchema& s);

FeatureSchema load_schema(const std::string& path);
void save_schema(const std::string& path, const FeatureSchema& s);

}  // namespace firank
