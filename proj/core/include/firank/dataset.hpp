#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firank/schema.hpp"

namespace firank {

// Columnar batch of examples: ids are n x |C|, dense n x |D|, labels n.
struct Dataset {
  int64_t num_categorical = 0;
  int64_t num_dense = 0;
  std::vector<int32_t> ids;
  std::vector<double> dense;
  std::vector<uint8_t> labels;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }

  const int32_t* ids_row(int64_t i) const { return ids.data() + i * num_categorical; }
  const double* dense_row(int64_t i) const { return dense.data() + i * num_dense; }

  void reserve(int64_t n) {
    ids.reserve(static_cast<size_t>(n * num_categorical));
    dense.reserve(static_cast<size_t>(n * num_dense));
    labels.reserve(static_cast<size_t>(n));
  }
};

// UTF-8 CSV with header cat_0..cat_{|C|-1},dense_0..dense_{|D|-1},label.
void write_dataset_csv(const std::string& path, const Dataset& ds);

// Reads and validates a dataset file.  When a schema is given, ids are
// range-checked against its vocabularies.
Dataset read_dataset_csv(const std::string& path, const FeatureSchema* schema = nullptr);

}  // namespace firank
