#pragma once

#include <vector>

#include "firank/cdf.hpp"
#include "firank/params.hpp"
#include "firank/schema.hpp"

namespace firank {

// One look-up table per categorical feature, V_i x d each.
template <class Real>
struct EmbeddingTables {
  std::vector<Tensor<Real>> tables;

  static EmbeddingTables make(const FeatureSchema& s, CounterRng& rng) {
    EmbeddingTables e;
    for (int64_t v : s.categorical_vocab_sizes) {
      e.tables.push_back(init_embedding<Real>(v, s.model_dim, rng));
    }
    return e;
  }

  void collect(ParamSet<Real>& set) {
    for (size_t i = 0; i < tables.size(); ++i) {
      set.add("emb.cat" + std::to_string(i), tables[i]);
    }
  }
};

// Dense branch: empirical-CDF normalization followed by the aggregation MLP
// f_D : |D| -> 4 n^D d -> n^D d, whose output splits into n^D embeddings.
template <class Real>
struct DensePreprocessor {
  FfnParams<Real> mlp;
  DenseCdf stats;

  static DensePreprocessor make(const FeatureSchema& s, CounterRng& rng) {
    DensePreprocessor p;
    if (s.dense_count > 0) {
      const int64_t out = s.dense_group_count * s.model_dim;
      p.mlp = FfnParams<Real>::make(s.dense_count, 4 * out, out, rng);
    }
    return p;
  }

  void collect(ParamSet<Real>& set) {
    if (mlp.w1.size() > 0) mlp.collect(set, "dense");
  }
};

// e_i = row id_i of table i (one-hot times table); returns |C| vectors 1 x d.
template <class Real>
std::vector<Tensor<Real>> embed_categorical(const std::vector<int64_t>& ids,
                                            const EmbeddingTables<Real>& emb) {
  if (ids.size() != emb.tables.size()) {
    throw DataError("embed_categorical: id count does not match table count");
  }
  std::vector<Tensor<Real>> out;
  for (size_t f = 0; f < ids.size(); ++f) {
    const Tensor<Real>& t = emb.tables[f];
    const int64_t id = ids[f];
    if (id < 0 || id >= t.rows()) {
      throw VocabError("embed_categorical: id out of vocabulary for feature " +
                       std::to_string(f));
    }
    Tensor<Real> row = Tensor<Real>::zeros({1, t.cols()});
    for (int64_t j = 0; j < t.cols(); ++j) row.at(0, j) = t.at(id, j);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> normalize_dense(const std::vector<double>& raw,
                                           const DenseCdf& stats) {
  return stats.normalize(raw);
}

// f_D applied to one normalized example, split into n_groups vectors of d.
template <class Real>
std::vector<Tensor<Real>> project_dense(const std::vector<double>& normalized,
                                        const FfnParams<Real>& mlp, int64_t n_groups,
                                        int64_t d) {
  Tensor<Real> x = Tensor<Real>::zeros({1, static_cast<int64_t>(normalized.size())});
  for (size_t i = 0; i < normalized.size(); ++i) x.at(0, static_cast<int64_t>(i)) =
      static_cast<Real>(normalized[i]);
  Tensor<Real> h = add_bias(matmul(x, mlp.w1), mlp.b1);
  h = gelu(h);
  Tensor<Real> full = add_bias(matmul(h, mlp.w2), mlp.b2);
  if (full.cols() != n_groups * d) {
    throw ConfigError("project_dense: f_D output length not divisible into groups");
  }
  std::vector<Tensor<Real>> out;
  for (int64_t grp = 0; grp < n_groups; ++grp) {
    Tensor<Real> e = Tensor<Real>::zeros({1, d});
    for (int64_t j = 0; j < d; ++j) e.at(0, j) = full.at(0, grp * d + j);
    out.push_back(std::move(e));
  }
  return out;
}

// Fixed row order: categorical features (schema order), dense groups, then
// task tokens in the last t rows.
template <class Real>
Tensor<Real> assemble_embedding_list(const std::vector<Tensor<Real>>& categorical,
                                     const std::vector<Tensor<Real>>& dense_groups,
                                     const Tensor<Real>& task_tokens) {
  const int64_t t = task_tokens.size() > 0 ? task_tokens.rows() : 0;
  int64_t d = 0;
  if (!categorical.empty()) {
    d = categorical[0].cols();
  } else if (!dense_groups.empty()) {
    d = dense_groups[0].cols();
  } else {
    d = task_tokens.cols();
  }
  const int64_t L = static_cast<int64_t>(categorical.size() + dense_groups.size()) + t;
  Tensor<Real> out = Tensor<Real>::zeros({L, d});
  int64_t r = 0;
  for (const auto& e : categorical) {
    if (e.cols() != d) throw DimensionError("assemble: embedding width mismatch");
    for (int64_t j = 0; j < d; ++j) out.at(r, j) = e.at(0, j);
    ++r;
  }
  for (const auto& e : dense_groups) {
    if (e.cols() != d) throw DimensionError("assemble: embedding width mismatch");
    for (int64_t j = 0; j < d; ++j) out.at(r, j) = e.at(0, j);
    ++r;
  }
  for (int64_t i = 0; i < t; ++i) {
    for (int64_t j = 0; j < d; ++j) out.at(r, j) = task_tokens.at(i, j);
    ++r;
  }
  return out;
}

}  // namespace firank
