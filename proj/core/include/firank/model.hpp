#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "firank/dataset.hpp"
#include "firank/interaction_ops.hpp"
#include "firank/metrics.hpp"
#include "firank/preprocess.hpp"

namespace firank {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t batch = 256;
  int64_t epochs = 5;
  uint64_t seed = 1;
};

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0;
  double valid_auc = 0;
  double valid_logloss = 0;
  double wall_ms = 0;
};

// Seed streams; everything that draws randomness hangs off one run seed.
namespace seed_stream {
inline constexpr uint64_t kModelInit = 101;
inline constexpr uint64_t kShuffle = 102;
}  // namespace seed_stream

// End-to-end ranking model: preprocessing, interaction stack, and an MLP
// tower mapping the t encoded task rows to t engagement logits.
template <class Real>
struct RankingModel {
  FeatureSchema schema;
  LayerConfig layer_cfg;
  LayerKind kind = LayerKind::homo;
  EmbeddingTables<Real> embeddings;
  DensePreprocessor<Real> dense_pre;
  Tensor<Real> task_tokens;  // t x d
  InteractionStack<Real> stack;
  FfnParams<Real> tower;  // t*d -> 2d -> t

  static RankingModel make(const FeatureSchema& schema, const LayerConfig& cfg,
                           LayerKind kind, int64_t n_layers, uint64_t seed) {
    schema.validate();
    LayerConfig lc = cfg;
    lc.list_len = schema.list_length();
    lc.tasks = schema.task_count;
    lc.d = schema.model_dim;
    lc.validate();

    CounterRng rng(seed, seed_stream::kModelInit);
    RankingModel m;
    m.schema = schema;
    m.layer_cfg = lc;
    m.kind = kind;
    m.embeddings = EmbeddingTables<Real>::make(schema, rng);
    m.dense_pre = DensePreprocessor<Real>::make(schema, rng);
    m.task_tokens = init_embedding<Real>(schema.task_count, schema.model_dim, rng);
    m.stack = InteractionStack<Real>::make(kind, n_layers, lc, rng);
    m.tower = FfnParams<Real>::make(schema.task_count * schema.model_dim,
                                    2 * schema.model_dim, schema.task_count, rng);
    return m;
  }

  ParamSet<Real> params() {
    ParamSet<Real> set;
    embeddings.collect(set);
    dense_pre.collect(set);
    set.add("task_tokens", task_tokens);
    stack.collect(set);
    tower.collect(set, "tower");
    return set;
  }

  // Fits dense normalization stats on the training split only.
  void fit_normalization(const Dataset& train) {
    if (schema.dense_count == 0) return;
    std::vector<std::vector<double>> cols(static_cast<size_t>(schema.dense_count));
    for (auto& c : cols) c.reserve(static_cast<size_t>(train.size()));
    for (int64_t i = 0; i < train.size(); ++i) {
      const double* row = train.dense_row(i);
      for (int64_t k = 0; k < schema.dense_count; ++k) {
        cols[static_cast<size_t>(k)].push_back(row[k]);
      }
    }
    dense_pre.stats = DenseCdf::fit(cols);
  }
};

template <class Real>
struct ForwardBuild {
  std::vector<int> embedding_list;  // L nodes, B x d
  StackBuild<Real> stack;
  int logits = -1;  // B x t
  int probs = -1;   // B x t
  int loss = -1;    // scalar; -1 when labels not requested
};

// Builds the forward graph for the examples at ds[idx[0..n)], optionally
// with the logloss head attached.
template <class Real>
ForwardBuild<Real> build_model_forward(Graph<Real>& g, const RankingModel<Real>& m,
                                       const Dataset& ds, const int64_t* idx, int64_t n,
                                       bool with_loss) {
  if (n < 1) throw DataError("forward: empty batch");
  if (ds.num_categorical != m.schema.categorical_count() ||
      ds.num_dense != m.schema.dense_count) {
    throw DataError("forward: dataset does not match schema");
  }
  const FeatureSchema& s = m.schema;

  ForwardBuild<Real> fb;

  // Categorical features: one gather per table.
  for (int64_t f = 0; f < s.categorical_count(); ++f) {
    std::vector<int64_t> ids(static_cast<size_t>(n));
    const int64_t vocab = s.categorical_vocab_sizes[static_cast<size_t>(f)];
    for (int64_t b = 0; b < n; ++b) {
      const int32_t id = ds.ids_row(idx[b])[f];
      if (id < 0 || id >= vocab) {
        throw VocabError("forward: id out of vocabulary for cat_" + std::to_string(f));
      }
      ids[static_cast<size_t>(b)] = id;
    }
    const int table = g.param(m.embeddings.tables[static_cast<size_t>(f)],
                              "emb.cat" + std::to_string(f));
    fb.embedding_list.push_back(g.lookup_rows(table, std::move(ids)));
  }

  // Dense features: normalize (outside the tape), aggregate, split.
  if (s.dense_count > 0) {
    if (m.dense_pre.stats.feature_count() != s.dense_count) {
      throw ConfigError("forward: dense normalization stats not fitted");
    }
    Tensor<Real> xn = Tensor<Real>::zeros({n, s.dense_count});
    std::vector<double> raw(static_cast<size_t>(s.dense_count));
    for (int64_t b = 0; b < n; ++b) {
      const double* row = ds.dense_row(idx[b]);
      for (int64_t k = 0; k < s.dense_count; ++k) raw[static_cast<size_t>(k)] = row[k];
      const std::vector<double> nd = m.dense_pre.stats.normalize(raw);
      for (int64_t k = 0; k < s.dense_count; ++k) {
        xn.at(b, k) = static_cast<Real>(nd[static_cast<size_t>(k)]);
      }
    }
    const int x = g.constant(std::move(xn));
    int h = g.add_bias(g.matmul(x, g.param(m.dense_pre.mlp.w1, "dense.w1")),
                       g.param(m.dense_pre.mlp.b1, "dense.b1"));
    h = g.gelu(h);
    const int full = g.add_bias(g.matmul(h, g.param(m.dense_pre.mlp.w2, "dense.w2")),
                                g.param(m.dense_pre.mlp.b2, "dense.b2"));
    for (int64_t grp = 0; grp < s.dense_group_count; ++grp) {
      fb.embedding_list.push_back(g.slice_cols(full, grp * s.model_dim, s.model_dim));
    }
  }

  // Task tokens occupy the last t rows.
  const int tokens = g.param(m.task_tokens, "task_tokens");
  for (int64_t i = 0; i < s.task_count; ++i) {
    fb.embedding_list.push_back(g.broadcast_row(tokens, i, n));
  }

  fb.stack = build_stack(g, m.layer_cfg, m.stack, fb.embedding_list);

  const int encoded = fb.stack.task_nodes.size() == 1
                          ? fb.stack.task_nodes[0]
                          : g.concat_cols(fb.stack.task_nodes);
  int t1 = g.add_bias(g.matmul(encoded, g.param(m.tower.w1, "tower.w1")),
                      g.param(m.tower.b1, "tower.b1"));
  t1 = g.gelu(t1);
  fb.logits = g.add_bias(g.matmul(t1, g.param(m.tower.w2, "tower.w2")),
                         g.param(m.tower.b2, "tower.b2"));
  fb.probs = g.sigmoid(fb.logits);

  if (with_loss) {
    Tensor<Real> labels = Tensor<Real>::zeros({n, s.task_count});
    for (int64_t b = 0; b < n; ++b) {
      const Real y = static_cast<Real>(ds.labels[static_cast<size_t>(idx[b])]);
      for (int64_t task = 0; task < s.task_count; ++task) labels.at(b, task) = y;
    }
    fb.loss = g.logloss_mean(fb.probs, std::move(labels));
  }
  return fb;
}

// Task-0 probabilities for the given rows, evaluated in deterministic
// fixed-size batches.
template <class Real>
std::vector<double> predict(const RankingModel<Real>& m, const Dataset& ds,
                            const std::vector<int64_t>& rows, int64_t batch) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (size_t start = 0; start < rows.size(); start += static_cast<size_t>(batch)) {
    const int64_t n = std::min<int64_t>(batch, static_cast<int64_t>(rows.size() - start));
    Graph<Real> g;
    ForwardBuild<Real> fb = build_model_forward(g, m, ds, rows.data() + start, n, false);
    const Tensor<Real>& p = g.value(fb.probs);
    for (int64_t b = 0; b < n; ++b) out.push_back(static_cast<double>(p.at(b, 0)));
  }
  return out;
}

template <class Real>
std::vector<double> predict_all(const RankingModel<Real>& m, const Dataset& ds,
                                int64_t batch) {
  std::vector<int64_t> rows(static_cast<size_t>(ds.size()));
  for (int64_t i = 0; i < ds.size(); ++i) rows[static_cast<size_t>(i)] = i;
  return predict(m, ds, rows, batch);
}

template <class Real>
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update from the step's gradients; parameters are matched by name.
  void step(ParamSet<Real>& params, const std::vector<firank::Grad<Real>>& grads) {
    if (index_.empty()) {
      for (size_t i = 0; i < params.items().size(); ++i) {
        index_[params.items()[i].name] = i;
        m_.push_back(Tensor<Real>::zeros(params.items()[i].tensor->shape));
        v_.push_back(Tensor<Real>::zeros(params.items()[i].tensor->shape));
      }
    }
    ++t_;
    const Real b1 = static_cast<Real>(beta1_), b2 = static_cast<Real>(beta2_);
    const Real corr1 = Real(1) - static_cast<Real>(std::pow(beta1_, t_));
    const Real corr2 = Real(1) - static_cast<Real>(std::pow(beta2_, t_));
    const Real lr = static_cast<Real>(lr_), eps = static_cast<Real>(eps_);
    for (const auto& grad : grads) {
      const auto it = index_.find(grad.param);
      if (it == index_.end()) throw ConfigError("adam: unknown parameter " + grad.param);
      Tensor<Real>& p = *params.items()[it->second].tensor;
      Tensor<Real>& m = m_[it->second];
      Tensor<Real>& v = v_[it->second];
      for (size_t i = 0; i < p.data.size(); ++i) {
        const Real gi = grad.value.data[i];
        m.data[i] = b1 * m.data[i] + (Real(1) - b1) * gi;
        v.data[i] = b2 * v.data[i] + (Real(1) - b2) * gi * gi;
        const Real mhat = m.data[i] / corr1;
        const Real vhat = v.data[i] / corr2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Tensor<Real>> m_, v_;
};

// One optimizer update on a batch; returns the loss value.
template <class Real>
double train_step(RankingModel<Real>& m, Adam<Real>& opt, const Dataset& ds,
                  const int64_t* idx, int64_t n) {
  Graph<Real> g;
  ForwardBuild<Real> fb = build_model_forward(g, m, ds, idx, n, true);
  const double loss = static_cast<double>(g.value(fb.loss).data[0]);
  g.backward(fb.loss);
  ParamSet<Real> params = m.params();
  opt.step(params, g.param_grads());
  return loss;
}

struct FitResult {
  std::vector<EpochStats> history;
  int64_t best_epoch = 0;  // 0 = initial parameters
  double best_auc = 0;
};

// Epoch loop with deterministic shuffling; keeps the parameters of the best
// validation-AUC epoch (ties resolved to the earliest).
template <class Real>
FitResult fit(RankingModel<Real>& m, const Dataset& train, const Dataset& valid,
              const TrainConfig& cfg) {
  if (train.size() == 0 || valid.size() == 0) throw DataError("fit: empty split");
  FitResult result;
  Adam<Real> opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  CounterRng shuffle_rng(cfg.seed, seed_stream::kShuffle);

  ParamSet<Real> params = m.params();
  std::vector<Tensor<Real>> best;
  auto snapshot = [&]() {
    best.clear();
    for (const auto& item : params.items()) best.push_back(*item.tensor);
  };
  snapshot();
  result.best_epoch = 0;
  result.best_auc = -1.0;

  std::vector<int64_t> order(static_cast<size_t>(train.size()));
  for (int64_t i = 0; i < train.size(); ++i) order[static_cast<size_t>(i)] = i;

  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Fisher-Yates from the run's shuffle stream.
    for (int64_t i = train.size() - 1; i > 0; --i) {
      const int64_t j = static_cast<int64_t>(shuffle_rng.below(static_cast<uint64_t>(i + 1)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    double loss_sum = 0;
    int64_t steps = 0;
    for (int64_t start = 0; start < train.size(); start += cfg.batch) {
      const int64_t n = std::min<int64_t>(cfg.batch, train.size() - start);
      loss_sum += train_step(m, opt, train, order.data() + start, n);
      ++steps;
    }
    const std::vector<double> probs = predict_all(m, valid, cfg.batch);
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(std::max<int64_t>(steps, 1));
    st.valid_auc = auc(probs, valid.labels);
    st.valid_logloss = logloss(probs, valid.labels);
    st.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    result.history.push_back(st);
    if (st.valid_auc > result.best_auc) {
      result.best_auc = st.valid_auc;
      result.best_epoch = epoch;
      snapshot();
    }
  }

  // Leave the model holding the best parameters.
  for (size_t i = 0; i < params.items().size(); ++i) {
    *params.items()[i].tensor = best[i];
  }
  return result;
}

}  // namespace firank
