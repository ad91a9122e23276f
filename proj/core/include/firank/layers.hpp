#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "firank/graph.hpp"
#include "firank/params.hpp"

namespace firank {

enum class LayerKind { homo, homo_pe, hetero, hiformer };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::homo: return "homo";
    case LayerKind::homo_pe: return "homo-pe";
    case LayerKind::hetero: return "hetero";
    case LayerKind::hiformer: return "hiformer";
  }
  return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "homo") return LayerKind::homo;
  if (s == "homo-pe") return LayerKind::homo_pe;
  if (s == "hetero") return LayerKind::hetero;
  if (s == "hiformer") return LayerKind::hiformer;
  throw ConfigError("unknown layer kind '" + s + "'");
}

// Shared sizing for one interaction layer.  d_f == 0 resolves to 4d.
struct LayerConfig {
  int64_t list_len = 0;  // L
  int64_t tasks = 1;     // t
  int64_t d = 128;
  int64_t heads = 4;
  int64_t d_k = 16;
  int64_t d_v = 64;
  int64_t d_f = 0;
  int64_t r_k = 128;
  int64_t r_v = 1024;
  bool prune_last = false;
  bool residual_ln = true;
  bool tie_output = false;
  bool tie_ffn = false;
  bool position_encoding = false;  // homo variant only

  int64_t ffn_dim() const { return d_f > 0 ? d_f : 4 * d; }

  void validate() const {
    if (list_len < 1) throw ConfigError("layer config: L must be >= 1");
    if (tasks < 1) throw ConfigError("layer config: t must be >= 1");
    if (tasks > list_len) throw ConfigError("layer config: t must be <= L");
    if (d < 1 || heads < 1 || d_k < 1 || d_v < 1 || ffn_dim() < 1) {
      throw ConfigError("layer config: dimensions must be >= 1");
    }
    if (r_k < 1 || r_v < 1) throw ConfigError("layer config: ranks must be >= 1");
  }

  int64_t max_rank_k() const { return std::min(list_len * d, list_len * d_k); }
  int64_t max_rank_v() const { return std::min(list_len * d, list_len * d_v); }
};

// The last t rows of the embedding list are the query subset used by a
// pruned layer; keys and values still cover all L rows.
struct QuerySubset {
  int64_t offset = 0;
  int64_t count = 0;
};

inline QuerySubset prune_queries(int64_t list_len, int64_t tasks) {
  if (tasks > list_len) throw ConfigError("prune_queries: t exceeds L");
  if (tasks < 1) throw ConfigError("prune_queries: t must be >= 1");
  return {list_len - tasks, tasks};
}

template <class Real>
struct AttentionHeadWeights {
  Tensor<Real> q, k, v;  // d x d_k, d x d_k, d x d_v
};

template <class Real>
struct LayerNormParams {
  Tensor<Real> ln1_g, ln1_b, ln2_g, ln2_b;
  bool present = false;

  static LayerNormParams make(int64_t d, bool enabled) {
    LayerNormParams p;
    p.present = enabled;
    if (enabled) {
      p.ln1_g = Tensor<Real>::full({1, d}, Real(1));
      p.ln1_b = Tensor<Real>::zeros({1, d});
      p.ln2_g = Tensor<Real>::full({1, d}, Real(1));
      p.ln2_b = Tensor<Real>::zeros({1, d});
    }
    return p;
  }

  void collect(ParamSet<Real>& set, const std::string& prefix) {
    if (!present) return;
    set.add(prefix + ".ln1.g", ln1_g);
    set.add(prefix + ".ln1.b", ln1_b);
    set.add(prefix + ".ln2.g", ln2_g);
    set.add(prefix + ".ln2.b", ln2_b);
  }
};

// Vanilla multi-head self-attention: one set of projections shared by all
// positions, optionally preceded by learned per-position encodings.
template <class Real>
struct HomoLayerParams {
  std::vector<AttentionHeadWeights<Real>> heads;
  Tensor<Real> output;  // (H * d_v) x d
  FfnParams<Real> ffn;
  Tensor<Real> position_encoding;  // L x d when enabled, else empty
  LayerNormParams<Real> norm;

  static HomoLayerParams make(const LayerConfig& cfg, CounterRng& rng) {
    cfg.validate();
    HomoLayerParams p;
    p.heads.resize(static_cast<size_t>(cfg.heads));
    for (auto& h : p.heads) {
      h.q = init_linear<Real>(cfg.d, cfg.d_k, rng);
      h.k = init_linear<Real>(cfg.d, cfg.d_k, rng);
      h.v = init_linear<Real>(cfg.d, cfg.d_v, rng);
    }
    p.output = init_linear<Real>(cfg.heads * cfg.d_v, cfg.d, rng);
    p.ffn = FfnParams<Real>::make(cfg.d, cfg.ffn_dim(), cfg.d, rng);
    if (cfg.position_encoding) {
      p.position_encoding = init_embedding<Real>(cfg.list_len, cfg.d, rng);
    }
    p.norm = LayerNormParams<Real>::make(cfg.d, cfg.residual_ln);
    return p;
  }

  void collect(ParamSet<Real>& set, const std::string& prefix) {
    for (size_t h = 0; h < heads.size(); ++h) {
      const std::string hp = prefix + ".h" + std::to_string(h);
      set.add(hp + ".q", heads[h].q);
      set.add(hp + ".k", heads[h].k);
      set.add(hp + ".v", heads[h].v);
    }
    set.add(prefix + ".out", output);
    ffn.collect(set, prefix + ".ffn");
    if (position_encoding.size() > 0) set.add(prefix + ".pe", position_encoding);
    norm.collect(set, prefix);
  }
};

// Heterogeneous attention: every position owns its Q/K/V projections, its
// output matrix and its FFN (output/FFN can be tied back for ablations).
template <class Real>
struct HeteroLayerParams {
  std::vector<std::vector<AttentionHeadWeights<Real>>> features;  // [L][H]
  std::vector<Tensor<Real>> output;                               // [L] or [1]
  std::vector<FfnParams<Real>> ffn;                               // [L] or [1]
  LayerNormParams<Real> norm;

  static HeteroLayerParams make(const LayerConfig& cfg, CounterRng& rng) {
    cfg.validate();
    HeteroLayerParams p;
    p.features.resize(static_cast<size_t>(cfg.list_len));
    for (auto& f : p.features) {
      f.resize(static_cast<size_t>(cfg.heads));
      for (auto& h : f) {
        h.q = init_linear<Real>(cfg.d, cfg.d_k, rng);
        h.k = init_linear<Real>(cfg.d, cfg.d_k, rng);
        h.v = init_linear<Real>(cfg.d, cfg.d_v, rng);
      }
    }
    const int64_t n_out = cfg.tie_output ? 1 : cfg.list_len;
    for (int64_t i = 0; i < n_out; ++i) {
      p.output.push_back(init_linear<Real>(cfg.heads * cfg.d_v, cfg.d, rng));
    }
    const int64_t n_ffn = cfg.tie_ffn ? 1 : cfg.list_len;
    for (int64_t i = 0; i < n_ffn; ++i) {
      p.ffn.push_back(FfnParams<Real>::make(cfg.d, cfg.ffn_dim(), cfg.d, rng));
    }
    p.norm = LayerNormParams<Real>::make(cfg.d, cfg.residual_ln);
    return p;
  }

  // Copies one shared parameter set into every position: the tying that
  // collapses the heterogeneous layer back onto the homogeneous one.
  static HeteroLayerParams tied_from_homo(const HomoLayerParams<Real>& homo,
                                          const LayerConfig& cfg) {
    HeteroLayerParams p;
    p.features.assign(static_cast<size_t>(cfg.list_len), homo.heads);
    p.output.assign(static_cast<size_t>(cfg.list_len), homo.output);
    p.ffn.assign(static_cast<size_t>(cfg.list_len), homo.ffn);
    p.norm = homo.norm;
    return p;
  }

  const Tensor<Real>& output_for(int64_t i) const {
    return output.size() == 1 ? output[0] : output[static_cast<size_t>(i)];
  }
  const FfnParams<Real>& ffn_for(int64_t i) const {
    return ffn.size() == 1 ? ffn[0] : ffn[static_cast<size_t>(i)];
  }

  void collect(ParamSet<Real>& set, const std::string& prefix) {
    for (size_t i = 0; i < features.size(); ++i) {
      for (size_t h = 0; h < features[i].size(); ++h) {
        const std::string hp =
            prefix + ".f" + std::to_string(i) + ".h" + std::to_string(h);
        set.add(hp + ".q", features[i][h].q);
        set.add(hp + ".k", features[i][h].k);
        set.add(hp + ".v", features[i][h].v);
      }
    }
    for (size_t i = 0; i < output.size(); ++i) {
      set.add(prefix + ".f" + std::to_string(i) + ".out", output[i]);
    }
    for (size_t i = 0; i < ffn.size(); ++i) {
      ffn[i].collect(set, prefix + ".f" + std::to_string(i) + ".ffn");
    }
    norm.collect(set, prefix);
  }
};

// One low-rank composite projection: the implied dense map is
// left * right^T with left (L*d x r) and right (L*d_out x r).
template <class Real>
struct CompositeFactors {
  Tensor<Real> left, right;
};

// Composite attention layer: flattened-list projections per head plus
// per-position output/FFN as in the heterogeneous layer.
template <class Real>
struct CompositeLayerParams {
  std::vector<CompositeFactors<Real>> query, key, value;  // [H]
  std::vector<Tensor<Real>> output;                       // [L] or [1]
  std::vector<FfnParams<Real>> ffn;                       // [L] or [1]
  LayerNormParams<Real> norm;

  static CompositeLayerParams make(const LayerConfig& cfg, CounterRng& rng) {
    cfg.validate();
    if (cfg.r_k > cfg.max_rank_k() || cfg.r_v > cfg.max_rank_v()) {
      throw ConfigError("composite layer: rank exceeds min(L*d, L*d_out)");
    }
    const int64_t flat = cfg.list_len * cfg.d;
    CompositeLayerParams p;
    for (int64_t h = 0; h < cfg.heads; ++h) {
      CompositeFactors<Real> q{init_factor<Real>(flat, cfg.r_k, flat, rng),
                               init_factor<Real>(cfg.list_len * cfg.d_k, cfg.r_k, flat, rng)};
      CompositeFactors<Real> k{init_factor<Real>(flat, cfg.r_k, flat, rng),
                               init_factor<Real>(cfg.list_len * cfg.d_k, cfg.r_k, flat, rng)};
      CompositeFactors<Real> v{init_factor<Real>(flat, cfg.r_v, flat, rng),
                               init_factor<Real>(cfg.list_len * cfg.d_v, cfg.r_v, flat, rng)};
      p.query.push_back(std::move(q));
      p.key.push_back(std::move(k));
      p.value.push_back(std::move(v));
    }
    const int64_t n_out = cfg.tie_output ? 1 : cfg.list_len;
    for (int64_t i = 0; i < n_out; ++i) {
      p.output.push_back(init_linear<Real>(cfg.heads * cfg.d_v, cfg.d, rng));
    }
    const int64_t n_ffn = cfg.tie_ffn ? 1 : cfg.list_len;
    for (int64_t i = 0; i < n_ffn; ++i) {
      p.ffn.push_back(FfnParams<Real>::make(cfg.d, cfg.ffn_dim(), cfg.d, rng));
    }
    p.norm = LayerNormParams<Real>::make(cfg.d, cfg.residual_ln);
    return p;
  }

  // Exact full-rank factorization of the block-diagonal composite maps
  // implied by per-feature projections: left = blockdiag(W_1..W_L),
  // right = identity.  Output/FFN/norm are tied to the heterogeneous layer,
  // so both layers compute the same function.
  static CompositeLayerParams block_diagonal_from_hetero(
      const HeteroLayerParams<Real>& het, const LayerConfig& cfg) {
    CompositeLayerParams p;
    auto block_diag = [&](auto pick, int64_t d_out) {
      std::vector<CompositeFactors<Real>> out;
      for (int64_t h = 0; h < cfg.heads; ++h) {
        Tensor<Real> left = Tensor<Real>::zeros({cfg.list_len * cfg.d, cfg.list_len * d_out});
        for (int64_t i = 0; i < cfg.list_len; ++i) {
          const Tensor<Real>& w =
              pick(het.features[static_cast<size_t>(i)][static_cast<size_t>(h)]);
          for (int64_t r = 0; r < cfg.d; ++r)
            for (int64_t c = 0; c < d_out; ++c)
              left.at(i * cfg.d + r, i * d_out + c) = w.at(r, c);
        }
        Tensor<Real> right = Tensor<Real>::zeros({cfg.list_len * d_out, cfg.list_len * d_out});
        for (int64_t r = 0; r < cfg.list_len * d_out; ++r) right.at(r, r) = Real(1);
        out.push_back({std::move(left), std::move(right)});
      }
      return out;
    };
    p.query = block_diag([](const AttentionHeadWeights<Real>& w) -> const Tensor<Real>& { return w.q; },
                         cfg.d_k);
    p.key = block_diag([](const AttentionHeadWeights<Real>& w) -> const Tensor<Real>& { return w.k; },
                       cfg.d_k);
    p.value = block_diag([](const AttentionHeadWeights<Real>& w) -> const Tensor<Real>& { return w.v; },
                         cfg.d_v);
    p.output = het.output;
    p.ffn = het.ffn;
    p.norm = het.norm;
    return p;
  }

  const Tensor<Real>& output_for(int64_t i) const {
    return output.size() == 1 ? output[0] : output[static_cast<size_t>(i)];
  }
  const FfnParams<Real>& ffn_for(int64_t i) const {
    return ffn.size() == 1 ? ffn[0] : ffn[static_cast<size_t>(i)];
  }

  void collect(ParamSet<Real>& set, const std::string& prefix) {
    for (size_t h = 0; h < query.size(); ++h) {
      const std::string hp = prefix + ".h" + std::to_string(h);
      set.add(hp + ".lq", query[h].left);
      set.add(hp + ".rq", query[h].right);
      set.add(hp + ".lk", key[h].left);
      set.add(hp + ".rk", key[h].right);
      set.add(hp + ".lv", value[h].left);
      set.add(hp + ".rv", value[h].right);
    }
    for (size_t i = 0; i < output.size(); ++i) {
      set.add(prefix + ".f" + std::to_string(i) + ".out", output[i]);
    }
    for (size_t i = 0; i < ffn.size(); ++i) {
      ffn[i].collect(set, prefix + ".f" + std::to_string(i) + ".ffn");
    }
    norm.collect(set, prefix);
  }
};

// Result of building one layer on a tape: per-query-position outputs, and
// the attention probability nodes for inspection ([head][query] -> B x L).
struct LayerBuild {
  std::vector<int> outputs;
  std::vector<std::vector<int>> attention;
};

namespace detail {

// Scores -> softmax -> mix -> concat heads -> output matrix -> FFN, with
// optional pre-norm residual wiring shared by all three layer types.
template <class Real>
LayerBuild assemble_attention(Graph<Real>& g, const LayerConfig& cfg,
                              const std::vector<int>& inputs,
                              const std::vector<std::vector<int>>& q,
                              const std::vector<std::vector<int>>& k,
                              const std::vector<std::vector<int>>& v,
                              const std::vector<int>& out_mats,
                              const std::vector<FfnNodes>& ffns,
                              int ln2_g, int ln2_b, int64_t query_offset) {
  const int64_t nq = static_cast<int64_t>(q[0].size());
  const Real inv_scale = Real(1) / static_cast<Real>(std::sqrt(static_cast<double>(cfg.d_k)));
  LayerBuild built;
  built.attention.assign(static_cast<size_t>(cfg.heads), {});
  for (int64_t i = 0; i < nq; ++i) {
    std::vector<int> mixed;
    for (int64_t h = 0; h < cfg.heads; ++h) {
      const int scores = g.attention_scores(q[static_cast<size_t>(h)][static_cast<size_t>(i)],
                                            k[static_cast<size_t>(h)], inv_scale);
      const int att = g.softmax_rows(scores);
      built.attention[static_cast<size_t>(h)].push_back(att);
      mixed.push_back(g.attention_mix(att, v[static_cast<size_t>(h)]));
    }
    const int cat = cfg.heads == 1 ? mixed[0] : g.concat_cols(mixed);
    const int proj = g.matmul(cat, out_mats[static_cast<size_t>(i)]);
    const int residual_in = inputs[static_cast<size_t>(query_offset + i)];
    int after_att = cfg.residual_ln ? g.add(residual_in, proj) : proj;
    int ffn_in = after_att;
    if (cfg.residual_ln) ffn_in = g.layer_norm(after_att, ln2_g, ln2_b);
    const int ffn_out = build_ffn(g, ffns[static_cast<size_t>(i)], ffn_in);
    built.outputs.push_back(cfg.residual_ln ? g.add(after_att, ffn_out) : ffn_out);
  }
  return built;
}

}  // namespace detail

// Homogeneous (optionally position-encoded) attention layer on the tape.
template <class Real>
LayerBuild build_homo_layer(Graph<Real>& g, const LayerConfig& cfg,
                            const HomoLayerParams<Real>& p,
                            const std::vector<int>& inputs_raw,
                            const std::string& prefix, bool pruned) {
  const int64_t L = cfg.list_len;
  std::vector<int> inputs = inputs_raw;
  if (cfg.position_encoding) {
    const int pe = g.param(p.position_encoding, prefix + ".pe");
    const int64_t batch = g.value(inputs[0]).rows();
    for (int64_t i = 0; i < L; ++i) {
      inputs[static_cast<size_t>(i)] =
          g.add(inputs[static_cast<size_t>(i)], g.broadcast_row(pe, i, batch));
    }
  }

  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  std::vector<int> n1 = inputs;
  if (cfg.residual_ln) {
    ln1_g = g.param(p.norm.ln1_g, prefix + ".ln1.g");
    ln1_b = g.param(p.norm.ln1_b, prefix + ".ln1.b");
    ln2_g = g.param(p.norm.ln2_g, prefix + ".ln2.g");
    ln2_b = g.param(p.norm.ln2_b, prefix + ".ln2.b");
    for (int64_t i = 0; i < L; ++i) {
      n1[static_cast<size_t>(i)] = g.layer_norm(inputs[static_cast<size_t>(i)], ln1_g, ln1_b);
    }
  }

  std::vector<int> wq(static_cast<size_t>(cfg.heads)), wk(wq.size()), wv(wq.size());
  for (int64_t h = 0; h < cfg.heads; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    wq[static_cast<size_t>(h)] = g.param(p.heads[static_cast<size_t>(h)].q, hp + ".q");
    wk[static_cast<size_t>(h)] = g.param(p.heads[static_cast<size_t>(h)].k, hp + ".k");
    wv[static_cast<size_t>(h)] = g.param(p.heads[static_cast<size_t>(h)].v, hp + ".v");
  }

  const QuerySubset qs = pruned ? prune_queries(L, cfg.tasks) : QuerySubset{0, L};
  std::vector<std::vector<int>> q(static_cast<size_t>(cfg.heads)), k(q.size()), v(q.size());
  for (int64_t h = 0; h < cfg.heads; ++h) {
    for (int64_t i = 0; i < qs.count; ++i) {
      q[static_cast<size_t>(h)].push_back(
          g.matmul(n1[static_cast<size_t>(qs.offset + i)], wq[static_cast<size_t>(h)]));
    }
    for (int64_t j = 0; j < L; ++j) {
      k[static_cast<size_t>(h)].push_back(g.matmul(n1[static_cast<size_t>(j)], wk[static_cast<size_t>(h)]));
      v[static_cast<size_t>(h)].push_back(g.matmul(n1[static_cast<size_t>(j)], wv[static_cast<size_t>(h)]));
    }
  }

  const int out_mat = g.param(p.output, prefix + ".out");
  const FfnNodes ffn = register_ffn(g, p.ffn, prefix + ".ffn");
  std::vector<int> out_mats(static_cast<size_t>(qs.count), out_mat);
  std::vector<FfnNodes> ffns(static_cast<size_t>(qs.count), ffn);
  return detail::assemble_attention(g, cfg, inputs, q, k, v, out_mats, ffns, ln2_g, ln2_b,
                                    qs.offset);
}

// Heterogeneous attention layer: per-position projections on the tape.
template <class Real>
LayerBuild build_hetero_layer(Graph<Real>& g, const LayerConfig& cfg,
                              const HeteroLayerParams<Real>& p,
                              const std::vector<int>& inputs,
                              const std::string& prefix, bool pruned) {
  const int64_t L = cfg.list_len;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  std::vector<int> n1 = inputs;
  if (cfg.residual_ln) {
    ln1_g = g.param(p.norm.ln1_g, prefix + ".ln1.g");
    ln1_b = g.param(p.norm.ln1_b, prefix + ".ln1.b");
    ln2_g = g.param(p.norm.ln2_g, prefix + ".ln2.g");
    ln2_b = g.param(p.norm.ln2_b, prefix + ".ln2.b");
    for (int64_t i = 0; i < L; ++i) {
      n1[static_cast<size_t>(i)] = g.layer_norm(inputs[static_cast<size_t>(i)], ln1_g, ln1_b);
    }
  }

  const QuerySubset qs = pruned ? prune_queries(L, cfg.tasks) : QuerySubset{0, L};
  std::vector<std::vector<int>> q(static_cast<size_t>(cfg.heads)), k(q.size()), v(q.size());
  for (int64_t h = 0; h < cfg.heads; ++h) {
    for (int64_t i = 0; i < qs.count; ++i) {
      const int64_t pos = qs.offset + i;
      const auto& w = p.features[static_cast<size_t>(pos)][static_cast<size_t>(h)];
      const std::string wp =
          prefix + ".f" + std::to_string(pos) + ".h" + std::to_string(h);
      q[static_cast<size_t>(h)].push_back(
          g.matmul(n1[static_cast<size_t>(pos)], g.param(w.q, wp + ".q")));
    }
    for (int64_t j = 0; j < L; ++j) {
      const auto& w = p.features[static_cast<size_t>(j)][static_cast<size_t>(h)];
      const std::string wp = prefix + ".f" + std::to_string(j) + ".h" + std::to_string(h);
      k[static_cast<size_t>(h)].push_back(
          g.matmul(n1[static_cast<size_t>(j)], g.param(w.k, wp + ".k")));
      v[static_cast<size_t>(h)].push_back(
          g.matmul(n1[static_cast<size_t>(j)], g.param(w.v, wp + ".v")));
    }
  }

  std::vector<int> out_mats;
  std::vector<FfnNodes> ffns;
  int tied_out = -1;
  FfnNodes tied_ffn;
  bool have_tied_ffn = false;
  for (int64_t i = 0; i < qs.count; ++i) {
    const int64_t pos = qs.offset + i;
    if (p.output.size() == 1) {
      if (tied_out < 0) tied_out = g.param(p.output[0], prefix + ".f0.out");
      out_mats.push_back(tied_out);
    } else {
      out_mats.push_back(g.param(p.output[static_cast<size_t>(pos)],
                                 prefix + ".f" + std::to_string(pos) + ".out"));
    }
    if (p.ffn.size() == 1) {
      if (!have_tied_ffn) {
        tied_ffn = register_ffn(g, p.ffn[0], prefix + ".f0.ffn");
        have_tied_ffn = true;
      }
      ffns.push_back(tied_ffn);
    } else {
      ffns.push_back(register_ffn(g, p.ffn[static_cast<size_t>(pos)],
                                  prefix + ".f" + std::to_string(pos) + ".ffn"));
    }
  }
  return detail::assemble_attention(g, cfg, inputs, q, k, v, out_mats, ffns, ln2_g, ln2_b,
                                    qs.offset);
}

// Composite attention layer: queries/keys/values come from low-rank
// projections of the flattened embedding list (Ld -> r -> L*d_out per head);
// the dense L*d x L*d_out map is never materialized.  When pruned, only the
// task block of the query projection is produced.
template <class Real>
LayerBuild build_hiformer_layer(Graph<Real>& g, const LayerConfig& cfg,
                                const CompositeLayerParams<Real>& p,
                                const std::vector<int>& inputs,
                                const std::string& prefix, bool pruned) {
  const int64_t L = cfg.list_len;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  std::vector<int> n1 = inputs;
  if (cfg.residual_ln) {
    ln1_g = g.param(p.norm.ln1_g, prefix + ".ln1.g");
    ln1_b = g.param(p.norm.ln1_b, prefix + ".ln1.b");
    ln2_g = g.param(p.norm.ln2_g, prefix + ".ln2.g");
    ln2_b = g.param(p.norm.ln2_b, prefix + ".ln2.b");
    for (int64_t i = 0; i < L; ++i) {
      n1[static_cast<size_t>(i)] = g.layer_norm(inputs[static_cast<size_t>(i)], ln1_g, ln1_b);
    }
  }

  const int flat = g.concat_cols(n1);
  const QuerySubset qs = pruned ? prune_queries(L, cfg.tasks) : QuerySubset{0, L};

  std::vector<std::vector<int>> q(static_cast<size_t>(cfg.heads)), k(q.size()), v(q.size());
  for (int64_t h = 0; h < cfg.heads; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    const auto& fq = p.query[static_cast<size_t>(h)];
    const auto& fk = p.key[static_cast<size_t>(h)];
    const auto& fv = p.value[static_cast<size_t>(h)];
    const int zq = g.matmul(flat, g.param(fq.left, hp + ".lq"));
    const int rq = g.param(fq.right, hp + ".rq");
    const int q_rows =
        g.matmul_nt_rows(zq, rq, qs.offset * cfg.d_k, qs.count * cfg.d_k);
    for (int64_t i = 0; i < qs.count; ++i) {
      q[static_cast<size_t>(h)].push_back(g.slice_cols(q_rows, i * cfg.d_k, cfg.d_k));
    }
    const int zk = g.matmul(flat, g.param(fk.left, hp + ".lk"));
    const int k_all = g.matmul_nt(zk, g.param(fk.right, hp + ".rk"));
    const int zv = g.matmul(flat, g.param(fv.left, hp + ".lv"));
    const int v_all = g.matmul_nt(zv, g.param(fv.right, hp + ".rv"));
    for (int64_t j = 0; j < L; ++j) {
      k[static_cast<size_t>(h)].push_back(g.slice_cols(k_all, j * cfg.d_k, cfg.d_k));
      v[static_cast<size_t>(h)].push_back(g.slice_cols(v_all, j * cfg.d_v, cfg.d_v));
    }
  }

  std::vector<int> out_mats;
  std::vector<FfnNodes> ffns;
  int tied_out = -1;
  FfnNodes tied_ffn;
  bool have_tied_ffn = false;
  for (int64_t i = 0; i < qs.count; ++i) {
    const int64_t pos = qs.offset + i;
    if (p.output.size() == 1) {
      if (tied_out < 0) tied_out = g.param(p.output[0], prefix + ".f0.out");
      out_mats.push_back(tied_out);
    } else {
      out_mats.push_back(g.param(p.output[static_cast<size_t>(pos)],
                                 prefix + ".f" + std::to_string(pos) + ".out"));
    }
    if (p.ffn.size() == 1) {
      if (!have_tied_ffn) {
        tied_ffn = register_ffn(g, p.ffn[0], prefix + ".f0.ffn");
        have_tied_ffn = true;
      }
      ffns.push_back(tied_ffn);
    } else {
      ffns.push_back(register_ffn(g, p.ffn[static_cast<size_t>(pos)],
                                  prefix + ".f" + std::to_string(pos) + ".ffn"));
    }
  }
  return detail::assemble_attention(g, cfg, inputs, q, k, v, out_mats, ffns, ln2_g, ln2_b,
                                    qs.offset);
}

// A stack of same-kind interaction layers; only the last may be pruned.
template <class Real>
struct InteractionStack {
  LayerKind kind = LayerKind::homo;
  std::vector<HomoLayerParams<Real>> homo;
  std::vector<HeteroLayerParams<Real>> hetero;
  std::vector<CompositeLayerParams<Real>> composite;
  std::vector<bool> pruned;

  int64_t depth() const { return static_cast<int64_t>(pruned.size()); }

  static InteractionStack make(LayerKind kind, int64_t n_layers, const LayerConfig& cfg,
                               CounterRng& rng) {
    InteractionStack s;
    s.kind = kind;
    for (int64_t l = 0; l < n_layers; ++l) {
      LayerConfig lc = cfg;
      lc.position_encoding = (kind == LayerKind::homo_pe);
      switch (kind) {
        case LayerKind::homo:
        case LayerKind::homo_pe:
          s.homo.push_back(HomoLayerParams<Real>::make(lc, rng));
          break;
        case LayerKind::hetero:
          s.hetero.push_back(HeteroLayerParams<Real>::make(lc, rng));
          break;
        case LayerKind::hiformer:
          s.composite.push_back(CompositeLayerParams<Real>::make(lc, rng));
          break;
      }
      s.pruned.push_back(cfg.prune_last && l == n_layers - 1);
    }
    return s;
  }

  void collect(ParamSet<Real>& set) {
    for (size_t l = 0; l < homo.size(); ++l) {
      homo[l].collect(set, "layer" + std::to_string(l));
    }
    for (size_t l = 0; l < hetero.size(); ++l) {
      hetero[l].collect(set, "layer" + std::to_string(l));
    }
    for (size_t l = 0; l < composite.size(); ++l) {
      composite[l].collect(set, "layer" + std::to_string(l));
    }
  }
};

// Applies the stack and returns the final task-row nodes (t entries).
// Layer l's outputs feed layer l+1; a pruned layer anywhere but last is a
// configuration error; zero layers pass the raw task rows through.
template <class Real>
struct StackBuild {
  std::vector<int> task_nodes;
  std::vector<LayerBuild> layers;
};

template <class Real>
StackBuild<Real> build_stack(Graph<Real>& g, const LayerConfig& cfg,
                             const InteractionStack<Real>& stack,
                             const std::vector<int>& inputs) {
  const int64_t n = stack.depth();
  for (int64_t l = 0; l < n; ++l) {
    if (stack.pruned[static_cast<size_t>(l)] && l != n - 1) {
      throw ConfigError("stack: pruned layer in non-final position");
    }
  }
  StackBuild<Real> out;
  std::vector<int> cur = inputs;
  for (int64_t l = 0; l < n; ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    LayerConfig lc = cfg;
    lc.position_encoding = (stack.kind == LayerKind::homo_pe);
    const bool pruned = stack.pruned[static_cast<size_t>(l)];
    LayerBuild built;
    switch (stack.kind) {
      case LayerKind::homo:
      case LayerKind::homo_pe:
        built = build_homo_layer(g, lc, stack.homo[static_cast<size_t>(l)], cur, prefix, pruned);
        break;
      case LayerKind::hetero:
        built = build_hetero_layer(g, lc, stack.hetero[static_cast<size_t>(l)], cur, prefix, pruned);
        break;
      case LayerKind::hiformer:
        built = build_hiformer_layer(g, lc, stack.composite[static_cast<size_t>(l)], cur, prefix,
                                     pruned);
        break;
    }
    out.layers.push_back(built);
    cur = built.outputs;
  }
  // Task rows are the trailing t outputs (all outputs if the last layer was
  // pruned, which emits exactly the task rows).
  const int64_t have = static_cast<int64_t>(cur.size());
  if (have < cfg.tasks) throw ConfigError("stack: fewer outputs than task rows");
  out.task_nodes.assign(cur.end() - cfg.tasks, cur.end());
  return out;
}

}  // namespace firank
