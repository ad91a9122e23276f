#pragma once

#include <vector>

#include "firank/layers.hpp"

namespace firank {

// Single-example entry points for the interaction layers.  E is the L x d
// embedding list of one example; each runs the batched builder with B = 1,
// so results are bit-identical to the training path.

namespace detail {

template <class Real>
std::vector<int> rows_as_inputs(Graph<Real>& g, const Tensor<Real>& E) {
  std::vector<int> inputs;
  for (int64_t i = 0; i < E.rows(); ++i) {
    Tensor<Real> row = Tensor<Real>::zeros({1, E.cols()});
    for (int64_t j = 0; j < E.cols(); ++j) row.at(0, j) = E.at(i, j);
    inputs.push_back(g.constant(std::move(row)));
  }
  return inputs;
}

template <class Real>
Tensor<Real> outputs_as_matrix(const Graph<Real>& g, const std::vector<int>& outs) {
  const int64_t d = g.value(outs[0]).cols();
  Tensor<Real> m = Tensor<Real>::zeros({static_cast<int64_t>(outs.size()), d});
  for (size_t i = 0; i < outs.size(); ++i) {
    const Tensor<Real>& v = g.value(outs[i]);
    for (int64_t j = 0; j < d; ++j) m.at(static_cast<int64_t>(i), j) = v.at(0, j);
  }
  return m;
}

}  // namespace detail

template <class Real>
Tensor<Real> homo_attention_forward(const Tensor<Real>& E, const HomoLayerParams<Real>& p,
                                    const LayerConfig& cfg) {
  if (E.rows() != cfg.list_len || E.cols() != cfg.d) {
    throw DimensionError("homo_attention_forward: E must be L x d");
  }
  Graph<Real> g;
  auto inputs = detail::rows_as_inputs(g, E);
  LayerBuild built = build_homo_layer(g, cfg, p, inputs, "layer0", false);
  return detail::outputs_as_matrix(g, built.outputs);
}

// Attention probabilities of the heterogeneous layer, stacked H x L x L:
// entry (h, i, j) = Att(i, j)^h.  Computed on the raw embedding list (no
// residual wiring involved in the scores themselves when norms are off).
template <class Real>
Tensor<Real> hetero_scores(const Tensor<Real>& E, const HeteroLayerParams<Real>& p,
                           const LayerConfig& cfg) {
  if (E.rows() != cfg.list_len || E.cols() != cfg.d) {
    throw DimensionError("hetero_scores: E must be L x d");
  }
  Graph<Real> g;
  auto inputs = detail::rows_as_inputs(g, E);
  LayerBuild built = build_hetero_layer(g, cfg, p, inputs, "layer0", false);
  Tensor<Real> out = Tensor<Real>::zeros({cfg.heads, cfg.list_len, cfg.list_len});
  for (int64_t h = 0; h < cfg.heads; ++h) {
    for (int64_t i = 0; i < cfg.list_len; ++i) {
      const Tensor<Real>& att =
          g.value(built.attention[static_cast<size_t>(h)][static_cast<size_t>(i)]);
      for (int64_t j = 0; j < cfg.list_len; ++j) {
        out.data[static_cast<size_t>((h * cfg.list_len + i) * cfg.list_len + j)] = att.at(0, j);
      }
    }
  }
  return out;
}

template <class Real>
Tensor<Real> hetero_forward(const Tensor<Real>& E, const HeteroLayerParams<Real>& p,
                            const LayerConfig& cfg) {
  if (E.rows() != cfg.list_len || E.cols() != cfg.d) {
    throw DimensionError("hetero_forward: E must be L x d");
  }
  Graph<Real> g;
  auto inputs = detail::rows_as_inputs(g, E);
  LayerBuild built = build_hetero_layer(g, cfg, p, inputs, "layer0", false);
  return detail::outputs_as_matrix(g, built.outputs);
}

// Position-specific FFN: GELU(o W1_i + b1_i) W2_i + b2_i for one vector.
template <class Real>
Tensor<Real> hetero_ffn(const Tensor<Real>& o, int64_t position,
                        const HeteroLayerParams<Real>& p) {
  const int64_t n_ffn = static_cast<int64_t>(p.ffn.size());
  const int64_t n_pos = static_cast<int64_t>(p.features.size());
  if (position < 0 || position >= std::max(n_pos, n_ffn)) {
    throw ConfigError("hetero_ffn: position out of range");
  }
  const FfnParams<Real>& f = p.ffn_for(position);
  Tensor<Real> h = add_bias(matmul(o, f.w1), f.b1);
  h = gelu(h);
  return add_bias(matmul(h, f.w2), f.b2);
}

// Low-rank composite projection of the flattened list: returns the L output
// vectors (rows), each of width right.rows() / L.  The dense
// (L*d x L*d_out) product is never materialized.
template <class Real>
Tensor<Real> composite_project(const Tensor<Real>& E, const CompositeFactors<Real>& f,
                               int64_t list_len) {
  if (f.left.rank() != 2 || f.right.rank() != 2 || f.left.cols() != f.right.cols()) {
    throw ConfigError("composite_project: mis-shaped factors");
  }
  if (f.left.cols() < 1) throw ConfigError("composite_project: rank must be >= 1");
  if (E.rows() * E.cols() != f.left.rows()) {
    throw ConfigError("composite_project: factors do not match L*d");
  }
  if (f.right.rows() % list_len != 0) {
    throw ConfigError("composite_project: output width not divisible by L");
  }
  Tensor<Real> flat({1, E.rows() * E.cols()}, E.data);
  Tensor<Real> z = matmul(flat, f.left);          // 1 x r
  Tensor<Real> all = matmul_nt(z, f.right);       // 1 x L*d_out
  const int64_t d_out = f.right.rows() / list_len;
  Tensor<Real> out = Tensor<Real>::zeros({list_len, d_out});
  for (int64_t i = 0; i < list_len; ++i)
    for (int64_t j = 0; j < d_out; ++j) out.at(i, j) = all.at(0, i * d_out + j);
  return out;
}

// Full composite layer forward; returns L x d, or t x d when cfg.prune_last.
template <class Real>
Tensor<Real> hiformer_forward(const Tensor<Real>& E, const CompositeLayerParams<Real>& p,
                              const LayerConfig& cfg) {
  if (E.rows() != cfg.list_len || E.cols() != cfg.d) {
    throw DimensionError("hiformer_forward: E must be L x d");
  }
  Graph<Real> g;
  auto inputs = detail::rows_as_inputs(g, E);
  LayerBuild built = build_hiformer_layer(g, cfg, p, inputs, "layer0", cfg.prune_last);
  return detail::outputs_as_matrix(g, built.outputs);
}

}  // namespace firank
