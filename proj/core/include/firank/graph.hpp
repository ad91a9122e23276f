#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "firank/kernels.hpp"
#include "firank/tensor.hpp"

namespace firank {

// Reverse-mode tape.  Ops append nodes in topological order; backward()
// walks them in reverse.  Tensors are batched (rows = examples), so one node
// covers the whole minibatch and the tape stays small.
//
// Gradients flow only into nodes that need them (parameters and anything
// built on top of one); adjoints into pure constants are skipped.
template <class Real>
class Graph {
 public:
  using NodeId = int;

  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;  // allocated on first accumulation
    std::function<void(Graph&)> backprop;
    std::string name;  // non-empty for parameters
    bool needs_grad = false;
  };

  NodeId constant(Tensor<Real> v) {
    check_finite(v, "constant");
    return push(std::move(v), false, {});
  }

  NodeId param(Tensor<Real> v, std::string name) {
    check_finite(v, "parameter " + name);
    NodeId id = push(std::move(v), true, {});
    nodes_[id].name = std::move(name);
    param_ids_.push_back(id);
    return id;
  }

  const Tensor<Real>& value(NodeId id) const { return nodes_[id].value; }

  const Tensor<Real>& grad(NodeId id) const {
    if (nodes_[id].grad.data.empty()) {
      static const Tensor<Real> empty;
      return empty;
    }
    return nodes_[id].grad;
  }

  // Gradients of all parameters reachable from the loss, in registration
  // order.  Unreached parameters yield zero tensors of matching shape.
  std::vector<firank::Grad<Real>> param_grads() const {
    std::vector<firank::Grad<Real>> out;
    out.reserve(param_ids_.size());
    for (NodeId id : param_ids_) {
      const Node& n = nodes_[id];
      Tensor<Real> g = n.grad.data.empty()
                           ? Tensor<Real>::zeros(n.value.shape)
                           : n.grad;
      out.push_back({n.name, std::move(g)});
    }
    return out;
  }

  // ---- ops ----

  NodeId add(NodeId a, NodeId b) {
    Tensor<Real> v = firank::add(value(a), value(b));
    NodeId id = emit("add", std::move(v), {a, b});
    nodes_[id].backprop = [id, a, b](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      g.accumulate(a, go);
      g.accumulate(b, go);
    };
    return id;
  }

  NodeId add_bias(NodeId a, NodeId bias) {
    Tensor<Real> v = firank::add_bias(value(a), value(bias));
    NodeId id = emit("add_bias", std::move(v), {a, bias});
    nodes_[id].backprop = [id, a, bias](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      g.accumulate(a, go);
      if (g.wants(bias)) {
        Tensor<Real> gb = Tensor<Real>::zeros({1, go.cols()});
        for (int64_t i = 0; i < go.rows(); ++i) {
          const Real* grow = go.row(i);
          for (int64_t j = 0; j < go.cols(); ++j) gb.data[j] += grow[j];
        }
        g.accumulate(bias, gb);
      }
    };
    return id;
  }

  NodeId scale(NodeId a, Real c) {
    Tensor<Real> v = value(a);
    for (Real& x : v.data) x *= c;
    NodeId id = emit("scale", std::move(v), {a});
    nodes_[id].backprop = [id, a, c](Graph& g) {
      Tensor<Real> ga = g.nodes_[id].grad;
      for (Real& x : ga.data) x *= c;
      g.accumulate(a, ga);
    };
    return id;
  }

  NodeId matmul(NodeId a, NodeId b) {
    Tensor<Real> v = firank::matmul(value(a), value(b));
    NodeId id = emit("matmul", std::move(v), {a, b});
    nodes_[id].backprop = [id, a, b](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      if (g.wants(a)) g.accumulate(a, firank::matmul_nt(go, g.value(b)));
      if (g.wants(b)) g.accumulate(b, firank::matmul_tn(g.value(a), go));
    };
    return id;
  }

  // a * b^T
  NodeId matmul_nt(NodeId a, NodeId b) {
    Tensor<Real> v = firank::matmul_nt(value(a), value(b));
    NodeId id = emit("matmul_nt", std::move(v), {a, b});
    nodes_[id].backprop = [id, a, b](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      if (g.wants(a)) g.accumulate(a, firank::matmul(go, g.value(b)));
      if (g.wants(b)) g.accumulate(b, firank::matmul_tn(go, g.value(a)));
    };
    return id;
  }

  // a * (rows [r0, r0+rows) of b)^T; the gradient scatters into that block.
  NodeId matmul_nt_rows(NodeId a, NodeId b, int64_t r0, int64_t rows) {
    const Tensor<Real>& bv = value(b);
    if (r0 < 0 || r0 + rows > bv.rows()) {
      throw DimensionError("matmul_nt_rows: block out of range");
    }
    Tensor<Real> block = Tensor<Real>::zeros({rows, bv.cols()});
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < bv.cols(); ++j) block.at(i, j) = bv.at(r0 + i, j);
    Tensor<Real> v = firank::matmul_nt(value(a), block);
    NodeId id = emit("matmul_nt_rows", std::move(v), {a, b});
    nodes_[id].backprop = [id, a, b, r0, rows](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      const Tensor<Real>& bv2 = g.value(b);
      if (g.wants(a)) {
        Tensor<Real> block(std::vector<int64_t>{rows, bv2.cols()},
                           std::vector<Real>(static_cast<size_t>(rows * bv2.cols())));
        for (int64_t i = 0; i < rows; ++i)
          for (int64_t j = 0; j < bv2.cols(); ++j)
            block.at(i, j) = bv2.at(r0 + i, j);
        g.accumulate(a, firank::matmul(go, block));
      }
      if (g.wants(b)) {
        Tensor<Real> gb = Tensor<Real>::zeros(bv2.shape);
        Tensor<Real> gblock = firank::matmul_tn(go, g.value(a));  // rows x cols(b)
        for (int64_t i = 0; i < rows; ++i)
          for (int64_t j = 0; j < bv2.cols(); ++j)
            gb.at(r0 + i, j) = gblock.at(i, j);
        g.accumulate(b, gb);
      }
    };
    return id;
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const int64_t m = value(parts[0]).rows();
    int64_t total = 0;
    for (NodeId p : parts) {
      if (value(p).rows() != m) throw DimensionError("concat_cols: row mismatch");
      total += value(p).cols();
    }
    Tensor<Real> v = Tensor<Real>::zeros({m, total});
    int64_t off = 0;
    for (NodeId p : parts) {
      const Tensor<Real>& pv = value(p);
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < pv.cols(); ++j) v.at(i, off + j) = pv.at(i, j);
      off += pv.cols();
    }
    NodeId id = emit("concat_cols", std::move(v), parts);
    std::vector<NodeId> ps = parts;
    nodes_[id].backprop = [id, ps](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      int64_t off2 = 0;
      for (NodeId p : ps) {
        const int64_t c = g.value(p).cols();
        if (g.wants(p)) {
          Tensor<Real> gp = Tensor<Real>::zeros({go.rows(), c});
          for (int64_t i = 0; i < go.rows(); ++i)
            for (int64_t j = 0; j < c; ++j) gp.at(i, j) = go.at(i, off2 + j);
          g.accumulate(p, gp);
        }
        off2 += c;
      }
    };
    return id;
  }

  NodeId slice_cols(NodeId a, int64_t c0, int64_t n) {
    const Tensor<Real>& av = value(a);
    if (c0 < 0 || c0 + n > av.cols()) throw DimensionError("slice_cols: out of range");
    Tensor<Real> v = Tensor<Real>::zeros({av.rows(), n});
    for (int64_t i = 0; i < av.rows(); ++i)
      for (int64_t j = 0; j < n; ++j) v.at(i, j) = av.at(i, c0 + j);
    NodeId id = emit("slice_cols", std::move(v), {a});
    nodes_[id].backprop = [id, a, c0, n](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> ga = Tensor<Real>::zeros(g.value(a).shape);
      for (int64_t i = 0; i < go.rows(); ++i)
        for (int64_t j = 0; j < n; ++j) ga.at(i, c0 + j) = go.at(i, j);
      g.accumulate(a, ga);
    };
    return id;
  }

  NodeId softmax_rows(NodeId a) {
    Tensor<Real> v = firank::softmax_rows(value(a));
    NodeId id = emit("softmax_rows", std::move(v), {a});
    nodes_[id].backprop = [id, a](Graph& g) {
      const Tensor<Real>& s = g.value(id);
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> ga = Tensor<Real>::zeros(s.shape);
      for (int64_t i = 0; i < s.rows(); ++i) {
        const Real* srow = s.row(i);
        const Real* grow = go.row(i);
        Real dot = 0;
        for (int64_t j = 0; j < s.cols(); ++j) dot += grow[j] * srow[j];
        Real* arow = ga.row(i);
        for (int64_t j = 0; j < s.cols(); ++j)
          arow[j] = srow[j] * (grow[j] - dot);
      }
      g.accumulate(a, ga);
    };
    return id;
  }

  NodeId gelu(NodeId a) {
    Tensor<Real> v = firank::gelu(value(a));
    NodeId id = emit("gelu", std::move(v), {a});
    nodes_[id].backprop = [id, a](Graph& g) {
      const Tensor<Real>& x = g.value(a);
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> ga = Tensor<Real>::zeros(x.shape);
      for (size_t i = 0; i < x.data.size(); ++i)
        ga.data[i] = go.data[i] * gelu_grad_scalar(x.data[i]);
      g.accumulate(a, ga);
    };
    return id;
  }

  // Per-row layer normalization with learned gain/shift (1 x n each).
  NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, Real eps = Real(1e-5)) {
    const Tensor<Real>& xv = value(x);
    const int64_t n = xv.cols();
    Tensor<Real> v = Tensor<Real>::zeros(xv.shape);
    const Real* gm = value(gamma).row(0);
    const Real* bt = value(beta).row(0);
    for (int64_t i = 0; i < xv.rows(); ++i) {
      const Real* xi = xv.row(i);
      Real mu = 0;
      for (int64_t j = 0; j < n; ++j) mu += xi[j];
      mu /= Real(n);
      Real var = 0;
      for (int64_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
      var /= Real(n);
      const Real inv = Real(1) / std::sqrt(var + eps);
      Real* vi = v.row(i);
      for (int64_t j = 0; j < n; ++j) vi[j] = (xi[j] - mu) * inv * gm[j] + bt[j];
    }
    NodeId id = emit("layer_norm", std::move(v), {x, gamma, beta});
    nodes_[id].backprop = [id, x, gamma, beta, eps](Graph& g) {
      const Tensor<Real>& xv2 = g.value(x);
      const Tensor<Real>& go = g.nodes_[id].grad;
      const Real* gm = g.value(gamma).row(0);
      const int64_t n = xv2.cols();
      Tensor<Real> gx = Tensor<Real>::zeros(xv2.shape);
      Tensor<Real> ggamma = Tensor<Real>::zeros({1, n});
      Tensor<Real> gbeta = Tensor<Real>::zeros({1, n});
      std::vector<Real> xhat(static_cast<size_t>(n));
      for (int64_t i = 0; i < xv2.rows(); ++i) {
        const Real* xi = xv2.row(i);
        const Real* goi = go.row(i);
        Real mu = 0;
        for (int64_t j = 0; j < n; ++j) mu += xi[j];
        mu /= Real(n);
        Real var = 0;
        for (int64_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= Real(n);
        const Real inv = Real(1) / std::sqrt(var + eps);
        Real mean_dxhat = 0, mean_dxhat_xhat = 0;
        for (int64_t j = 0; j < n; ++j) {
          xhat[static_cast<size_t>(j)] = (xi[j] - mu) * inv;
          const Real dxh = goi[j] * gm[j];
          mean_dxhat += dxh;
          mean_dxhat_xhat += dxh * xhat[static_cast<size_t>(j)];
        }
        mean_dxhat /= Real(n);
        mean_dxhat_xhat /= Real(n);
        Real* gxi = gx.row(i);
        for (int64_t j = 0; j < n; ++j) {
          const Real dxh = goi[j] * gm[j];
          gxi[j] = inv * (dxh - mean_dxhat -
                          xhat[static_cast<size_t>(j)] * mean_dxhat_xhat);
          ggamma.data[j] += goi[j] * xhat[static_cast<size_t>(j)];
          gbeta.data[j] += goi[j];
        }
      }
      g.accumulate(x, gx);
      if (g.wants(gamma)) g.accumulate(gamma, ggamma);
      if (g.wants(beta)) g.accumulate(beta, gbeta);
    };
    return id;
  }

  // scores[b,j] = inv_scale * <q[b,:], keys[j][b,:]>
  NodeId attention_scores(NodeId q, const std::vector<NodeId>& keys, Real inv_scale) {
    const Tensor<Real>& qv = value(q);
    const int64_t m = qv.rows(), dk = qv.cols();
    const int64_t L = static_cast<int64_t>(keys.size());
    Tensor<Real> v = Tensor<Real>::zeros({m, L});
    for (int64_t j = 0; j < L; ++j) {
      const Tensor<Real>& kv = value(keys[static_cast<size_t>(j)]);
      if (kv.rows() != m || kv.cols() != dk) {
        throw DimensionError("attention_scores: key shape mismatch");
      }
      for (int64_t b = 0; b < m; ++b) {
        const Real* qb = qv.row(b);
        const Real* kb = kv.row(b);
        Real acc = 0;
        for (int64_t t = 0; t < dk; ++t) acc += qb[t] * kb[t];
        v.at(b, j) = acc * inv_scale;
      }
    }
    std::vector<NodeId> parents = keys;
    parents.push_back(q);
    NodeId id = emit("attention_scores", std::move(v), parents);
    std::vector<NodeId> ks = keys;
    nodes_[id].backprop = [id, q, ks, inv_scale](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      const Tensor<Real>& qv2 = g.value(q);
      const int64_t m = qv2.rows(), dk = qv2.cols();
      if (g.wants(q)) {
        Tensor<Real> gq = Tensor<Real>::zeros(qv2.shape);
        for (int64_t j = 0; j < static_cast<int64_t>(ks.size()); ++j) {
          const Tensor<Real>& kv = g.value(ks[static_cast<size_t>(j)]);
          for (int64_t b = 0; b < m; ++b) {
            const Real gbj = go.at(b, j) * inv_scale;
            const Real* kb = kv.row(b);
            Real* gqb = gq.row(b);
            for (int64_t t = 0; t < dk; ++t) gqb[t] += gbj * kb[t];
          }
        }
        g.accumulate(q, gq);
      }
      for (int64_t j = 0; j < static_cast<int64_t>(ks.size()); ++j) {
        NodeId kj = ks[static_cast<size_t>(j)];
        if (!g.wants(kj)) continue;
        Tensor<Real> gk = Tensor<Real>::zeros(g.value(kj).shape);
        for (int64_t b = 0; b < m; ++b) {
          const Real gbj = go.at(b, j) * inv_scale;
          const Real* qb = qv2.row(b);
          Real* gkb = gk.row(b);
          for (int64_t t = 0; t < dk; ++t) gkb[t] += gbj * qb[t];
        }
        g.accumulate(kj, gk);
      }
    };
    return id;
  }

  // out[b,:] = sum_j att[b,j] * values[j][b,:]  (j ascending)
  NodeId attention_mix(NodeId att, const std::vector<NodeId>& values) {
    const Tensor<Real>& av = value(att);
    const int64_t m = av.rows();
    const int64_t L = static_cast<int64_t>(values.size());
    if (av.cols() != L) throw DimensionError("attention_mix: weight/value mismatch");
    const int64_t dv = value(values[0]).cols();
    Tensor<Real> v = Tensor<Real>::zeros({m, dv});
    for (int64_t j = 0; j < L; ++j) {
      const Tensor<Real>& vv = value(values[static_cast<size_t>(j)]);
      if (vv.rows() != m || vv.cols() != dv) {
        throw DimensionError("attention_mix: value shape mismatch");
      }
      for (int64_t b = 0; b < m; ++b) {
        const Real w = av.at(b, j);
        const Real* vb = vv.row(b);
        Real* ob = v.row(b);
        for (int64_t t = 0; t < dv; ++t) ob[t] += w * vb[t];
      }
    }
    std::vector<NodeId> parents = values;
    parents.push_back(att);
    NodeId id = emit("attention_mix", std::move(v), parents);
    std::vector<NodeId> vs = values;
    nodes_[id].backprop = [id, att, vs](Graph& g) {
      const Tensor<Real>& go = g.nodes_[id].grad;
      const Tensor<Real>& av2 = g.value(att);
      const int64_t m = av2.rows();
      const int64_t dv = go.cols();
      if (g.wants(att)) {
        Tensor<Real> ga = Tensor<Real>::zeros(av2.shape);
        for (int64_t j = 0; j < static_cast<int64_t>(vs.size()); ++j) {
          const Tensor<Real>& vv = g.value(vs[static_cast<size_t>(j)]);
          for (int64_t b = 0; b < m; ++b) {
            const Real* gb = go.row(b);
            const Real* vb = vv.row(b);
            Real acc = 0;
            for (int64_t t = 0; t < dv; ++t) acc += gb[t] * vb[t];
            ga.at(b, j) = acc;
          }
        }
        g.accumulate(att, ga);
      }
      for (int64_t j = 0; j < static_cast<int64_t>(vs.size()); ++j) {
        NodeId vj = vs[static_cast<size_t>(j)];
        if (!g.wants(vj)) continue;
        Tensor<Real> gv = Tensor<Real>::zeros(g.value(vj).shape);
        for (int64_t b = 0; b < m; ++b) {
          const Real w = av2.at(b, j);
          const Real* gb = go.row(b);
          Real* gvb = gv.row(b);
          for (int64_t t = 0; t < dv; ++t) gvb[t] += w * gb[t];
        }
        g.accumulate(vj, gv);
      }
    };
    return id;
  }

  // out[b,:] = table[ids[b],:]; the gradient scatter-adds rows in batch order.
  NodeId lookup_rows(NodeId table, std::vector<int64_t> ids) {
    const Tensor<Real>& tv = value(table);
    const int64_t m = static_cast<int64_t>(ids.size());
    Tensor<Real> v = Tensor<Real>::zeros({m, tv.cols()});
    for (int64_t b = 0; b < m; ++b) {
      const int64_t r = ids[static_cast<size_t>(b)];
      if (r < 0 || r >= tv.rows()) throw VocabError("lookup_rows: id out of range");
      for (int64_t j = 0; j < tv.cols(); ++j) v.at(b, j) = tv.at(r, j);
    }
    NodeId id = emit("lookup_rows", std::move(v), {table});
    nodes_[id].backprop = [id, table, ids = std::move(ids)](Graph& g) {
      if (!g.wants(table)) return;
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> gt = Tensor<Real>::zeros(g.value(table).shape);
      for (int64_t b = 0; b < go.rows(); ++b) {
        const int64_t r = ids[static_cast<size_t>(b)];
        const Real* grow = go.row(b);
        Real* trow = gt.row(r);
        for (int64_t j = 0; j < go.cols(); ++j) trow[j] += grow[j];
      }
      g.accumulate(table, gt);
    };
    return id;
  }

  // out[b,:] = mat[row,:] for every b; gradient is the column sum.
  NodeId broadcast_row(NodeId mat, int64_t row, int64_t batch) {
    const Tensor<Real>& mv = value(mat);
    if (row < 0 || row >= mv.rows()) throw DimensionError("broadcast_row: row out of range");
    Tensor<Real> v = Tensor<Real>::zeros({batch, mv.cols()});
    for (int64_t b = 0; b < batch; ++b)
      for (int64_t j = 0; j < mv.cols(); ++j) v.at(b, j) = mv.at(row, j);
    NodeId id = emit("broadcast_row", std::move(v), {mat});
    nodes_[id].backprop = [id, mat, row](Graph& g) {
      if (!g.wants(mat)) return;
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> gm = Tensor<Real>::zeros(g.value(mat).shape);
      for (int64_t b = 0; b < go.rows(); ++b) {
        const Real* grow = go.row(b);
        Real* mrow = gm.row(row);
        for (int64_t j = 0; j < go.cols(); ++j) mrow[j] += grow[j];
      }
      g.accumulate(mat, gm);
    };
    return id;
  }

  NodeId sigmoid(NodeId a) {
    Tensor<Real> v = value(a);
    for (Real& x : v.data) x = sigmoid_scalar(x);
    NodeId id = emit("sigmoid", std::move(v), {a});
    nodes_[id].backprop = [id, a](Graph& g) {
      const Tensor<Real>& s = g.value(id);
      const Tensor<Real>& go = g.nodes_[id].grad;
      Tensor<Real> ga = Tensor<Real>::zeros(s.shape);
      for (size_t i = 0; i < s.data.size(); ++i)
        ga.data[i] = go.data[i] * s.data[i] * (Real(1) - s.data[i]);
      g.accumulate(a, ga);
    };
    return id;
  }

  // Mean binary cross entropy over all entries of p against constant labels
  // in {0,1}.  Probabilities are clamped to [1e-7, 1-1e-7] before the logs;
  // entries that were clamped get zero gradient.
  NodeId logloss_mean(NodeId p, Tensor<Real> labels) {
    const Tensor<Real>& pv = value(p);
    if (!pv.same_shape(labels)) throw DataError("logloss_mean: shape mismatch");
    const Real lo = Real(1e-7), hi = Real(1) - Real(1e-7);
    const int64_t n = pv.size();
    Real acc = 0;
    for (int64_t i = 0; i < n; ++i) {
      Real pc = pv.data[static_cast<size_t>(i)];
      pc = pc < lo ? lo : (pc > hi ? hi : pc);
      const Real y = labels.data[static_cast<size_t>(i)];
      acc += -y * std::log(pc) - (Real(1) - y) * std::log(Real(1) - pc);
    }
    Tensor<Real> v({1, 1}, {acc / Real(n)});
    NodeId id = emit("logloss_mean", std::move(v), {p});
    nodes_[id].backprop = [id, p, labels = std::move(labels), lo, hi](Graph& g) {
      const Real gscale = g.nodes_[id].grad.data[0];
      const Tensor<Real>& pv2 = g.value(p);
      const int64_t n = pv2.size();
      Tensor<Real> gp = Tensor<Real>::zeros(pv2.shape);
      for (int64_t i = 0; i < n; ++i) {
        const Real praw = pv2.data[static_cast<size_t>(i)];
        if (praw < lo || praw > hi) continue;  // clamped region
        const Real y = labels.data[static_cast<size_t>(i)];
        gp.data[static_cast<size_t>(i)] =
            gscale * (-y / praw + (Real(1) - y) / (Real(1) - praw)) / Real(n);
      }
      g.accumulate(p, gp);
    };
    return id;
  }

  // Scalar sum of elementwise a .* weights (weights constant); handy for
  // building test losses out of any tensor-valued output.
  NodeId inner_const(NodeId a, Tensor<Real> weights) {
    const Tensor<Real>& av = value(a);
    if (!av.same_shape(weights)) throw DimensionError("inner_const: shape mismatch");
    Real acc = 0;
    for (size_t i = 0; i < av.data.size(); ++i) acc += av.data[i] * weights.data[i];
    Tensor<Real> v({1, 1}, {acc});
    NodeId id = emit("inner_const", std::move(v), {a});
    nodes_[id].backprop = [id, a, weights = std::move(weights)](Graph& g) {
      const Real gscale = g.nodes_[id].grad.data[0];
      Tensor<Real> ga = weights;
      for (Real& x : ga.data) x *= gscale;
      g.accumulate(a, ga);
    };
    return id;
  }

  NodeId sum_all(NodeId a) {
    const Tensor<Real>& av = value(a);
    Real acc = 0;
    for (Real x : av.data) acc += x;
    Tensor<Real> v({1, 1}, {acc});
    NodeId id = emit("sum_all", std::move(v), {a});
    nodes_[id].backprop = [id, a](Graph& g) {
      const Real gscale = g.nodes_[id].grad.data[0];
      Tensor<Real> ga = Tensor<Real>::full(g.value(a).shape, gscale);
      g.accumulate(a, ga);
    };
    return id;
  }

  // Reverse sweep from a scalar loss.  Gradients for every parameter
  // reachable from the loss are available afterwards via param_grads().
  void backward(NodeId loss) {
    if (loss < 0 || loss >= static_cast<NodeId>(nodes_.size())) {
      throw std::logic_error("backward: node not recorded on this tape");
    }
    if (nodes_[loss].value.size() != 1) {
      throw std::logic_error("backward: loss must be scalar");
    }
    accumulate(loss, Tensor<Real>::full(nodes_[loss].value.shape, Real(1)));
    for (NodeId id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.data.empty() || !n.backprop) continue;
      n.backprop(*this);
    }
    for (NodeId id : param_ids_) {
      if (!nodes_[id].grad.data.empty()) {
        check_finite(nodes_[id].grad, "gradient of " + nodes_[id].name);
      }
    }
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  NodeId push(Tensor<Real> v, bool needs, const std::vector<NodeId>& parents) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = needs;
    for (NodeId p : parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId emit(const char* what, Tensor<Real> v, const std::vector<NodeId>& parents) {
    check_finite(v, what);
    return push(std::move(v), false, parents);
  }

  bool wants(NodeId id) const { return nodes_[id].needs_grad; }

  void accumulate(NodeId id, const Tensor<Real>& g) {
    if (!nodes_[id].needs_grad) return;
    Tensor<Real>& slot = nodes_[id].grad;
    if (slot.data.empty()) {
      slot = g;
      return;
    }
    for (size_t i = 0; i < slot.data.size(); ++i) slot.data[i] += g.data[i];
  }

  std::vector<Node> nodes_;
  std::vector<NodeId> param_ids_;
};

// Central finite differences: (f(p + eps e_i) - f(p - eps e_i)) / (2 eps)
// per coordinate.  f must be deterministic.
template <class Real, class F>
Tensor<Real> fd_gradient(const F& f, const Tensor<Real>& p, Real eps) {
  if (!(eps > Real(0))) throw ConfigError("fd_gradient: eps must be positive");
  Tensor<Real> work = p;
  Tensor<Real> out = Tensor<Real>::zeros(p.shape);
  for (size_t i = 0; i < work.data.size(); ++i) {
    const Real orig = work.data[i];
    work.data[i] = orig + eps;
    const Real hi = f(work);
    work.data[i] = orig - eps;
    const Real lo = f(work);
    work.data[i] = orig;
    out.data[i] = (hi - lo) / (Real(2) * eps);
  }
  return out;
}

}  // namespace firank
