#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "firank/graph.hpp"
#include "firank/tensor.hpp"

namespace firank {

// Non-owning, ordered view over a model's parameter tensors.  The order is
// the canonical one: optimizer updates, checkpoints and finite-difference
// sweeps all walk it the same way.
template <class Real>
class ParamSet {
 public:
  struct Item {
    std::string name;
    Tensor<Real>* tensor;
  };

  void add(std::string name, Tensor<Real>& t) {
    items_.push_back({std::move(name), &t});
  }

  const std::vector<Item>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  Tensor<Real>* find(const std::string& name) const {
    for (const Item& it : items_) {
      if (it.name == name) return it.tensor;
    }
    return nullptr;
  }

  int64_t total_elements() const {
    int64_t n = 0;
    for (const Item& it : items_) n += it.tensor->size();
    return n;
  }

 private:
  std::vector<Item> items_;
};

// Weight init: uniform with variance 1/fan_in (zero bias).
template <class Real>
Tensor<Real> init_linear(int64_t fan_in, int64_t fan_out, CounterRng& rng) {
  Tensor<Real> t = Tensor<Real>::zeros({fan_in, fan_out});
  const double a = std::sqrt(3.0 / static_cast<double>(fan_in));
  fill_uniform(t, rng, -a, a);
  return t;
}

// Embedding init: uniform in [-1/sqrt(d), 1/sqrt(d)].
template <class Real>
Tensor<Real> init_embedding(int64_t rows, int64_t d, CounterRng& rng) {
  Tensor<Real> t = Tensor<Real>::zeros({rows, d});
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  fill_uniform(t, rng, -a, a);
  return t;
}

// Low-rank factor init: per-entry variance 1/sqrt(fan_in * r), so the
// implied product L * R^T matches the variance of a dense init with the
// same fan-in.
template <class Real>
Tensor<Real> init_factor(int64_t rows, int64_t rank, int64_t fan_in, CounterRng& rng) {
  Tensor<Real> t = Tensor<Real>::zeros({rows, rank});
  const double var = 1.0 / std::sqrt(static_cast<double>(fan_in) * static_cast<double>(rank));
  const double a = std::sqrt(3.0 * var);
  fill_uniform(t, rng, -a, a);
  return t;
}

// Two-layer transform x W1 + b1 -> GELU -> W2 + b2.
template <class Real>
struct FfnParams {
  Tensor<Real> w1, b1, w2, b2;

  static FfnParams make(int64_t in, int64_t hidden, int64_t out, CounterRng& rng) {
    FfnParams p;
    p.w1 = init_linear<Real>(in, hidden, rng);
    p.b1 = Tensor<Real>::zeros({1, hidden});
    p.w2 = init_linear<Real>(hidden, out, rng);
    p.b2 = Tensor<Real>::zeros({1, out});
    return p;
  }

  void collect(ParamSet<Real>& set, const std::string& prefix) {
    set.add(prefix + ".w1", w1);
    set.add(prefix + ".b1", b1);
    set.add(prefix + ".w2", w2);
    set.add(prefix + ".b2", b2);
  }
};

// Registered graph nodes for one FfnParams.
struct FfnNodes {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

template <class Real>
FfnNodes register_ffn(Graph<Real>& g, const FfnParams<Real>& p, const std::string& prefix) {
  FfnNodes n;
  n.w1 = g.param(p.w1, prefix + ".w1");
  n.b1 = g.param(p.b1, prefix + ".b1");
  n.w2 = g.param(p.w2, prefix + ".w2");
  n.b2 = g.param(p.b2, prefix + ".b2");
  return n;
}

template <class Real>
int build_ffn(Graph<Real>& g, const FfnNodes& n, int x) {
  int h = g.add_bias(g.matmul(x, n.w1), n.b1);
  h = g.gelu(h);
  return g.add_bias(g.matmul(h, n.w2), n.b2);
}

}  // namespace firank
