#pragma once

#include <cmath>
#include <cstdint>

#include "firank/tensor.hpp"

namespace firank {

// All kernels accumulate in a fixed order so results are bit-deterministic:
// every output element is a left-to-right sum over its contraction index.
// matmul is blocked over output columns for speed, but the per-element
// accumulation order is identical to the naive i/j/k triple loop.

namespace detail {
inline constexpr int64_t kColBlock = 16;
}

// out[i,j] = sum_k a[i,k] * b[k,j]
template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents do not match");
  }
  const int64_t m = a.rows(), kk = a.cols(), n = b.cols();
  Tensor<Real> out = Tensor<Real>::zeros({m, n});
  constexpr int64_t JB = detail::kColBlock;
  for (int64_t i = 0; i < m; ++i) {
    const Real* arow = a.row(i);
    Real* orow = out.row(i);
    int64_t j0 = 0;
    for (; j0 + JB <= n; j0 += JB) {
      Real acc[JB] = {};
      for (int64_t k = 0; k < kk; ++k) {
        const Real aik = arow[k];
        const Real* brow = b.row(k) + j0;
        for (int64_t u = 0; u < JB; ++u) acc[u] += aik * brow[u];
      }
      for (int64_t u = 0; u < JB; ++u) orow[j0 + u] = acc[u];
    }
    for (; j0 < n; ++j0) {
      Real acc = 0;
      for (int64_t k = 0; k < kk; ++k) acc += arow[k] * b.at(k, j0);
      orow[j0] = acc;
    }
  }
  return out;
}

// out[i,j] = sum_k a[i,k] * b[j,k]   (a * b^T)
template <class Real>
Tensor<Real> matmul_nt(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner extents do not match");
  }
  const int64_t m = a.rows(), kk = a.cols(), n = b.rows();
  Tensor<Real> out = Tensor<Real>::zeros({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const Real* arow = a.row(i);
    Real* orow = out.row(i);
    int64_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const Real* b0 = b.row(j);
      const Real* b1 = b.row(j + 1);
      const Real* b2 = b.row(j + 2);
      const Real* b3 = b.row(j + 3);
      Real a0 = 0, a1 = 0, a2 = 0, a3 = 0;
      for (int64_t k = 0; k < kk; ++k) {
        const Real aik = arow[k];
        a0 += aik * b0[k];
        a1 += aik * b1[k];
        a2 += aik * b2[k];
        a3 += aik * b3[k];
      }
      orow[j] = a0;
      orow[j + 1] = a1;
      orow[j + 2] = a2;
      orow[j + 3] = a3;
    }
    for (; j < n; ++j) {
      const Real* brow = b.row(j);
      Real acc = 0;
      for (int64_t k = 0; k < kk; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

// out[i,j] = sum_k a[k,i] * b[k,j]   (a^T * b; k runs over rows, ascending)
template <class Real>
Tensor<Real> matmul_tn(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: inner extents do not match");
  }
  const int64_t m = a.cols(), kk = a.rows(), n = b.cols();
  Tensor<Real> out = Tensor<Real>::zeros({m, n});
  constexpr int64_t JB = detail::kColBlock;
  for (int64_t i = 0; i < m; ++i) {
    Real* orow = out.row(i);
    int64_t j0 = 0;
    for (; j0 + JB <= n; j0 += JB) {
      Real acc[JB] = {};
      for (int64_t k = 0; k < kk; ++k) {
        const Real aki = a.at(k, i);
        const Real* brow = b.row(k) + j0;
        for (int64_t u = 0; u < JB; ++u) acc[u] += aki * brow[u];
      }
      for (int64_t u = 0; u < JB; ++u) orow[j0 + u] = acc[u];
    }
    for (; j0 < n; ++j0) {
      Real acc = 0;
      for (int64_t k = 0; k < kk; ++k) acc += a.at(k, i) * b.at(k, j0);
      orow[j0] = acc;
    }
  }
  return out;
}

template <class Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  Tensor<Real> out = Tensor<Real>::zeros({a.cols(), a.rows()});
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

// Row-wise softmax with max-shift; rows sum to 1 for any finite input.
template <class Real>
Tensor<Real> softmax_rows(const Tensor<Real>& x) {
  if (x.rank() != 2) throw DimensionError("softmax_rows: rank-2 input required");
  check_finite(x, "softmax_rows input");
  Tensor<Real> out = Tensor<Real>::zeros({x.rows(), x.cols()});
  for (int64_t i = 0; i < x.rows(); ++i) {
    const Real* xi = x.row(i);
    Real* oi = out.row(i);
    Real m = xi[0];
    for (int64_t j = 1; j < x.cols(); ++j) m = std::max(m, xi[j]);
    Real denom = 0;
    for (int64_t j = 0; j < x.cols(); ++j) {
      oi[j] = std::exp(xi[j] - m);
      denom += oi[j];
    }
    for (int64_t j = 0; j < x.cols(); ++j) oi[j] /= denom;
  }
  return out;
}

// Exact erf-based GELU: 0.5 * x * (1 + erf(x / sqrt(2))).
template <class Real>
Real gelu_scalar(Real x) {
  return Real(0.5) * x * (Real(1) + std::erf(x * Real(0.7071067811865475244)));
}

// d/dx GELU = Phi(x) + x * phi(x), with Phi the standard normal CDF.
template <class Real>
Real gelu_grad_scalar(Real x) {
  const Real phi = std::exp(Real(-0.5) * x * x) * Real(0.3989422804014326779);
  const Real Phi = Real(0.5) * (Real(1) + std::erf(x * Real(0.7071067811865475244)));
  return Phi + x * phi;
}

template <class Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
  Tensor<Real> out = x;
  for (Real& v : out.data) v = gelu_scalar(v);
  return out;
}

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
  Tensor<Real> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

// a (m x n) plus bias (1 x n) broadcast over rows; the only broadcast allowed.
template <class Real>
Tensor<Real> add_bias(const Tensor<Real>& a, const Tensor<Real>& bias) {
  if (bias.rank() != 2 || bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_bias: bias must be 1 x cols(a)");
  }
  Tensor<Real> out = a;
  for (int64_t i = 0; i < a.rows(); ++i) {
    Real* orow = out.row(i);
    const Real* brow = bias.row(0);
    for (int64_t j = 0; j < a.cols(); ++j) orow[j] += brow[j];
  }
  return out;
}

// Numerically stable logistic.
template <class Real>
Real sigmoid_scalar(Real x) {
  if (x >= Real(0)) {
    return Real(1) / (Real(1) + std::exp(-x));
  }
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

}  // namespace firank
