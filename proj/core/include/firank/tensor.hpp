#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "firank/error.hpp"
#include "firank/rng.hpp"

namespace firank {

enum class Dtype { f32, f64 };

template <class Real>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<float>() {
  return Dtype::f32;
}
template <>
constexpr Dtype dtype_of<double>() {
  return Dtype::f64;
}

inline const char* dtype_name(Dtype d) {
  return d == Dtype::f32 ? "f32" : "f64";
}

// Dense row-major tensor.  Rank is usually 2 (rows x cols); rank 3 is used
// only as a container for stacked attention grids.
template <class Real>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<Real> data;

  Tensor() = default;
  Tensor(std::vector<int64_t> s, std::vector<Real> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != size()) {
      throw DimensionError("tensor data length does not match shape");
    }
  }

  static Tensor zeros(std::vector<int64_t> s) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return Tensor(std::move(s), std::vector<Real>(static_cast<size_t>(n), Real(0)));
  }

  static Tensor full(std::vector<int64_t> s, Real v) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return Tensor(std::move(s), std::vector<Real>(static_cast<size_t>(n), v));
  }

  int64_t size() const {
    return std::accumulate(shape.begin(), shape.end(), int64_t{1},
                           [](int64_t a, int64_t b) { return a * b; });
  }

  int64_t rank() const { return static_cast<int64_t>(shape.size()); }

  int64_t rows() const {
    if (rank() != 2) throw DimensionError("rows() requires a rank-2 tensor");
    return shape[0];
  }
  int64_t cols() const {
    if (rank() != 2) throw DimensionError("cols() requires a rank-2 tensor");
    return shape[1];
  }

  Real& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
  const Real& at(int64_t r, int64_t c) const {
    return data[static_cast<size_t>(r * shape[1] + c)];
  }

  Real* row(int64_t r) { return data.data() + r * shape[1]; }
  const Real* row(int64_t r) const { return data.data() + r * shape[1]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (Real v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <class Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data.size());
    for (size_t i = 0; i < data.size(); ++i) out[i] = static_cast<Other>(data[i]);
    return Tensor<Other>(shape, std::move(out));
  }
};

template <class Real>
void check_finite(const Tensor<Real>& t, const std::string& what) {
  if (!t.all_finite()) {
    throw NumericError("non-finite values in " + what);
  }
}

// Gradient of one parameter; shape always matches the owning parameter.
template <class Real>
struct Grad {
  std::string param;
  Tensor<Real> value;
};

// Uniform fill in [lo, hi) from the given stream.
template <class Real>
void fill_uniform(Tensor<Real>& t, CounterRng& rng, double lo, double hi) {
  for (Real& v : t.data) v = static_cast<Real>(rng.uniform(lo, hi));
}

}  // namespace firank
