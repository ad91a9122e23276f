#include "firank/svd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "firank/error.hpp"
#include "firank/kernels.hpp"
#include "firank/rng.hpp"

namespace firank {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> singular_values(Tensor<double> m, int64_t count, uint64_t seed,
                                    double tol, int64_t max_iters) {
  if (m.rank() != 2) throw DimensionError("singular_values: rank-2 input required");
  const int64_t rows = m.rows(), cols = m.cols();
  count = std::min<int64_t>(count, std::min(rows, cols));
  std::vector<double> out;
  CounterRng rng(seed, 7001);

  std::vector<double> v(static_cast<size_t>(cols)), mv(static_cast<size_t>(rows)),
      mtmv(static_cast<size_t>(cols));
  double sigma_max = 0;
  for (int64_t k = 0; k < count; ++k) {
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    double nv = norm2(v);
    if (nv == 0) nv = 1;
    for (double& x : v) x /= nv;

    double sigma = 0;
    for (int64_t iter = 0; iter < max_iters; ++iter) {
      // mv = M v; mtmv = M^T mv
      for (int64_t i = 0; i < rows; ++i) {
        const double* mr = m.row(i);
        double acc = 0;
        for (int64_t j = 0; j < cols; ++j) acc += mr[j] * v[static_cast<size_t>(j)];
        mv[static_cast<size_t>(i)] = acc;
      }
      std::fill(mtmv.begin(), mtmv.end(), 0.0);
      for (int64_t i = 0; i < rows; ++i) {
        const double* mr = m.row(i);
        const double s = mv[static_cast<size_t>(i)];
        for (int64_t j = 0; j < cols; ++j) mtmv[static_cast<size_t>(j)] += mr[j] * s;
      }
      const double nn = norm2(mtmv);
      const double new_sigma = norm2(mv);
      if (nn == 0) {
        sigma = 0;
        break;
      }
      for (int64_t j = 0; j < cols; ++j) v[static_cast<size_t>(j)] = mtmv[static_cast<size_t>(j)] / nn;
      if (std::abs(new_sigma - sigma) <= tol * std::max(1.0, new_sigma)) {
        sigma = new_sigma;
        break;
      }
      sigma = new_sigma;
    }
    // One more application for the converged direction.
    for (int64_t i = 0; i < rows; ++i) {
      const double* mr = m.row(i);
      double acc = 0;
      for (int64_t j = 0; j < cols; ++j) acc += mr[j] * v[static_cast<size_t>(j)];
      mv[static_cast<size_t>(i)] = acc;
    }
    sigma = norm2(mv);
    out.push_back(sigma);
    sigma_max = std::max(sigma_max, sigma);
    if (sigma <= 1e-12 * std::max(1.0, sigma_max)) {
      // Remaining spectrum is numerically zero.
      while (static_cast<int64_t>(out.size()) < count) out.push_back(0.0);
      break;
    }
    // Deflate: M <- M - sigma * u v^T with u = mv / sigma.
    for (int64_t i = 0; i < rows; ++i) {
      double* mr = m.row(i);
      const double ui = mv[static_cast<size_t>(i)];
      for (int64_t j = 0; j < cols; ++j) mr[j] -= ui * v[static_cast<size_t>(j)];
    }
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

std::vector<double> singular_values_factored(const Tensor<double>& left,
                                             const Tensor<double>& right, int64_t count,
                                             int64_t max_elements, uint64_t seed) {
  if (left.rank() != 2 || right.rank() != 2 || left.cols() != right.cols()) {
    throw DimensionError("singular_values_factored: factor shapes do not match");
  }
  if (left.rows() * right.rows() > max_elements) {
    throw ConfigError("singular_values_factored: implied matrix of " +
                      std::to_string(left.rows() * right.rows()) +
                      " entries exceeds the materialization limit of " +
                      std::to_string(max_elements));
  }
  return singular_values(matmul_nt(left, right), count, seed);
}

std::string singular_values_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& per_head) {
  std::string out = "component,index,sigma\n";
  char buf[64];
  for (const auto& [name, values] : per_head) {
    for (size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", values[i]);
      out += name + "," + std::to_string(i) + "," + buf + "\n";
    }
  }
  return out;
}

}  // namespace firank
