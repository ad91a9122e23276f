#pragma once

#include <cstdint>
#include <vector>

#include "firank/tensor.hpp"

namespace firank {

// Leading singular values by power iteration on M^T M with deflation.
// Stops a value early once it falls below ~1e-12 * sigma_max (the remaining
// spectrum is reported as zero).  Deterministic for a fixed seed.
std::vector<double> singular_values(Tensor<double> m, int64_t count,
                                    uint64_t seed = 1234, double tol = 1e-9,
                                    int64_t max_iters = 10000);

// Singular values of the implied dense map left * right^T.  The product is
// materialized (desk scale only): refuses beyond max_elements entries.
std::vector<double> singular_values_factored(const Tensor<double>& left,
                                             const Tensor<double>& right,
                                             int64_t count,
                                             int64_t max_elements = 1 << 24,
                                             uint64_t seed = 1234);

std::string singular_values_csv(const std::vector<std::pair<std::string, std::vector<double>>>& per_head);

}  // namespace firank
