#pragma once

#include <cstdint>
#include <vector>

namespace firank {

// Empirical-CDF normalizer for one dense feature: maps a raw value through
// the training distribution's rank function onto [0, 1].  Duplicated
// training values take their average rank; queries between knots are
// linearly interpolated; queries outside the fitted range clip to 0 or 1.
// A feature that was constant in training always maps to 0.5.
class EmpiricalCdf {
 public:
  static constexpr int64_t kMaxKnots = 4097;

  // Fits on training values (at least one, all finite).
  static EmpiricalCdf fit(std::vector<double> values);

  // Restores a fitted normalizer from stored knots/ranks.
  static EmpiricalCdf from_knots(std::vector<double> knots, std::vector<double> ranks);

  double normalize(double x) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& ranks() const { return ranks_; }

 private:
  std::vector<double> knots_;  // ascending unique training values
  std::vector<double> ranks_;  // average normalized rank per knot, in [0,1]
};

// One EmpiricalCdf per dense feature, fitted column-wise on the train split.
class DenseCdf {
 public:
  DenseCdf() = default;

  // columns[k][i] = value of dense feature k in training example i.
  static DenseCdf fit(const std::vector<std::vector<double>>& columns);

  int64_t feature_count() const { return static_cast<int64_t>(features_.size()); }

  const EmpiricalCdf& feature(int64_t k) const;

  // Normalizes one example's dense values in place order.
  std::vector<double> normalize(const std::vector<double>& raw) const;

  void add_feature(EmpiricalCdf cdf) { features_.push_back(std::move(cdf)); }

 private:
  std::vector<EmpiricalCdf> features_;
};

}  // namespace firank
