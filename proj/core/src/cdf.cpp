#include "firank/cdf.hpp"

#include <algorithm>
#include <cmath>

#include "firank/error.hpp"

namespace firank {

EmpiricalCdf EmpiricalCdf::fit(std::vector<double> values) {
  if (values.empty()) throw ConfigError("cdf: cannot fit on an empty column");
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("cdf: non-finite training value");
  }
  std::sort(values.begin(), values.end());
  const int64_t n = static_cast<int64_t>(values.size());

  EmpiricalCdf out;
  if (values.front() == values.back()) {
    // Constant feature: degenerate CDF, midpoint by convention.
    out.knots_ = {values.front()};
    out.ranks_ = {0.5};
    return out;
  }

  // Collapse duplicates to their average rank, normalized by n-1 so the
  // smallest distinct value maps to 0 and the largest to 1.
  std::vector<double> knots, ranks;
  int64_t i = 0;
  while (i < n) {
    int64_t j = i;
    while (j < n && values[j] == values[i]) ++j;
    knots.push_back(values[i]);
    ranks.push_back(0.5 * static_cast<double>(i + j - 1) / static_cast<double>(n - 1));
    i = j;
  }

  // Large fits are thinned to quantile knots (first/last kept exactly).
  if (static_cast<int64_t>(knots.size()) > kMaxKnots) {
    std::vector<double> tk, tr;
    const int64_t m = static_cast<int64_t>(knots.size());
    tk.reserve(kMaxKnots);
    tr.reserve(kMaxKnots);
    for (int64_t q = 0; q < kMaxKnots; ++q) {
      const int64_t idx = (q * (m - 1)) / (kMaxKnots - 1);
      if (!tk.empty() && tk.back() == knots[idx]) continue;
      tk.push_back(knots[idx]);
      tr.push_back(ranks[idx]);
    }
    knots = std::move(tk);
    ranks = std::move(tr);
  }

  out.knots_ = std::move(knots);
  out.ranks_ = std::move(ranks);
  return out;
}

EmpiricalCdf EmpiricalCdf::from_knots(std::vector<double> knots, std::vector<double> ranks) {
  if (knots.empty() || knots.size() != ranks.size()) {
    throw DataError("cdf: malformed stored normalizer");
  }
  EmpiricalCdf out;
  out.knots_ = std::move(knots);
  out.ranks_ = std::move(ranks);
  return out;
}

double EmpiricalCdf::normalize(double x) const {
  if (knots_.size() == 1) {
    return x == knots_[0] ? 0.5 : (x < knots_[0] ? 0.0 : 1.0);
  }
  if (x <= knots_.front()) return x < knots_.front() ? 0.0 : ranks_.front();
  if (x >= knots_.back()) return x > knots_.back() ? 1.0 : ranks_.back();
  // First knot strictly greater than x.
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const size_t hi = static_cast<size_t>(it - knots_.begin());
  const size_t lo = hi - 1;
  if (knots_[lo] == x) return ranks_[lo];
  const double w = (x - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return ranks_[lo] + w * (ranks_[hi] - ranks_[lo]);
}

DenseCdf DenseCdf::fit(const std::vector<std::vector<double>>& columns) {
  DenseCdf out;
  for (const auto& col : columns) out.features_.push_back(EmpiricalCdf::fit(col));
  return out;
}

const EmpiricalCdf& DenseCdf::feature(int64_t k) const {
  if (k < 0 || k >= feature_count()) {
    throw ConfigError("cdf: no normalization stats for requested feature");
  }
  return features_[static_cast<size_t>(k)];
}

std::vector<double> DenseCdf::normalize(const std::vector<double>& raw) const {
  if (static_cast<int64_t>(raw.size()) != feature_count()) {
    throw ConfigError("cdf: stats missing for some dense features");
  }
  std::vector<double> out(raw.size());
  for (size_t k = 0; k < raw.size(); ++k) {
    out[k] = features_[k].normalize(raw[k]);
  }
  return out;
}

}  // namespace firank
