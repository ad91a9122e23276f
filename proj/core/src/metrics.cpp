#include "firank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "firank/error.hpp"

namespace firank {

double auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) throw DataError("auc: length mismatch");
  if (scores.empty()) throw DataError("auc: empty input");
  const int64_t n = static_cast<int64_t>(scores.size());

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return scores[static_cast<size_t>(a)] < scores[static_cast<size_t>(b)];
  });

  // Average ranks over tied groups (1-based ranks).
  int64_t n_pos = 0;
  double rank_sum_pos = 0;
  int64_t i = 0;
  while (i < n) {
    int64_t j = i;
    while (j < n && scores[static_cast<size_t>(order[static_cast<size_t>(j)])] ==
                        scores[static_cast<size_t>(order[static_cast<size_t>(i)])]) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + j + 1);  // (i+1 + j)/2
    for (int64_t k = i; k < j; ++k) {
      if (labels[static_cast<size_t>(order[static_cast<size_t>(k)])] != 0) {
        ++n_pos;
        rank_sum_pos += avg_rank;
      }
    }
    i = j;
  }
  const int64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auc: needs at least one positive and one negative label");
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(const std::vector<double>& probs, const std::vector<uint8_t>& labels) {
  if (probs.size() != labels.size()) throw DataError("logloss: length mismatch");
  if (probs.empty()) throw DataError("logloss: empty input");
  const double lo = 1e-7, hi = 1.0 - 1e-7;
  double acc = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    p = p < lo ? lo : (p > hi ? hi : p);
    acc += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(probs.size());
}

}  // namespace firank
