#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace firank {

struct BenchResult {
  std::string label;
  int64_t repeats = 0;
  double median_ms = 0;
  double p95_ms = 0;
  bool low_confidence = false;  // repeats == 1
  double rel_to_baseline = 0;   // 0 until normalized
};

// Runs fn `warmup` times unmeasured, then `repeats` measured times; reports
// the median and p95 wall time of one call.
BenchResult bench_forward(const std::string& label, const std::function<void()>& fn,
                          int64_t repeats, int64_t warmup = 1);

// Fills rel_to_baseline = median / median(baseline_label).
void normalize_against(std::vector<BenchResult>& results, const std::string& baseline_label);

// Least-squares slope of log2(y) against log2(x).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

std::string bench_results_csv(const std::vector<BenchResult>& results);
std::string bench_results_json(const std::vector<BenchResult>& results);

}  // namespace firank
