#include "firank/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "firank/error.hpp"

namespace firank {

BenchResult bench_forward(const std::string& label, const std::function<void()>& fn,
                          int64_t repeats, int64_t warmup) {
  if (repeats < 1) throw ConfigError("bench: repeats must be >= 1");
  for (int64_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(repeats));
  for (int64_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  BenchResult r;
  r.label = label;
  r.repeats = repeats;
  r.median_ms = samples[samples.size() / 2];
  r.p95_ms = samples[static_cast<size_t>(
      std::min<double>(static_cast<double>(samples.size()) - 1,
                       std::ceil(0.95 * static_cast<double>(samples.size())) - 1))];
  r.low_confidence = repeats == 1;
  return r;
}

void normalize_against(std::vector<BenchResult>& results, const std::string& baseline_label) {
  double base = 0;
  for (const BenchResult& r : results) {
    if (r.label == baseline_label) base = r.median_ms;
  }
  if (base <= 0) throw ConfigError("bench: baseline '" + baseline_label + "' not found");
  for (BenchResult& r : results) r.rel_to_baseline = r.median_ms / base;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ConfigError("loglog_slope: need at least two points");
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double x = std::log2(xs[i]);
    const double y = std::log2(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string bench_results_csv(const std::vector<BenchResult>& results) {
  std::string out = "label,repeats,median_ms,p95_ms,rel_to_baseline,low_confidence\n";
  char buf[128];
  for (const BenchResult& r : results) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.6f,%.6f,%.6f,%d\n", r.label.c_str(),
                  static_cast<long long>(r.repeats), r.median_ms, r.p95_ms,
                  r.rel_to_baseline, r.low_confidence ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string bench_results_json(const std::vector<BenchResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchResult& r : results) {
    arr.push_back({{"label", r.label},
                   {"repeats", r.repeats},
                   {"median_ms", r.median_ms},
                   {"p95_ms", r.p95_ms},
                   {"rel_to_baseline", r.rel_to_baseline},
                   {"low_confidence", r.low_confidence}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace firank
