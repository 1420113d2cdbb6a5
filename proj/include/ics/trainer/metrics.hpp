#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <nlohmann/json.hpp>

namespace ics::trainer {

// Positive-class binary metrics. A pair is predicted positive iff its score
// is strictly above the threshold; precision is 0 with no predicted
// positives, recall is 0 with no actual positives.
struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double latency_ms = 0.0;  // mean single-pair latency, when measured
  std::size_t samples = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  nlohmann::json to_json() const;
};

// Throws DataError on an empty set or mismatched lengths.
EvalReport classification_report(std::span<const double> scores, std::span<const double> labels,
                                  double threshold = 0.5);

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;  // nearest-rank percentiles
  std::size_t warmup = 0;
  std::size_t iterations = 0;

  nlohmann::json to_json() const;
};

// Times `call(i % inputs)` for `iterations` calls after max(warmup, 50)
// untimed calls.
LatencyStats bench_latency(const std::function<void(std::size_t)>& call, std::size_t inputs, std::size_t warmup,
                           std::size_t iterations);

// Nearest-rank percentile of unsorted samples, q in (0, 1].
double percentile(std::vector<double> samples, double q);

}  // namespace ics::trainer
