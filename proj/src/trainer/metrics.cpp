#include "ics/trainer/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "ics/errors.hpp"

namespace ics::trainer {

nlohmann::json EvalReport::to_json() const {
  return {{"accuracy", accuracy}, {"precision", precision}, {"recall", recall}, {"f1", f1},
          {"latency_ms", latency_ms}, {"samples", samples}, {"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
}

EvalReport classification_report(std::span<const double> scores, std::span<const double> labels, double threshold) {
  if (scores.empty()) throw DataError("cannot evaluate on an empty set");
  if (scores.size() != labels.size()) throw DataError("score and label counts differ");
  EvalReport r;
  r.samples = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] >= 0.5;
    if (predicted && actual) ++r.tp;
    else if (predicted) ++r.fp;
    else if (actual) ++r.fn;
    else ++r.tn;
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  r.accuracy = d(r.tp + r.tn) / d(r.samples);
  r.precision = r.tp + r.fp ? d(r.tp) / d(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn ? d(r.tp) / d(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

nlohmann::json LatencyStats::to_json() const {
  return {{"mean_ms", mean_ms}, {"p50_ms", p50_ms}, {"p99_ms", p99_ms}, {"warmup", warmup}, {"iterations", iterations}};
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw DataError("percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

LatencyStats bench_latency(const std::function<void(std::size_t)>& call, std::size_t inputs, std::size_t warmup,
                           std::size_t iterations) {
  if (inputs == 0 || iterations == 0) throw DataError("latency benchmark needs inputs and iterations");
  LatencyStats s;
  s.warmup = std::max<std::size_t>(warmup, 50);
  s.iterations = iterations;
  for (std::size_t i = 0; i < s.warmup; ++i) call(i % inputs);
  std::vector<double> ms;
  ms.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto start = std::chrono::steady_clock::now();
    call(i % inputs);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  double sum = 0;
  for (double x : ms) sum += x;
  s.mean_ms = sum / static_cast<double>(ms.size());
  s.p50_ms = percentile(ms, 0.5);
  s.p99_ms = percentile(ms, 0.99);
  return s;
}

}  // namespace ics::trainer
