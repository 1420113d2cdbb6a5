#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/matcher/hybrid.hpp"
#include "ics/matcher/teacher.hpp"
#include "ics/numerics/adam.hpp"
#include "ics/trainer/dataset.hpp"
#include "ics/trainer/metrics.hpp"

namespace ics::nn {

void to_json(nlohmann::json& j, const LearningRateSchedule& s);
void from_json(const nlohmann::json& j, LearningRateSchedule& s);

}  // namespace ics::nn

namespace ics::trainer {

enum class Monitor { kValidationF1, kValidationLoss };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  nn::LearningRateSchedule schedule = nn::LearningRateSchedule::constant(1e-4);
  std::uint64_t seed = 1;
  // Stop after this many epochs without improvement of `monitor`; 0 disables.
  std::size_t patience = 0;
  Monitor monitor = Monitor::kValidationF1;
  // Restore the parameters of the best monitored epoch at the end.
  bool keep_best = true;
  double threshold = 0.5;
  std::size_t workers = 1;  // threads for teacher soft-target precomputation

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean objective over the epoch's batches
  double validation_loss = 0.0;  // eval-mode BCE, no penalty
  EvalReport validation;
  double learning_rate = 0.0;  // rate the next step would use
  std::size_t steps = 0;  // optimizer steps completed so far
};

struct TrainRun {
  std::string phase;  // teacher | student | distill | hybrid-stage1 | hybrid-stage2
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  nn::LearningRateSchedule schedule;
  std::size_t patience = 0;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;

  nlohmann::json to_json() const;
};

// Plain hard-target training: mean BCE + L2 (model config coefficient).
TrainRun train_supervised(matcher::StudentModel& model, const Dataset& train, const Dataset& validation,
                          const TrainConfig& config, const std::string& phase = "student");
TrainRun train_teacher(matcher::StandInTeacher& teacher, const Dataset& train, const Dataset& validation,
                       const TrainConfig& config);

struct PanelConfig {
  std::vector<const matcher::TeacherModel*> teachers;
  std::vector<double> lambdas;

  // lambda_i = 1 / |panel|.
  static PanelConfig uniform(std::vector<const matcher::TeacherModel*> teachers);
  // Throws ConfigError on an empty panel, a length mismatch or a negative or
  // non-finite lambda.
  void validate() const;
};

// targets[i][r]: teacher i's eval-mode probability for example r. Work is
// split into contiguous ranges over `workers` threads; results are merged by
// example index, so the output does not depend on the thread count.
std::vector<std::vector<double>> teacher_targets(const PanelConfig& panel, const Dataset& data,
                                                 std::size_t workers = 1);

// Minimizes sum_i lambda_i BCE(teacher_i, p) + BCE(y, p) + L2. Teacher scores
// are computed once up front; teachers must be trained and stay unchanged.
TrainRun distill_student(matcher::StudentModel& student, const PanelConfig& panel, const Dataset& train,
                         const Dataset& validation, const TrainConfig& config);

struct HybridTrainConfig {
  // Student frozen, constant 1e-3, until validation loss stalls for 3 epochs.
  TrainConfig stage1;
  // Everything trainable, exponential decay 1e-4 * 0.95^(step / 10000).
  TrainConfig stage2;

  HybridTrainConfig();
};

void to_json(nlohmann::json& j, const HybridTrainConfig& c);
void from_json(const nlohmann::json& j, HybridTrainConfig& c);

struct HybridTrainResult {
  TrainRun stage1;
  TrainRun stage2;
  std::uint64_t student_hash_before = 0;
  std::uint64_t student_hash_after_stage1 = 0;

  nlohmann::json to_json() const;
};

// Throws ConfigError when no training example carries aspect data. Examples
// without aspects encode as all-missing.
HybridTrainResult train_hybrid(matcher::HybridModel& model, const Dataset& train, const Dataset& validation,
                               const HybridTrainConfig& config);

// Eval-mode scores for every example, batched.
std::vector<double> score(const matcher::StudentModel& model, const Dataset& data);
std::vector<double> score(const matcher::TeacherModel& model, const Dataset& data);
std::vector<double> score(const matcher::HybridModel& model, const Dataset& data);

template <typename Model>
EvalReport evaluate(const Model& model, const Dataset& data, double threshold = 0.5) {
  return classification_report(score(model, data), data.labels(), threshold);
}

// Single-pair eval-mode scoring latency over the dataset's pairs.
LatencyStats bench_latency(const matcher::StudentModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations);
LatencyStats bench_latency(const matcher::TeacherModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations);
LatencyStats bench_latency(const matcher::HybridModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations);

// FNV-1a over names, shapes and value bytes.
std::uint64_t parameter_hash(std::span<const nn::Parameter> params);

}  // namespace ics::trainer
