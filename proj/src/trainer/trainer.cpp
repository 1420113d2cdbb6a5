#include "ics/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/numerics/tape.hpp"
#include "ics/trainer/losses.hpp"

namespace ics::trainer {
namespace {

constexpr std::size_t kScoreChunk = 256;

using matcher::ForwardOptions;

// Objective for rows order[begin, end) in training mode.
using BatchObjective =
    std::function<nn::Tensor(const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                             const ForwardOptions& opts)>;
// Eval-mode validation scores.
using Scorer = std::function<std::vector<double>()>;

std::vector<std::vector<double>> snapshot(const std::vector<nn::Parameter>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void restore(const std::vector<nn::Parameter>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Tensor t = params[i].tensor;
    std::copy(values[i].begin(), values[i].end(), t.mutable_values().begin());
  }
}

double mean_bce(const std::vector<double>& scores, const std::vector<double>& labels) {
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += nn::binary_cross_entropy(labels[i], scores[i]);
  return sum / static_cast<double>(scores.size());
}

TrainRun run_loop(const std::string& phase, const std::vector<nn::Parameter>& params, const TrainConfig& config,
                  const Dataset& train, const Dataset& validation, const BatchObjective& objective,
                  const Scorer& validation_scores) {
  config.validate();
  if (train.empty()) throw DataError(phase + ": training set is empty");
  if (validation.empty()) throw DataError(phase + ": validation set is empty");

  TrainRun run;
  run.phase = phase;
  run.seed = config.seed;
  run.batch_size = config.batch_size;
  run.schedule = config.schedule;
  run.patience = config.patience;

  nn::AdamState state(params, nn::AdamOptions{config.schedule});
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto val_labels = validation.labels();

  double best = config.monitor == Monitor::kValidationF1 ? -1.0 : std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const auto end = std::min(order.size(), begin + config.batch_size);
      nn::zero_grad(params);
      nn::Tape tape;
      nn::Tape::Scope scope(tape);
      auto loss = objective(order, begin, end, ForwardOptions{true, &rng});
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingDivergedError(phase + ": loss became " + std::to_string(value) + " at epoch " +
                                    std::to_string(epoch) + ", step " + std::to_string(state.step + 1) +
                                    " (learning rate " + std::to_string(state.current_learning_rate()) + ")");
      }
      tape.backward(loss);
      nn::adam_step(params, state);
      loss_sum += value;
      ++batches;
    }
    nn::zero_grad(params);

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(batches);
    const auto scores = validation_scores();
    m.validation = classification_report(scores, val_labels, config.threshold);
    m.validation_loss = mean_bce(scores, val_labels);
    m.learning_rate = state.current_learning_rate();
    m.steps = state.step;
    run.history.push_back(m);

    const double current = config.monitor == Monitor::kValidationF1 ? m.validation.f1 : m.validation_loss;
    const bool improved = config.monitor == Monitor::kValidationF1 ? current > best : current < best;
    if (improved) {
      best = current;
      run.best_epoch = epoch;
      stale = 0;
      if (config.keep_best) best_values = snapshot(params);
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  run.steps = state.step;
  if (config.keep_best && !best_values.empty()) restore(params, best_values);
  return run;
}

nn::Tensor student_objective_l2(const matcher::StudentModel& model) {
  auto reg = model.regularized();
  return nn::l2_penalty(reg, model.config().l2);
}

nn::Tensor aspect_rows(const matcher::HybridModel& model, const Dataset& data, const std::vector<std::size_t>& order,
                       std::size_t begin, std::size_t end) {
  static thread_local std::vector<double> values;
  const auto len = model.schema().length();
  const auto missing = model.schema().encode({});
  values.clear();
  for (auto i = begin; i < end; ++i) {
    const auto& e = data.examples[order[i]];
    const auto& v = e.aspects ? e.aspects->values : missing.values;
    if (v.size() != len) throw DimensionError("example aspect vector does not match the hybrid schema");
    values.insert(values.end(), v.begin(), v.end());
  }
  return nn::Tensor({end - begin, len}, values);
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

template <typename Fn>
std::vector<double> score_chunks(const Dataset& data, Fn&& fn) {
  nn::NoGradGuard no_grad;
  const auto order = identity_order(data.size());
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t begin = 0; begin < data.size(); begin += kScoreChunk) {
    const auto end = std::min(data.size(), begin + kScoreChunk);
    auto part = fn(order, begin, end);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace
}  // namespace ics::trainer

namespace ics::nn {

void to_json(nlohmann::json& j, const LearningRateSchedule& s) {
  if (s.kind == LearningRateSchedule::Kind::kConstant) {
    j = {{"kind", "constant"}, {"initial", s.initial}};
  } else {
    j = {{"kind", "exponential"}, {"initial", s.initial}, {"decay_rate", s.decay_rate}, {"decay_steps", s.decay_steps}};
  }
}

void from_json(const nlohmann::json& j, LearningRateSchedule& s) {
  const auto kind = j.value("kind", std::string("constant"));
  const auto initial = j.value("initial", 1e-4);
  if (kind == "constant") s = LearningRateSchedule::constant(initial);
  else if (kind == "exponential") {
    s = LearningRateSchedule::exponential(initial, j.value("decay_rate", 0.95), j.value("decay_steps", 10000));
  } else {
    throw ConfigError("unknown learning-rate schedule '" + kind + "'");
  }
}

}  // namespace ics::nn

namespace ics::trainer {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(schedule.initial >= 0.0) || !std::isfinite(schedule.initial)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (workers == 0) throw ConfigError("workers must be at least 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"schedule", c.schedule},
       {"seed", c.seed},
       {"patience", c.patience},
       {"monitor", c.monitor == Monitor::kValidationF1 ? "validation_f1" : "validation_loss"},
       {"keep_best", c.keep_best},
       {"threshold", c.threshold},
       {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<nn::LearningRateSchedule>();
  else if (j.contains("learning_rate")) c.schedule = nn::LearningRateSchedule::constant(j.at("learning_rate"));
  c.seed = j.value("seed", c.seed);
  c.patience = j.value("patience", c.patience);
  if (j.contains("monitor")) {
    const auto m = j.at("monitor").get<std::string>();
    if (m == "validation_f1") c.monitor = Monitor::kValidationF1;
    else if (m == "validation_loss") c.monitor = Monitor::kValidationLoss;
    else throw ConfigError("unknown monitor '" + m + "'");
  }
  c.keep_best = j.value("keep_best", c.keep_best);
  c.threshold = j.value("threshold", c.threshold);
  c.workers = j.value("workers", c.workers);
}

nlohmann::json TrainRun::to_json() const {
  auto history_json = nlohmann::json::array();
  for (const auto& m : history) {
    history_json.push_back({{"epoch", m.epoch},
                            {"train_loss", m.train_loss},
                            {"validation_loss", m.validation_loss},
                            {"validation", m.validation.to_json()},
                            {"learning_rate", m.learning_rate},
                            {"steps", m.steps}});
  }
  return {{"phase", phase},       {"seed", seed},           {"batch_size", batch_size},
          {"schedule", schedule}, {"patience", patience},   {"best_epoch", best_epoch},
          {"steps", steps},       {"history", history_json}};
}

TrainRun train_supervised(matcher::StudentModel& model, const Dataset& train, const Dataset& validation,
                          const TrainConfig& config, const std::string& phase) {
  const auto params = model.parameters();
  return run_loop(
      phase, params, config, train, validation,
      [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end, const ForwardOptions& opts) {
        auto b = gather(train, order, begin, end);
        auto p = model.predict(model.batch(b.u), model.batch(b.s), opts);
        return nn::add(hard_loss(p, b.labels), student_objective_l2(model));
      },
      [&] { return score(model, validation); });
}

TrainRun train_teacher(matcher::StandInTeacher& teacher, const Dataset& train, const Dataset& validation,
                       const TrainConfig& config) {
  return train_supervised(teacher.network(), train, validation, config, "teacher");
}

PanelConfig PanelConfig::uniform(std::vector<const matcher::TeacherModel*> teachers) {
  PanelConfig p;
  p.lambdas.assign(teachers.size(), teachers.empty() ? 0.0 : 1.0 / static_cast<double>(teachers.size()));
  p.teachers = std::move(teachers);
  return p;
}

void PanelConfig::validate() const {
  if (teachers.empty()) throw ConfigError("the distillation panel needs at least one teacher");
  if (lambdas.size() != teachers.size()) throw ConfigError("one lambda per panel teacher is required");
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("panel lambdas must be finite and non-negative");
  }
  for (const auto* t : teachers) {
    if (!t) throw ConfigError("panel teacher is null");
  }
}

std::vector<std::vector<double>> teacher_targets(const PanelConfig& panel, const Dataset& data, std::size_t workers) {
  panel.validate();
  std::vector<std::vector<double>> out(panel.teachers.size(), std::vector<double>(data.size()));
  const auto order = identity_order(data.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t begin = lo; begin < hi; begin += kScoreChunk) {
      const auto end = std::min(hi, begin + kScoreChunk);
      auto b = gather(data, order, begin, end);
      for (std::size_t t = 0; t < panel.teachers.size(); ++t) {
        auto s = panel.teachers[t]->score_batch(b.u, b.s);
        std::copy(s.begin(), s.end(), out[t].begin() + static_cast<std::ptrdiff_t>(begin));
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, data.size()));
  if (workers == 1) {
    work(0, data.size());
    return out;
  }
  std::vector<std::thread> threads;
  const auto per = (data.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const auto lo = w * per, hi = std::min(data.size(), lo + per);
    if (lo < hi) threads.emplace_back(work, lo, hi);
  }
  for (auto& t : threads) t.join();
  return out;
}

TrainRun distill_student(matcher::StudentModel& student, const PanelConfig& panel, const Dataset& train,
                         const Dataset& validation, const TrainConfig& config) {
  panel.validate();
  const auto targets = teacher_targets(panel, train, config.workers);
  const auto params = student.parameters();
  std::vector<std::vector<double>> batch_targets(panel.teachers.size());
  return run_loop(
      "distill", params, config, train, validation,
      [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end, const ForwardOptions& opts) {
        auto b = gather(train, order, begin, end);
        for (std::size_t t = 0; t < targets.size(); ++t) {
          batch_targets[t].clear();
          for (auto i = begin; i < end; ++i) batch_targets[t].push_back(targets[t][order[i]]);
        }
        auto p = student.predict(student.batch(b.u), student.batch(b.s), opts);
        return nn::add(panel_loss(p, b.labels, batch_targets, panel.lambdas), student_objective_l2(student));
      },
      [&] { return score(student, validation); });
}

HybridTrainConfig::HybridTrainConfig() {
  stage1.epochs = 50;
  stage1.schedule = nn::LearningRateSchedule::constant(1e-3);
  stage1.patience = 3;
  stage1.monitor = Monitor::kValidationLoss;
  stage2.epochs = 10;
  stage2.schedule = nn::LearningRateSchedule::exponential(1e-4, 0.95, 10000);
  stage2.monitor = Monitor::kValidationF1;
}

void to_json(nlohmann::json& j, const HybridTrainConfig& c) { j = {{"stage1", c.stage1}, {"stage2", c.stage2}}; }

void from_json(const nlohmann::json& j, HybridTrainConfig& c) {
  if (j.contains("stage1")) from_json(j.at("stage1"), c.stage1);
  if (j.contains("stage2")) from_json(j.at("stage2"), c.stage2);
}

nlohmann::json HybridTrainResult::to_json() const {
  return {{"stage1", stage1.to_json()},
          {"stage2", stage2.to_json()},
          {"student_hash_before", student_hash_before},
          {"student_hash_after_stage1", student_hash_after_stage1}};
}

HybridTrainResult train_hybrid(matcher::HybridModel& model, const Dataset& train, const Dataset& validation,
                               const HybridTrainConfig& config) {
  if (!train.has_aspects()) throw ConfigError("hybrid training needs aspect data on the training examples");
  auto objective = [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                       const ForwardOptions& opts) {
    auto b = gather(train, order, begin, end);
    const auto& student = model.student();
    auto p = model.predict(student.batch(b.u), student.batch(b.s), aspect_rows(model, train, order, begin, end), opts);
    auto reg = model.regularized();
    return nn::add(hard_loss(p, b.labels), nn::l2_penalty(reg, model.config().l2));
  };
  auto validate = [&] { return score(model, validation); };

  HybridTrainResult result;
  result.student_hash_before = parameter_hash(model.student_parameters());
  model.set_student_frozen(true);
  result.stage1 = run_loop("hybrid-stage1", model.parameters(), config.stage1, train, validation, objective, validate);
  result.student_hash_after_stage1 = parameter_hash(model.student_parameters());
  model.set_student_frozen(false);
  result.stage2 = run_loop("hybrid-stage2", model.parameters(), config.stage2, train, validation, objective, validate);
  return result;
}

std::vector<double> score(const matcher::StudentModel& model, const Dataset& data) {
  return score_chunks(data, [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    auto b = gather(data, order, begin, end);
    auto p = model.predict(model.batch(b.u), model.batch(b.s), ForwardOptions{});
    return std::vector<double>(p.values().begin(), p.values().end());
  });
}

std::vector<double> score(const matcher::TeacherModel& model, const Dataset& data) {
  return score_chunks(data, [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    auto b = gather(data, order, begin, end);
    return model.score_batch(b.u, b.s);
  });
}

std::vector<double> score(const matcher::HybridModel& model, const Dataset& data) {
  return score_chunks(data, [&](const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    auto b = gather(data, order, begin, end);
    const auto& student = model.student();
    auto p = model.predict(student.batch(b.u), student.batch(b.s), aspect_rows(model, data, order, begin, end),
                           ForwardOptions{});
    return std::vector<double>(p.values().begin(), p.values().end());
  });
}

LatencyStats bench_latency(const matcher::StudentModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations) {
  return bench_latency(
      [&](std::size_t i) { (void)model.predict(pairs.examples[i].u, pairs.examples[i].s); }, pairs.size(), warmup,
      iterations);
}

LatencyStats bench_latency(const matcher::TeacherModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations) {
  return bench_latency(
      [&](std::size_t i) { (void)model.score(pairs.examples[i].u, pairs.examples[i].s); }, pairs.size(), warmup,
      iterations);
}

LatencyStats bench_latency(const matcher::HybridModel& model, const Dataset& pairs, std::size_t warmup,
                           std::size_t iterations) {
  const auto missing = model.schema().encode({});
  return bench_latency(
      [&](std::size_t i) {
        const auto& e = pairs.examples[i];
        (void)model.predict(e.u, e.s, e.aspects ? *e.aspects : missing);
      },
      pairs.size(), warmup, iterations);
}

std::uint64_t parameter_hash(std::span<const nn::Parameter> params) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& p : params) {
    hash_bytes(h, p.name.data(), p.name.size());
    for (auto d : p.tensor.shape()) hash_bytes(h, &d, sizeof d);
    auto v = p.tensor.values();
    hash_bytes(h, v.data(), v.size_bytes());
  }
  return h;
}

}  // namespace ics::trainer
