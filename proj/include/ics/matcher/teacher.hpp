#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ics/matcher/student.hpp"

namespace ics::matcher {

enum class LatencyClass { kLight, kMedium, kHeavy };

std::string to_string(LatencyClass c);
LatencyClass latency_class_from_string(const std::string& s);

// Anything that scores (utterance, scenario) pairs with a probability can sit
// on the distillation panel. score() must be deterministic and in (0, 1).
class TeacherModel {
 public:
  virtual ~TeacherModel() = default;
  virtual const std::string& id() const = 0;
  virtual LatencyClass latency_class() const = 0;
  virtual double score(const std::vector<std::string>& u, const std::vector<std::string>& s) const = 0;
  // Batched scoring; the default loops over score().
  virtual std::vector<double> score_batch(const std::vector<const std::vector<std::string>*>& u,
                                          const std::vector<const std::vector<std::string>*>& s) const;
};

// High-capacity stand-in built on the student architecture.
class StandInTeacher final : public TeacherModel {
 public:
  StandInTeacher(std::string id, StudentModel network, LatencyClass latency = LatencyClass::kHeavy);

  const std::string& id() const override { return id_; }
  LatencyClass latency_class() const override { return latency_; }
  double score(const std::vector<std::string>& u, const std::vector<std::string>& s) const override;
  std::vector<double> score_batch(const std::vector<const std::vector<std::string>*>& u,
                                  const std::vector<const std::vector<std::string>*>& s) const override;

  StudentModel& network() noexcept { return network_; }
  const StudentModel& network() const noexcept { return network_; }

 private:
  std::string id_;
  StudentModel network_;
  LatencyClass latency_;
};

struct TeacherSpec {
  std::string id;
  StudentConfig config;
};

// The bundled panel: kernel sets {1,2,3}, {2,3,4,5} and {3,4,5,6,7} at
// `channels` output channels each; other fields come from `base`.
std::vector<TeacherSpec> bundled_teacher_specs(const StudentConfig& base, std::size_t channels = 256);

}  // namespace ics::matcher
