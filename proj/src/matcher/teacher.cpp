#include "ics/matcher/teacher.hpp"

#include "ics/errors.hpp"
#include "ics/numerics/ops.hpp"
#include "ics/numerics/tape.hpp"

namespace ics::matcher {

std::string to_string(LatencyClass c) {
  switch (c) {
    case LatencyClass::kLight: return "light";
    case LatencyClass::kMedium: return "medium";
    case LatencyClass::kHeavy: return "heavy";
  }
  return "heavy";
}

LatencyClass latency_class_from_string(const std::string& s) {
  if (s == "light") return LatencyClass::kLight;
  if (s == "medium") return LatencyClass::kMedium;
  if (s == "heavy") return LatencyClass::kHeavy;
  throw ConfigError("unknown latency class '" + s + "'");
}

std::vector<double> TeacherModel::score_batch(const std::vector<const std::vector<std::string>*>& u,
                                              const std::vector<const std::vector<std::string>*>& s) const {
  if (u.size() != s.size()) throw DimensionError("score_batch: utterance and scenario counts differ");
  std::vector<double> out;
  out.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out.push_back(score(*u[i], *s[i]));
  return out;
}

StandInTeacher::StandInTeacher(std::string id, StudentModel network, LatencyClass latency)
    : id_(std::move(id)), network_(std::move(network)), latency_(latency) {}

double StandInTeacher::score(const std::vector<std::string>& u, const std::vector<std::string>& s) const {
  return network_.predict(u, s);
}

std::vector<double> StandInTeacher::score_batch(const std::vector<const std::vector<std::string>*>& u,
                                                const std::vector<const std::vector<std::string>*>& s) const {
  if (u.size() != s.size()) throw DimensionError("score_batch: utterance and scenario counts differ");
  if (u.empty()) return {};
  nn::NoGradGuard no_grad;
  auto p = network_.predict(network_.batch(u), network_.batch(s), ForwardOptions{});
  return {p.values().begin(), p.values().end()};
}

std::vector<TeacherSpec> bundled_teacher_specs(const StudentConfig& base, std::size_t channels) {
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> kernel_sets{
      {"teacher-narrow", {1, 2, 3}}, {"teacher-mid", {2, 3, 4, 5}}, {"teacher-wide", {3, 4, 5, 6, 7}}};
  std::vector<TeacherSpec> out;
  for (const auto& [id, widths] : kernel_sets) {
    StudentConfig c = base;
    c.kernel_widths = widths;
    c.channels = channels;
    out.push_back({id, c});
  }
  return out;
}

}  // namespace ics::matcher
