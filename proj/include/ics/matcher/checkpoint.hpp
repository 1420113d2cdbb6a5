#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ics/matcher/hybrid.hpp"
#include "ics/matcher/teacher.hpp"

// Binary checkpoint container; layout documented in docs/checkpoint-format.md.
namespace ics::matcher {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::string kind;  // "student" | "teacher" | "hybrid"
  std::uint64_t vocab_hash = 0;
  std::size_t vocab_size = 0;
  nlohmann::json config;
  nlohmann::json meta;
};

struct RawCheckpoint {
  CheckpointHeader header;
  std::map<std::string, std::vector<double>> parameters;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                      std::span<const nn::Parameter> params);
// Throws ParseError on truncated or corrupt files and CheckpointError on a
// version mismatch.
RawCheckpoint read_checkpoint(const std::filesystem::path& path);
CheckpointHeader inspect_checkpoint(const std::filesystem::path& path);

// Overwrites every parameter by name; CheckpointError on a missing name or a
// size mismatch.
void assign_parameters(std::span<const nn::Parameter> params, const std::map<std::string, std::vector<double>>& values);

void save(const StudentModel& model, const std::filesystem::path& path);
void save(const StandInTeacher& teacher, const std::filesystem::path& path);
void save(const HybridModel& model, const std::filesystem::path& path);

// Each loader refuses (CheckpointError) a checkpoint of the wrong kind or one
// built against a different vocabulary.
StudentModel load_student(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab);
StandInTeacher load_teacher(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab);
HybridModel load_hybrid(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab);

}  // namespace ics::matcher
