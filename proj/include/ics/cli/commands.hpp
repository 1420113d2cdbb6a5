#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

// Config-file driven commands behind the `ics` tool. Each takes the parsed
// config, resolves relative paths against `base_dir` (the config file's
// directory) and returns a JSON report. Config schemas are documented in
// docs/cli.md.
namespace ics::cli {

nlohmann::json gen_synthetic(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json prepare_data(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json train_embeddings(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json train_teacher(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json distill(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json train_hybrid(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json evaluate(const nlohmann::json& config, const std::filesystem::path& base_dir);
nlohmann::json bench_latency(const nlohmann::json& config, const std::filesystem::path& base_dir);
// `config` is a service config; `k` overrides its K when non-zero.
nlohmann::json replay_evaluate(const nlohmann::json& config, const std::filesystem::path& base_dir,
                               const std::filesystem::path& replay, std::size_t k = 0);

// Reads a JSON file; ConfigError when it is missing or malformed.
nlohmann::json read_config(const std::filesystem::path& path);

}  // namespace ics::cli
