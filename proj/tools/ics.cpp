#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "ics/cli/commands.hpp"
#include "ics/errors.hpp"
#include "ics/service/http.hpp"

namespace fs = std::filesystem;

namespace {

ics::service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void emit(const nlohmann::json& report, const std::string& report_path) {
  std::cout << report.dump(2) << std::endl;
  if (!report_path.empty()) {
    const fs::path p(report_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream(p) << report.dump(2) << '\n';
  }
}

int serve(const std::string& config_path) {
  const auto config = ics::service::load_service_config(config_path);
  ics::service::RecommendationService service(ics::service::load_bundle(config), config);
  ics::service::HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "ics: serving on http://" << config.host << ":" << port << std::endl;
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICS-Assist: intelligent customer service scenario recognition"};
  app.require_subcommand(1);

  using Command = std::function<nlohmann::json(const nlohmann::json&, const fs::path&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"gen-synthetic", "Generate a synthetic catalog, session logs and replay set", ics::cli::gen_synthetic},
      {"prepare-data", "Build train/validation/test triplets from session logs", ics::cli::prepare_data},
      {"train-embeddings", "Train skip-gram embeddings, the vocabulary and tf-idf", ics::cli::train_embeddings},
      {"train-teacher", "Fine-tune one stand-in teacher", ics::cli::train_teacher},
      {"distill", "Train the student against a teacher panel", ics::cli::distill},
      {"train-hybrid", "Two-stage hybrid training on top of a student", ics::cli::train_hybrid},
      {"evaluate", "Classification metrics of a checkpoint on a test split", ics::cli::evaluate},
      {"bench-latency", "Single-pair scoring latency of checkpoints", ics::cli::bench_latency},
  };

  std::string config_path, report_path, replay_path;
  std::size_t k = 0;
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", report_path, "Also write the JSON report here");
    handlers[sub] = fn;
  }
  auto* serve_cmd = app.add_subcommand("serve", "Run the recommendation HTTP service");
  serve_cmd->add_option("--config", config_path, "Service config file")->required()->check(CLI::ExistingFile);
  auto* replay_cmd = app.add_subcommand("replay-evaluate", "Replay labeled utterances through the pipeline");
  replay_cmd->add_option("--config", config_path, "Service config file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--replay", replay_path, "Replay JSON-lines file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--k", k, "Override the coarse-stage K");
  replay_cmd->add_option("--report", report_path, "Also write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve_cmd->parsed()) return serve(config_path);
    const auto config = ics::cli::read_config(config_path);
    const auto base = fs::path(config_path).parent_path();
    if (replay_cmd->parsed()) {
      emit(ics::cli::replay_evaluate(config, base, replay_path, k), report_path);
      return 0;
    }
    for (const auto& [sub, fn] : handlers) {
      if (sub->parsed()) {
        emit(fn(config, base), report_path);
        return 0;
      }
    }
  } catch (const ics::ConfigError& e) {
    std::cerr << "ics: configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ics: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
