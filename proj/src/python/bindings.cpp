#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ics/cli/commands.hpp"
#include "ics/errors.hpp"
#include "ics/matcher/checkpoint.hpp"
#include "ics/service/service.hpp"
#include "ics/text/tokenizer.hpp"
#include "ics/trainer/losses.hpp"
#include "ics/trainer/metrics.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using nlohmann::json;

// JSON crosses the boundary as text; the Python package turns it into dicts.
namespace {

using Command = json (*)(const json&, const fs::path&);

std::string run(Command fn, const std::string& config, const fs::path& base_dir) {
  const auto parsed = json::parse(config);
  py::gil_scoped_release release;
  return fn(parsed, base_dir).dump();
}

double panel_loss(const std::vector<double>& probs, const std::vector<double>& labels,
                  const std::vector<std::vector<double>>& teacher_targets, const std::vector<double>& lambdas) {
  ics::nn::Tensor p({probs.size(), 1}, probs);
  return ics::trainer::panel_loss(p, labels, teacher_targets, lambdas).item();
}

class Service {
 public:
  explicit Service(const fs::path& config_path) {
    const auto config = ics::service::load_service_config(config_path);
    service_ = std::make_unique<ics::service::RecommendationService>(ics::service::load_bundle(config), config);
  }

  std::string open(const std::string& aspects) {
    const auto j = json::parse(aspects);
    std::optional<ics::matcher::AttributeMap> attrs;
    if (!j.is_null()) attrs = ics::matcher::attributes_from_json(j);
    return service_->open(attrs);
  }
  std::string recommend(const std::string& session, const std::string& text) {
    return service_->recommend(session, text).to_json().dump();
  }
  void feedback(const std::string& session, std::size_t turn, const std::string& outcome,
                const std::string& scenario_id) {
    service_->feedback(session, turn, ics::service::feedback_outcome_from_string(outcome), scenario_id);
  }
  void close(const std::string& session, bool resolved) { service_->close(session, resolved); }
  std::string metrics() const { return service_->metrics().to_json().dump(); }
  std::string catalog() const { return service_->catalog_json().dump(); }

 private:
  std::unique_ptr<ics::service::RecommendationService> service_;
};

}  // namespace

PYBIND11_MODULE(_ics, m) {
  m.doc() = "ICS-Assist core: data preparation, training, evaluation and serving";

  auto base = py::register_exception<ics::Error>(m, "IcsError");
  py::register_exception<ics::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ics::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ics::NotFoundError>(m, "NotFoundError", base.ptr());
  py::register_exception<ics::DataError>(m, "DataError", base.ptr());

  m.def("tokenize", [](const std::string& text) { return ics::text::tokenize(text); });
  m.def("panel_loss", &panel_loss, py::arg("probs"), py::arg("labels"), py::arg("teacher_targets"),
        py::arg("lambdas"));
  m.def(
      "classification_report",
      [](const std::vector<double>& scores, const std::vector<double>& labels, double threshold) {
        return ics::trainer::classification_report(scores, labels, threshold).to_json().dump();
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def(
      "predict_student",
      [](const fs::path& checkpoint, const fs::path& vocabulary, const std::string& u, const std::string& s) {
        auto vocab = std::make_shared<const ics::text::Vocabulary>(ics::text::Vocabulary::load(vocabulary));
        const auto model = ics::matcher::load_student(checkpoint, vocab);
        return model.predict(ics::text::tokenize(u), ics::text::tokenize(s));
      },
      py::arg("checkpoint"), py::arg("vocabulary"), py::arg("utterance"), py::arg("scenario"));

  const std::vector<std::pair<const char*, Command>> commands{
      {"gen_synthetic", &ics::cli::gen_synthetic},     {"prepare_data", &ics::cli::prepare_data},
      {"train_embeddings", &ics::cli::train_embeddings}, {"train_teacher", &ics::cli::train_teacher},
      {"distill", &ics::cli::distill},                 {"train_hybrid", &ics::cli::train_hybrid},
      {"evaluate", &ics::cli::evaluate},               {"bench_latency", &ics::cli::bench_latency},
  };
  for (const auto& [name, fn] : commands) {
    m.def(
        name, [fn = fn](const std::string& config, const fs::path& base_dir) { return run(fn, config, base_dir); },
        py::arg("config_json"), py::arg("base_dir"));
  }
  m.def(
      "replay_evaluate",
      [](const std::string& config, const fs::path& base_dir, const fs::path& replay, std::size_t k) {
        const auto parsed = json::parse(config);
        py::gil_scoped_release release;
        return ics::cli::replay_evaluate(parsed, base_dir, replay, k).dump();
      },
      py::arg("config_json"), py::arg("base_dir"), py::arg("replay"), py::arg("k") = 0);

  py::class_<Service>(m, "Service")
      .def(py::init<const fs::path&>(), py::arg("config_path"))
      .def("open", &Service::open, py::arg("aspects_json") = "null")
      .def("recommend", &Service::recommend, py::arg("session_id"), py::arg("text"))
      .def("feedback", &Service::feedback, py::arg("session_id"), py::arg("turn"), py::arg("outcome"),
           py::arg("scenario_id") = "")
      .def("close", &Service::close, py::arg("session_id"), py::arg("resolved"))
      .def("metrics", &Service::metrics)
      .def("catalog", &Service::catalog);
}
