#include "ics/cli/commands.hpp"

#include <fstream>

#include "ics/data_prep/pipeline.hpp"
#include "ics/data_prep/synthetic.hpp"
#include "ics/errors.hpp"
#include "ics/matcher/checkpoint.hpp"
#include "ics/service/service.hpp"
#include "ics/text/skipgram.hpp"
#include "ics/text/tfidf.hpp"
#include "ics/text/tokenizer.hpp"
#include "ics/trainer/trainer.hpp"

namespace ics::cli {
namespace fs = std::filesystem;
namespace {

// Typed access to a command config with path resolution and errors that name
// the offending key.
class Config {
 public:
  Config(const nlohmann::json& j, fs::path base) : j_(j), base_(std::move(base)) {
    if (!j_.is_object()) throw ConfigError("command config must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const nlohmann::json& at(const std::string& key) const {
    if (!has(key)) throw ConfigError("config is missing '" + key + "'");
    return j_.at(key);
  }

  fs::path path(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a path string");
    fs::path p(v.get<std::string>());
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("'" + key + "': " + e.what());
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

 private:
  const nlohmann::json& j_;
  fs::path base_;
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::shared_ptr<const text::Vocabulary> load_vocab(const Config& c) {
  return std::make_shared<const text::Vocabulary>(text::Vocabulary::load(c.path("vocabulary")));
}

std::optional<text::EmbeddingTable> load_pretrained(const Config& c) {
  if (!c.has("embeddings")) return std::nullopt;
  return text::load_embeddings(c.path("embeddings"));
}

trainer::TrainConfig training(const Config& c) {
  return c.has("training") ? c.get<trainer::TrainConfig>("training") : trainer::TrainConfig{};
}

trainer::Dataset dataset(const Config& c, const std::string& key, const matcher::AspectSchema* schema = nullptr) {
  auto d = trainer::make_dataset(data::load_triplets(c.path(key)), schema);
  if (d.empty()) throw DataError("'" + key + "' has no usable pairs");
  return d;
}

std::vector<std::vector<std::string>> text_corpus(const Config& c) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& entry : data::load_catalog(c.path("catalog"))) corpus.push_back(text::tokenize(entry.description));
  if (c.has("logs")) {
    for (const auto& session : data::load_session_logs(c.path("logs"))) {
      for (const auto& u : session.utterances) {
        auto tokens = text::tokenize(u.text);
        if (!tokens.empty()) corpus.push_back(std::move(tokens));
      }
    }
  }
  if (c.has("triplets")) {
    for (const auto& t : data::load_triplets(c.path("triplets"))) corpus.push_back(text::tokenize(t.u));
  }
  return corpus;
}

nlohmann::json run_report(const trainer::TrainRun& run, const nlohmann::json& validation, const fs::path& output) {
  return {{"run", run.to_json()}, {"validation", validation}, {"checkpoint", output.string()}};
}

// Any checkpoint kind, loaded against one vocabulary.
struct AnyModel {
  std::string kind;
  std::optional<matcher::StudentModel> student;
  std::optional<matcher::StandInTeacher> teacher;
  std::optional<matcher::HybridModel> hybrid;

  const matcher::AspectSchema* schema() const { return hybrid ? &hybrid->schema() : nullptr; }
};

AnyModel load_any(const fs::path& path, std::shared_ptr<const text::Vocabulary> vocab) {
  AnyModel m;
  m.kind = matcher::inspect_checkpoint(path).kind;
  if (m.kind == "student") m.student.emplace(matcher::load_student(path, vocab));
  else if (m.kind == "teacher") m.teacher.emplace(matcher::load_teacher(path, vocab));
  else if (m.kind == "hybrid") m.hybrid.emplace(matcher::load_hybrid(path, vocab));
  else throw CheckpointError("unknown checkpoint kind '" + m.kind + "'");
  return m;
}

template <typename Fn>
auto visit(const AnyModel& m, Fn&& fn) {
  if (m.student) return fn(*m.student);
  if (m.teacher) return fn(static_cast<const matcher::TeacherModel&>(*m.teacher));
  return fn(*m.hybrid);
}

}  // namespace

nlohmann::json read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

nlohmann::json gen_synthetic(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto sc = c.get<data::SyntheticConfig>("synthetic", data::SyntheticConfig{});
  const auto out = c.path("out_dir");
  fs::create_directories(out);
  const auto corpus = data::generate_synthetic(sc);
  data::save_catalog(out / "catalog.jsonl", corpus.catalog);
  data::save_session_logs(out / "logs.jsonl", corpus.logs);
  data::save_replay(out / "replay.jsonl", corpus.replay);
  return {{"synthetic", sc},
          {"scenarios", corpus.catalog.size()},
          {"sessions", corpus.logs.size()},
          {"replay_items", corpus.replay.size()},
          {"files",
           {(out / "catalog.jsonl").string(), (out / "logs.jsonl").string(), (out / "replay.jsonl").string()}}};
}

nlohmann::json prepare_data(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto prep = c.get<data::PrepConfig>("prep", data::PrepConfig{});
  const auto prepared =
      data::prepare_dataset(data::load_session_logs(c.path("logs")), data::load_catalog(c.path("catalog")), prep);
  const auto out = c.path("out_dir");
  fs::create_directories(out);
  data::save_triplets(out / "train.jsonl", prepared.split.train);
  data::save_triplets(out / "validation.jsonl", prepared.split.validation);
  data::save_triplets(out / "test.jsonl", prepared.split.test);
  auto summary = prepared.summary();
  summary["prep"] = prep;
  std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  return summary;
}

nlohmann::json train_embeddings(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  text::SkipGramOptions sg;
  if (c.has("skipgram")) {
    const Config s(c.at("skipgram"), base_dir);
    sg.dim = s.get<std::size_t>("dim", sg.dim);
    sg.epochs = s.get<std::size_t>("epochs", sg.epochs);
    sg.window = s.get<std::size_t>("window", sg.window);
    sg.negatives = s.get<std::size_t>("negatives", sg.negatives);
    sg.learning_rate = s.get<double>("learning_rate", sg.learning_rate);
    sg.min_count = s.get<std::size_t>("min_count", sg.min_count);
    sg.seed = s.get<std::uint64_t>("seed", sg.seed);
  }
  const auto corpus = text_corpus(c);
  const auto out = c.path("out_dir");
  fs::create_directories(out);
  const auto vocab = text::Vocabulary::build(corpus);
  vocab.save(out / "vocab.json");
  const auto table = text::train_skipgram(corpus, sg);
  table.save(out / "embeddings.txt");
  const auto tfidf = text::fit_tfidf(corpus);
  tfidf.save(out / "tfidf.json");
  return {{"documents", corpus.size()},
          {"vocabulary_size", vocab.size()},
          {"embedding_rows", table.vocabulary().size()},
          {"dim", sg.dim},
          {"files",
           {(out / "vocab.json").string(), (out / "embeddings.txt").string(), (out / "tfidf.json").string()}}};
}

nlohmann::json train_teacher(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const Config t(c.at("teacher"), base_dir);
  const auto id = t.get<std::string>("id");
  matcher::StudentConfig network;
  bool found = false;
  const auto base = t.get<matcher::StudentConfig>("base_config", matcher::StudentConfig{});
  for (const auto& spec : matcher::bundled_teacher_specs(base, t.get<std::size_t>("channels", 256))) {
    if (spec.id == id) {
      network = spec.config;
      found = true;
    }
  }
  if (t.has("config")) {
    network = t.get<matcher::StudentConfig>("config");
  } else if (!found) {
    throw ConfigError("teacher '" + id + "' is not bundled; give its 'config'");
  }
  const auto latency = matcher::latency_class_from_string(t.get<std::string>("latency_class", "heavy"));

  const auto vocab = load_vocab(c);
  const auto pretrained = load_pretrained(c);
  nn::Rng rng(c.get<std::uint64_t>("model_seed", 1));
  matcher::StandInTeacher teacher(id, matcher::StudentModel(network, vocab, rng, pretrained ? &*pretrained : nullptr),
                                  latency);
  const auto train = dataset(c, "train");
  const auto validation = dataset(c, "validation");
  const auto run = trainer::train_teacher(teacher, train, validation, training(c));
  const auto output = c.path("output");
  ensure_parent(output);
  matcher::save(teacher, output);
  auto report = run_report(run, trainer::evaluate(teacher, validation).to_json(), output);
  report["teacher"] = {{"id", id}, {"latency_class", matcher::to_string(latency)}, {"config", network}};
  return report;
}

nlohmann::json distill(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto vocab = load_vocab(c);
  const auto pretrained = load_pretrained(c);
  nn::Rng rng(c.get<std::uint64_t>("model_seed", 1));
  matcher::StudentModel student(c.get<matcher::StudentConfig>("student", matcher::StudentConfig{}), vocab, rng,
                                pretrained ? &*pretrained : nullptr);
  const auto train = dataset(c, "train");
  const auto validation = dataset(c, "validation");
  const auto output = c.path("output");

  trainer::TrainRun run;
  nlohmann::json panel_json = nlohmann::json::array();
  if (c.get<bool>("hard_only", false)) {
    run = trainer::train_supervised(student, train, validation, training(c));
  } else {
    std::vector<matcher::StandInTeacher> teachers;
    for (const auto& p : c.get<std::vector<std::string>>("teachers", {})) {
      fs::path path(p);
      teachers.push_back(matcher::load_teacher(path.is_absolute() ? path : base_dir / path, vocab));
    }
    std::vector<const matcher::TeacherModel*> ptrs;
    for (const auto& t : teachers) {
      ptrs.push_back(&t);
      panel_json.push_back(t.id());
    }
    auto panel = trainer::PanelConfig::uniform(ptrs);
    if (c.has("lambdas")) panel.lambdas = c.get<std::vector<double>>("lambdas");
    run = trainer::distill_student(student, panel, train, validation, training(c));
    panel_json = {{"teachers", panel_json}, {"lambdas", panel.lambdas}};
  }
  ensure_parent(output);
  matcher::save(student, output);
  auto report = run_report(run, trainer::evaluate(student, validation).to_json(), output);
  report["panel"] = panel_json;
  return report;
}

nlohmann::json train_hybrid(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto vocab = load_vocab(c);
  const auto student = matcher::load_student(c.path("student_checkpoint"), vocab);
  const auto schema =
      c.has("schema") ? matcher::AspectSchema::from_json(c.at("schema")) : matcher::AspectSchema::default_schema();
  nn::Rng rng(c.get<std::uint64_t>("model_seed", 1));
  matcher::HybridModel hybrid(student, schema, c.get<matcher::HybridConfig>("hybrid", matcher::HybridConfig{}), rng);
  const auto train = dataset(c, "train", &schema);
  const auto validation = dataset(c, "validation", &schema);
  const auto stages = c.get<trainer::HybridTrainConfig>("stages", trainer::HybridTrainConfig{});
  const auto result = trainer::train_hybrid(hybrid, train, validation, stages);
  const auto output = c.path("output");
  ensure_parent(output);
  matcher::save(hybrid, output);
  return {{"result", result.to_json()},
          {"validation", trainer::evaluate(hybrid, validation).to_json()},
          {"checkpoint", output.string()}};
}

nlohmann::json evaluate(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto vocab = load_vocab(c);
  const auto model = load_any(c.path("checkpoint"), vocab);
  const auto test = dataset(c, "test", model.schema());
  const auto threshold = c.get<double>("threshold", 0.5);
  auto report = visit(model, [&](const auto& m) { return trainer::evaluate(m, test, threshold); });
  nlohmann::json out{{"kind", model.kind}, {"threshold", threshold}};
  if (c.has("bench")) {
    const Config b(c.at("bench"), base_dir);
    const auto stats = visit(model, [&](const auto& m) {
      return trainer::bench_latency(m, test, b.get<std::size_t>("warmup", 50), b.get<std::size_t>("iterations", 500));
    });
    report.latency_ms = stats.mean_ms;
    out["latency"] = stats.to_json();
  }
  out["report"] = report.to_json();
  return out;
}

nlohmann::json bench_latency(const nlohmann::json& config, const fs::path& base_dir) {
  const Config c(config, base_dir);
  const auto vocab = load_vocab(c);
  const auto warmup = c.get<std::size_t>("warmup", 50);
  const auto iterations = c.get<std::size_t>("iterations", 500);
  const auto triplets = data::load_triplets(c.path("pairs"));
  auto results = nlohmann::json::array();
  for (const auto& p : c.get<std::vector<std::string>>("checkpoints")) {
    fs::path path(p);
    if (!path.is_absolute()) path = base_dir / path;
    const auto model = load_any(path, vocab);
    const auto pairs = trainer::make_dataset(triplets, model.schema());
    if (pairs.empty()) throw DataError("'pairs' has no usable pairs");
    const auto stats = visit(model, [&](const auto& m) { return trainer::bench_latency(m, pairs, warmup, iterations); });
    results.push_back({{"checkpoint", path.string()}, {"kind", model.kind}, {"latency", stats.to_json()}});
  }
  return {{"warmup", std::max<std::size_t>(warmup, 50)}, {"iterations", iterations}, {"results", results}};
}

nlohmann::json replay_evaluate(const nlohmann::json& config, const fs::path& base_dir, const fs::path& replay,
                               std::size_t k) {
  auto sc = service::service_config_from_json(config, base_dir);
  if (k > 0) sc.k = k;
  const auto bundle = service::load_bundle(sc);
  return service::replay_evaluate(*bundle, data::load_replay(replay), sc.k, sc.threshold, sc.max_shown).to_json();
}

}  // namespace ics::cli
