#include "ics/matcher/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "ics/errors.hpp"

namespace ics::matcher {
namespace {

constexpr char kMagic[8] = {'I', 'C', 'S', 'C', 'K', 'P', 'T', '1'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

  void read(void* dst, std::size_t n, const char* what) {
    if (n > buf_.size() - pos_) {
      throw ParseError("checkpoint " + path_ + " is truncated while reading " + what, 0);
    }
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get(const char* what) {
    T v;
    read(&v, sizeof(T), what);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parses everything up to the parameter blobs; leaves the reader positioned at
// the first blob.
nlohmann::json read_header(Reader& r, CheckpointHeader& header, const std::string& path) {
  char magic[8];
  r.read(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw ParseError(path + " is not a checkpoint file", 0);
  header.version = r.get<std::uint32_t>("version");
  if (header.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint " + path + " has format version " + std::to_string(header.version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const auto len = r.get<std::uint64_t>("header length");
  std::string text(static_cast<std::size_t>(std::min<std::uint64_t>(len, 1ull << 32)), '\0');
  if (len != text.size()) throw ParseError("checkpoint " + path + " has an implausible header length", 0);
  r.read(text.data(), text.size(), "header");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    header.kind = j.at("kind").get<std::string>();
    header.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
    header.vocab_size = j.at("vocab_size").get<std::size_t>();
    header.config = j.at("config");
    header.meta = j.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + " has a malformed header: " + e.what(), 0);
  }
  return j;
}

void check_compatible(const CheckpointHeader& h, const std::string& kind, const text::Vocabulary& vocab,
                      const std::filesystem::path& path) {
  if (h.kind != kind) {
    throw CheckpointError("checkpoint " + path.string() + " holds a " + h.kind + " model, expected " + kind);
  }
  if (h.vocab_hash != vocab.hash() || h.vocab_size != vocab.size()) {
    throw CheckpointError("checkpoint " + path.string() + " was built against a different vocabulary (size " +
                          std::to_string(h.vocab_size) + ", active vocabulary has " + std::to_string(vocab.size()) +
                          ")");
  }
}

CheckpointHeader header_for(const std::string& kind, const text::Vocabulary& vocab, nlohmann::json config,
                            nlohmann::json meta) {
  CheckpointHeader h;
  h.kind = kind;
  h.vocab_hash = vocab.hash();
  h.vocab_size = vocab.size();
  h.config = std::move(config);
  h.meta = std::move(meta);
  return h;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                      std::span<const nn::Parameter> params) {
  auto listing = nlohmann::json::array();
  for (const auto& p : params) listing.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  const nlohmann::json j{{"kind", header.kind},     {"vocab_hash", header.vocab_hash},
                         {"vocab_size", header.vocab_size}, {"config", header.config},
                         {"meta", header.meta},     {"parameters", listing}};
  const auto text = j.dump();

  std::string out(kMagic, sizeof kMagic);
  put(out, header.version);
  put(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  for (const auto& p : params) {
    auto v = p.tensor.values();
    out.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
  }
  put(out, fnv1a(out.data(), out.size()));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

RawCheckpoint read_checkpoint(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  Reader r(buf, path.string());
  RawCheckpoint raw;
  const auto j = read_header(r, raw.header, path.string());
  try {
    for (const auto& entry : j.at("parameters")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<nn::Shape>();
      std::vector<double> values(nn::shape_size(shape));
      r.read(values.data(), values.size() * sizeof(double), name.c_str());
      raw.parameters.emplace(name, std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + " has a malformed parameter listing: " + e.what(), 0);
  }
  const auto body = r.pos();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (r.pos() != buf.size()) throw ParseError("checkpoint " + path.string() + " has trailing bytes", 0);
  if (stored != fnv1a(buf.data(), body)) throw ParseError("checkpoint " + path.string() + " fails its checksum", 0);
  return raw;
}

CheckpointHeader inspect_checkpoint(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  Reader r(buf, path.string());
  CheckpointHeader h;
  read_header(r, h, path.string());
  return h;
}

void assign_parameters(std::span<const nn::Parameter> params,
                       const std::map<std::string, std::vector<double>>& values) {
  for (const auto& p : params) {
    auto it = values.find(p.name);
    if (it == values.end()) throw CheckpointError("checkpoint has no parameter '" + p.name + "'");
    if (it->second.size() != p.tensor.size()) {
      throw CheckpointError("parameter '" + p.name + "' has " + std::to_string(it->second.size()) +
                            " values in the checkpoint, model expects " + std::to_string(p.tensor.size()));
    }
    nn::Tensor target = p.tensor;
    std::copy(it->second.begin(), it->second.end(), target.mutable_values().begin());
  }
}

void save(const StudentModel& model, const std::filesystem::path& path) {
  write_checkpoint(path, header_for("student", model.vocabulary(), model.config(), nlohmann::json::object()),
                   model.parameters());
}

void save(const StandInTeacher& teacher, const std::filesystem::path& path) {
  const auto& net = teacher.network();
  write_checkpoint(path,
                   header_for("teacher", net.vocabulary(), net.config(),
                              {{"id", teacher.id()}, {"latency_class", to_string(teacher.latency_class())}}),
                   net.parameters());
}

void save(const HybridModel& model, const std::filesystem::path& path) {
  const nlohmann::json config{
      {"student", model.student().config()}, {"hybrid", model.config()}, {"schema", model.schema().to_json()}};
  write_checkpoint(path,
                   header_for("hybrid", model.student().vocabulary(), config,
                              {{"student_frozen", model.student_frozen()}}),
                   model.parameters());
}

StudentModel load_student(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab) {
  auto raw = read_checkpoint(path);
  check_compatible(raw.header, "student", *vocab, path);
  nn::Rng rng(0);
  StudentModel model(raw.header.config.get<StudentConfig>(), std::move(vocab), rng);
  assign_parameters(model.parameters(), raw.parameters);
  return model;
}

StandInTeacher load_teacher(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab) {
  auto raw = read_checkpoint(path);
  check_compatible(raw.header, "teacher", *vocab, path);
  nn::Rng rng(0);
  StudentModel net(raw.header.config.get<StudentConfig>(), std::move(vocab), rng);
  assign_parameters(net.parameters(), raw.parameters);
  return StandInTeacher(raw.header.meta.value("id", std::string("teacher")), std::move(net),
                        latency_class_from_string(raw.header.meta.value("latency_class", std::string("heavy"))));
}

HybridModel load_hybrid(const std::filesystem::path& path, std::shared_ptr<const text::Vocabulary> vocab) {
  auto raw = read_checkpoint(path);
  check_compatible(raw.header, "hybrid", *vocab, path);
  const auto& c = raw.header.config;
  nn::Rng rng(0);
  StudentModel student(c.at("student").get<StudentConfig>(), std::move(vocab), rng);
  HybridModel model(student, AspectSchema::from_json(c.at("schema")), c.at("hybrid").get<HybridConfig>(), rng);
  assign_parameters(model.parameters(), raw.parameters);
  model.set_student_frozen(raw.header.meta.value("student_frozen", false));
  return model;
}

}  // namespace ics::matcher
