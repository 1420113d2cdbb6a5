#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ics/errors.hpp"
#include "ics/text/embeddings.hpp"
#include "ics/text/skipgram.hpp"
#include "ics/text/tfidf.hpp"
#include "ics/text/tokenizer.hpp"
#include "ics/text/vocabulary.hpp"

using namespace ics::text;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ics_text_tests";
  fs::create_directories(dir);
  return dir / name;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}
}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Return my shoes!") == std::vector<std::string>{"return", "my", "shoes"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ,.;  ").empty());
  for (const char* text : {"Where's my PARCEL?? order #123", "refund-request:now", "naïve café"}) {
    auto once = tokenize(text);
    CHECK(tokenize(join_tokens(once)) == once);
  }
}

TEST_CASE("vocabulary") {
  auto vocab = Vocabulary::build({{"b", "a", "b"}, {"c", "b", "a"}});
  CHECK(vocab.id("<pad>") == Vocabulary::kPad);
  CHECK(vocab.id("<unk>") == Vocabulary::kUnk);
  CHECK(vocab.token(2) == "b");
  CHECK(vocab.token(3) == "a");
  CHECK(vocab.token(4) == "c");
  CHECK(vocab.id("never-seen") == Vocabulary::kUnk);
  CHECK(vocab.size() == 5);

  auto path = temp_file("vocab.txt");
  vocab.save(path);
  auto loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == vocab.tokens());
  CHECK(loaded.hash() == vocab.hash());
  CHECK(loaded.count(2) == 3);

  auto other = Vocabulary::build({{"a", "b", "c"}});
  CHECK(other.hash() != vocab.hash());
}

TEST_CASE("tf-idf closed forms") {
  // Four documents; "every" is in all of them, "one" in a single one.
  std::vector<std::vector<std::string>> corpus{{"every", "one"}, {"every"}, {"every", "x"}, {"every", "y"}};
  auto model = fit_tfidf(corpus);
  CHECK(model.documents() == 4);
  CHECK(model.idf("every") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.idf("one") == doctest::Approx(std::log(5.0 / 2.0) + 1.0).epsilon(1e-12));
  CHECK(model.idf("one") == doctest::Approx(1.9163).epsilon(1e-4));
  CHECK(model.idf("unseen") == doctest::Approx(std::log(5.0) + 1.0).epsilon(1e-12));

  auto w = model.weights({"one", "one", "every"});
  CHECK(w.at("one") == doctest::Approx(2.0 * model.idf("one")));
  CHECK(w.at("every") == doctest::Approx(1.0));
  for (const auto& doc : corpus) {
    for (const auto& [token, weight] : model.weights(doc)) {
      CHECK(std::isfinite(weight));
      CHECK(weight >= 0.0);
    }
  }
  CHECK_THROWS_AS(fit_tfidf({}), ics::ConfigError);

  auto path = temp_file("tfidf.json");
  model.save(path);
  auto loaded = TfIdfModel::load(path);
  CHECK(loaded.idf("one") == model.idf("one"));
}

TEST_CASE("word-vector file round trip") {
  auto path = temp_file("two_words.vec");
  {
    std::ofstream out(path);
    out << "2 3\nhello 0.1 -2.5 3.0000000000000004\nworld 1e-3 0 7\n";
  }
  auto table = load_embeddings(path);
  CHECK(table.dim() == 3);
  CHECK(table.rows() == 4);
  CHECK(table.row(table.vocabulary().id("hello"))[2] == 3.0000000000000004);

  auto copy = temp_file("two_words_copy.vec");
  table.save(copy);
  auto again = load_embeddings(copy);
  CHECK(again.vocabulary().tokens() == table.vocabulary().tokens());
  CHECK(std::vector<double>(again.data().begin(), again.data().end()) ==
        std::vector<double>(table.data().begin(), table.data().end()));
}

TEST_CASE("malformed word-vector line reports its line number") {
  auto path = temp_file("bad.vec");
  {
    std::ofstream out(path);
    out << "2 2\ngood 1 2\nbad 1 oops\n";
  }
  try {
    load_embeddings(path);
    FAIL("expected ParseError");
  } catch (const ics::ParseError& e) {
    CHECK(e.line() == 3);
  }
  {
    std::ofstream out(path);
    out << "1 2\nshort 1\n";
  }
  CHECK_THROWS_AS(load_embeddings(path), ics::ParseError);
}

TEST_CASE("skip-gram places co-occurring tokens closer") {
  // Two topics; words only ever co-occur within their own topic.
  std::vector<std::vector<std::string>> corpus;
  ics::nn::Rng rng(4);
  const std::vector<std::vector<std::string>> topics{{"alpha", "beta", "gamma", "delta"},
                                                     {"red", "green", "blue", "cyan"}};
  for (int i = 0; i < 400; ++i) {
    const auto& topic = topics[static_cast<std::size_t>(i % 2)];
    std::vector<std::string> sentence;
    for (int j = 0; j < 6; ++j) sentence.push_back(topic[rng.index(topic.size())]);
    corpus.push_back(sentence);
  }
  SkipGramOptions opts;
  opts.dim = 16;
  opts.epochs = 5;
  opts.window = 2;
  opts.seed = 9;
  auto table = train_skipgram(corpus, opts);
  const auto& v = table.vocabulary();
  CHECK(cosine(table.row(v.id("alpha")), table.row(v.id("beta"))) >
        cosine(table.row(v.id("alpha")), table.row(v.id("red"))));
  CHECK(cosine(table.row(v.id("green")), table.row(v.id("cyan"))) >
        cosine(table.row(v.id("green")), table.row(v.id("delta"))));
  for (double x : table.row(Vocabulary::kPad)) CHECK(x == 0.0);

  auto again = train_skipgram(corpus, opts);
  CHECK(std::vector<double>(again.data().begin(), again.data().end()) ==
        std::vector<double>(table.data().begin(), table.data().end()));
  opts.dim = 1;
  CHECK_THROWS_AS(train_skipgram(corpus, opts), ics::ConfigError);
}

TEST_CASE("embed_sequence pads, truncates, and flags empty input") {
  Vocabulary vocab;
  for (auto t : {"a", "b", "c", "d", "e", "f", "g"}) vocab.add(t, 1);
  std::vector<double> data(vocab.size() * 2);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i);
  EmbeddingTable table(vocab, 2, data);

  auto three = embed_sequence(table, {"a", "b", "c"}, 5);
  CHECK(three.values.shape() == ics::nn::Shape{5, 2});
  CHECK(three.mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  CHECK(three.values.at(6) == 0.0);
  CHECK(three.values.at(9) == 0.0);
  CHECK_FALSE(three.empty);

  auto seven = index_sequence(vocab, {"a", "b", "c", "d", "e", "f", "g"}, 5);
  CHECK(seven.ids == std::vector<TokenId>{2, 3, 4, 5, 6});
  CHECK(seven.mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1});

  auto none = embed_sequence(table, {}, 4);
  CHECK(none.empty);
  CHECK(none.values.shape() == ics::nn::Shape{4, 2});

  auto unknown = index_sequence(vocab, {"zzz"}, 2);
  CHECK(unknown.ids[0] == Vocabulary::kUnk);
}
