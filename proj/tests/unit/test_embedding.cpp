#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "tweetsat/embedding.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"

using namespace tweetsat;

namespace {

EmbeddingTable toy_table(std::size_t dim = 2) {
  std::istringstream in("a 1.0 2.0\nb 0.0 1.0\n");
  return parse_embeddings(in, dim);
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Fly to NYC ") == std::vector<std::string>{"fly", "to", "nyc"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don", "t", "stop"});
  CHECK(tokenize("caf\xC3\xA9 ok") == std::vector<std::string>{"caf", "ok"});
}

TEST_CASE("two-line vector file") {
  auto t = toy_table();
  CHECK(t.size() == 2);
  CHECK(t.dim() == 2);
  CHECK(t.vocab_order() == std::vector<std::string>{"a", "b"});
  auto a = t.find("a");
  REQUIRE(a);
  CHECK((*a)[1] == 2.0);
  CHECK_FALSE(t.find("c"));
}

TEST_CASE("dimension mismatch names line 1") {
  try {
    toy_table(3);
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("malformed number names its line") {
  std::istringstream in("a 1.0 2.0\nb 0.0 x\n");
  try {
    parse_embeddings(in, 2);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("duplicates keep the first vector") {
  std::istringstream in("a 1 2\na 3 4\nb 0 1\n");
  EmbeddingLoadStats stats;
  auto t = parse_embeddings(in, 2, "<dup>", &stats);
  CHECK(t.size() == 2);
  CHECK(stats.duplicates == 1);
  CHECK((*t.find("a"))[0] == 1.0);
}

TEST_CASE("re-serializing in vocab order reproduces the table") {
  std::istringstream in("the 0.5 -1\ncat 2 3.25\nsat -0.125 0\n");
  auto t = parse_embeddings(in, 2);
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.vocab_order()[i];
    for (double v : t.vector(i)) out << ' ' << v;
    out << '\n';
  }
  std::istringstream back(out.str());
  auto t2 = parse_embeddings(back, 2);
  REQUIRE(t2.vocab_order() == t.vocab_order());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::equal(t.vector(i).begin(), t.vector(i).end(), t2.vector(i).begin()));
  }
}

TEST_CASE("doc_vector") {
  auto t = toy_table();
  CHECK(doc_vector(std::vector<std::string>{}, t) == std::vector<double>{0.0, 0.0});
  CHECK(doc_vector(std::vector<std::string>{"a"}, t) == std::vector<double>{1.0, 2.0});
  CHECK(doc_vector(std::vector<std::string>{"a", "b"}, t) == std::vector<double>{0.5, 1.5});
  CHECK(doc_vector(std::vector<std::string>{"zz", "yy"}, t) == std::vector<double>{0.0, 0.0});
  CHECK(doc_vector(std::vector<std::string>{"a", "zz"}, t) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("doc_vector ignores token order") {
  std::istringstream in("p 0.1 0.7\nq 0.3 -0.2\nr 1e-3 5\ns -2 0.4\n");
  auto t = parse_embeddings(in, 2);
  std::vector<std::string> tokens = {"p", "q", "r", "s", "p", "oov"};
  const auto base = doc_vector(tokens, t);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(tokens);
    const auto v = doc_vector(tokens, t);
    for (std::size_t d = 0; d < 2; ++d) CHECK(v[d] == doctest::Approx(base[d]).epsilon(1e-12));
  }
}

TEST_CASE("build_vocab ordering and cap") {
  std::vector<std::string> texts = {"b a b"};
  auto v = build_vocab(texts, 10, 5);
  CHECK(v.id_of("b") == 2);
  CHECK(v.id_of("a") == 3);
  CHECK(v.id_to_token[0] == "<pad>");
  CHECK(v.id_to_token[1] == "<oov>");

  std::vector<std::string> ties = {"b a"};
  auto w = build_vocab(ties, 10, 5);
  CHECK(w.id_of("a") == 2);
  CHECK(w.id_of("b") == 3);

  auto capped = build_vocab(texts, 3, 5);
  CHECK(capped.size() == 3);
  CHECK(capped.id_of("b") == 2);
  CHECK(capped.id_of("a") == Vocab::oov_id);
}

TEST_CASE("encode_sequence") {
  std::vector<std::string> texts = {"x y z"};
  auto v = build_vocab(texts, 10, 3);
  CHECK(encode_sequence(std::vector<std::string>{}, v) == std::vector<int>{0, 0, 0});
  CHECK(encode_sequence(std::vector<std::string>{"y"}, v) == std::vector<int>{v.id_of("y"), 0, 0});
  CHECK(encode_sequence(std::vector<std::string>{"q"}, v) == std::vector<int>{1, 0, 0});
  const std::vector<std::string> long_seq = {"x", "y", "z", "x", "y"};
  CHECK(encode_sequence(long_seq, v) ==
        std::vector<int>{v.id_of("x"), v.id_of("y"), v.id_of("z")});
}
