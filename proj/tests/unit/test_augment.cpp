#include "doctest.h"

#include <set>
#include <sstream>

#include "synthetic.hpp"
#include "tweetsat/augment.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"
#include "tweetsat/textclean.hpp"

using namespace tweetsat;

namespace {

// good and great point the same way; bad points elsewhere.
EmbeddingTable toy_table() {
  std::istringstream in("good 1.0 0.1\ngreat 0.9 0.12\nbad -1.0 0.3\n");
  return parse_embeddings(in, 2);
}

const EmbeddingTable& synthetic_table() {
  static const EmbeddingTable table = [] {
    std::istringstream in(testing::synthetic_embeddings(50));
    return parse_embeddings(in, 50);
  }();
  return table;
}

std::vector<TweetRecord> synthetic_records(std::size_t n) {
  std::istringstream in(testing::synthetic_corpus_csv({.rows = n, .seed = 17}));
  return prune_columns(parse_corpus(in)).records;
}

std::uint64_t digest(const AugmentResult& r) {
  std::string all;
  for (const auto& s : r.samples) {
    all += s.text;
    all += '\x1f';
    all += std::to_string(s.label);
    all += origin_name(s.origin);
    all += '\n';
  }
  return fnv1a64(all);
}

// Frozen from a seed-42 run.
constexpr std::size_t kGoldenCount = 500;
constexpr std::uint64_t kGoldenDigest = 1624899021411273925ULL;

}  // namespace

TEST_CASE("progressive_variants") {
  CHECK(progressive_variants("@u bad #fail") ==
        std::vector<std::string>{"@u bad #fail", " bad #fail", " bad "});
  CHECK(progressive_variants("plain text") == std::vector<std::string>{"plain text"});
  CHECK(progressive_variants("RT @a: hi") == std::vector<std::string>{"RT @a: hi", "RT : hi"});
}

TEST_CASE("word_augment") {
  auto table = toy_table();
  NeighborIndex index(table, 100);
  AugmentConfig cfg;
  cfg.neighbor_k = 1;
  Rng rng(1);

  SUBCASE("rate zero is the identity") {
    cfg.word_sub_rate = 0.0;
    CHECK(word_augment("good good bad", index, cfg, rng) == "good good bad");
  }
  SUBCASE("out-of-vocabulary token is untouched") {
    cfg.word_sub_rate = 1.0;
    CHECK(word_augment("zzqx", index, cfg, rng) == "zzqx");
  }
  SUBCASE("good becomes its nearest neighbour") {
    cfg.word_sub_rate = 1.0;
    CHECK(index.nearest("good", 1) == std::vector<std::string>{"great"});
    CHECK(index.nearest("great", 1) == std::vector<std::string>{"good"});
    CHECK(word_augment("good", index, cfg, rng) == "great");
    CHECK(word_augment("Good!", index, cfg, rng) == "great!");
  }
}

TEST_CASE("sentence_augment") {
  AugmentConfig cfg;
  Rng rng(3);
  CHECK(sentence_augment("alone", cfg, rng) == "alone");

  cfg.sentence_ops = {SentenceOp::swap_adjacent};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng r(seed);
    CHECK(sentence_augment("a b", cfg, r) == "b a");
  }

  cfg.sentence_ops = {SentenceOp::delete_token};
  const std::set<std::string> legal = {"a b", "a c", "b c"};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng r(seed);
    CHECK(legal.contains(sentence_augment("a b c", cfg, r)));
  }
}

TEST_CASE("dataset: factor 1 keeps only progressive variants") {
  auto table = toy_table();
  NeighborIndex index(table, 100);
  AugmentConfig cfg;
  cfg.target_factor = 1.0;
  std::vector<LabeledText> in = {{"@u bad #fail", 0}};
  auto r = build_augmented_dataset(in, index, cfg);
  REQUIRE(r.samples.size() == 3);
  CHECK(r.samples[0].text == "@u bad #fail");
  CHECK(r.samples[0].origin == Origin::original);
  CHECK(r.samples[1].text == "bad #fail");
  CHECK(r.samples[2].text == "bad");
  CHECK(r.samples[2].origin == Origin::progressive);
}

TEST_CASE("dataset: identical records collapse") {
  auto table = toy_table();
  NeighborIndex index(table, 100);
  AugmentConfig cfg;
  cfg.target_factor = 1.0;
  std::vector<LabeledText> in = {{"good trip", 2}, {"good trip", 2}};
  auto r = build_augmented_dataset(in, index, cfg);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].text == "good trip");
  CHECK(r.label_conflicts == 0);
}

TEST_CASE("dataset: unreachable factor is a warning") {
  auto table = toy_table();
  NeighborIndex index(table, 100);
  AugmentConfig cfg;
  cfg.target_factor = 4.0;
  std::vector<LabeledText> in = {{"x", 1}};
  auto r = build_augmented_dataset(in, index, cfg);
  CHECK(r.samples.size() == 1);
  CHECK(r.short_records == 1);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("dataset: seeded golden on 100 synthetic records") {
  const auto records = synthetic_records(100);
  NeighborIndex index(synthetic_table(), 20000);
  AugmentConfig cfg;
  cfg.target_factor = 5.0;
  cfg.seed = 42;
  const auto r = build_augmented_dataset(records, index, cfg);
  CHECK(r.samples.size() >= 100);
  CHECK(r.samples.size() <= 500);
  CHECK(r.samples.size() == kGoldenCount);
  CHECK(digest(r) == kGoldenDigest);

  SUBCASE("deterministic, labels preserved, no duplicates") {
    const auto again = build_augmented_dataset(records, index, cfg);
    CHECK(again.samples == r.samples);

    std::map<std::string, ClassId> source_label;
    for (const auto& rec : records) {
      for (const auto& v : progressive_variants(clean_tweet(rec.text_raw).no_url)) {
        source_label.emplace(normalize_sample_text(v), rec.label);
      }
    }
    std::set<std::string> seen;
    std::set<ClassId> record_labels;
    for (const auto& rec : records) record_labels.insert(rec.label);
    for (const auto& s : r.samples) {
      CHECK(seen.insert(s.text).second);
      CHECK(record_labels.contains(s.label));
      if (s.origin != Origin::word_aug && s.origin != Origin::sentence_aug) {
        auto it = source_label.find(s.text);
        REQUIRE(it != source_label.end());
        CHECK(it->second == s.label);
      }
    }
  }

  SUBCASE("another seed gives a different set") {
    auto other = cfg;
    other.seed = 43;
    CHECK(build_augmented_dataset(records, index, other).samples != r.samples);
  }
}

TEST_CASE("config validation") {
  AugmentConfig cfg;
  cfg.word_sub_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.target_factor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
