#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetsat/corpus.hpp"
#include "tweetsat/embedding.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat {

enum class Origin { original, progressive, word_aug, sentence_aug };
enum class SentenceOp { swap_adjacent, delete_token };

std::string_view origin_name(Origin origin);
Origin parse_origin(std::string_view name);
std::string_view sentence_op_name(SentenceOp op);
SentenceOp parse_sentence_op(std::string_view name);

struct AugmentedSample {
  std::string text;
  ClassId label = 0;
  Origin origin = Origin::original;
  bool operator==(const AugmentedSample&) const = default;
};

struct AugmentConfig {
  double word_sub_rate = 0.3;
  std::size_t neighbor_k = 5;
  std::vector<SentenceOp> sentence_ops = {SentenceOp::swap_adjacent, SentenceOp::delete_token};
  double target_factor = 3.0;
  std::uint64_t seed = 42;
  // Neighbour candidates come from the first vocab_cap rows of the table.
  std::size_t vocab_cap = 20000;
  // Augmentation attempts allowed per missing sample before giving up.
  std::size_t retry_budget = 8;

  void validate() const;
};

// Exact cosine nearest neighbours over the first `cap` rows of a table.
// Results are memoised per token; lookups are safe from several threads.
class NeighborIndex {
 public:
  NeighborIndex(const EmbeddingTable& table, std::size_t cap);

  // Up to k neighbours of `token`, most similar first, excluding the token
  // itself. Empty when the token is not in the table.
  std::vector<std::string> nearest(std::string_view token, std::size_t k) const;

  const EmbeddingTable& table() const { return table_; }

 private:
  const EmbeddingTable& table_;
  std::size_t cap_;
  std::vector<double> inv_norms_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<std::string>> cache_;
};

// Applies the username, hashtag and retweet removals in that order, appending
// every intermediate that changed. Element 0 is always the input.
std::vector<std::string> progressive_variants(std::string_view raw_text);

// Replaces each in-vocabulary word, with probability word_sub_rate, by one of
// its neighbor_k nearest neighbours. Works on whitespace-separated words whose
// lowercase alphanumeric core is a table token; surrounding punctuation stays.
std::string word_augment(std::string_view text, const NeighborIndex& index,
                         const AugmentConfig& cfg, Rng& rng);

// One randomly chosen configured edit on the whitespace tokens. Texts with
// fewer than two tokens come back unchanged.
std::string sentence_augment(std::string_view text, const AugmentConfig& cfg, Rng& rng);

struct LabeledText {
  std::string text;
  ClassId label = 0;
};

struct AugmentResult {
  std::vector<AugmentedSample> samples;
  // Records that could not reach target_factor within the retry budget.
  std::size_t short_records = 0;
  // Texts that appeared under more than one label (first label kept).
  std::size_t label_conflicts = 0;
  std::vector<std::string> warnings;
};

// Whitespace runs become one space and the ends are trimmed. This is the
// dedup key; empty results are discarded.
std::string normalize_sample_text(std::string_view text);

AugmentResult build_augmented_dataset(std::span<const LabeledText> inputs,
                                      const NeighborIndex& index, const AugmentConfig& cfg);

// Uses the URL-free text of each record as the augmentation source.
AugmentResult build_augmented_dataset(std::span<const TweetRecord> records,
                                      const NeighborIndex& index, const AugmentConfig& cfg);

}  // namespace tweetsat
