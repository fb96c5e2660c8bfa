#include "tweetsat/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tweetsat/error.hpp"
#include "tweetsat/textclean.hpp"

namespace tweetsat {
namespace {

bool is_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

std::string_view origin_name(Origin origin) {
  switch (origin) {
    case Origin::original: return "original";
    case Origin::progressive: return "progressive";
    case Origin::word_aug: return "word_aug";
    case Origin::sentence_aug: return "sentence_aug";
  }
  return "original";
}

Origin parse_origin(std::string_view name) {
  for (auto o : {Origin::original, Origin::progressive, Origin::word_aug, Origin::sentence_aug}) {
    if (origin_name(o) == name) return o;
  }
  throw Error("unknown sample origin '" + std::string(name) + "'");
}

std::string_view sentence_op_name(SentenceOp op) {
  return op == SentenceOp::swap_adjacent ? "swap_adjacent" : "delete_token";
}

SentenceOp parse_sentence_op(std::string_view name) {
  if (name == "swap_adjacent") return SentenceOp::swap_adjacent;
  if (name == "delete_token") return SentenceOp::delete_token;
  throw Error("unknown sentence op '" + std::string(name) + "'");
}

void AugmentConfig::validate() const {
  if (!(word_sub_rate >= 0.0 && word_sub_rate <= 1.0)) {
    throw Error("word_sub_rate must lie in [0, 1]");
  }
  if (neighbor_k < 1) throw Error("neighbor_k must be at least 1");
  if (!(target_factor > 0.0) || !std::isfinite(target_factor)) {
    throw Error("target_factor must be a positive real");
  }
  if (sentence_ops.empty()) throw Error("at least one sentence op is required");
}

NeighborIndex::NeighborIndex(const EmbeddingTable& table, std::size_t cap)
    : table_(table), cap_(std::min(cap, table.size())), inv_norms_(cap_, 0.0) {
  for (std::size_t i = 0; i < cap_; ++i) {
    const auto v = table_.vector(i);
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    inv_norms_[i] = n > 0.0 ? 1.0 / n : 0.0;
  }
}

std::vector<std::string> NeighborIndex::nearest(std::string_view token, std::size_t k) const {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(std::string(token));
    if (it != cache_.end() && it->second.size() >= k) {
      return {it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(k)};
    }
  }
  const auto self = table_.index_of(token);
  if (!self) return {};
  const auto q = table_.vector(*self);
  const double qn = std::sqrt(std::inner_product(q.begin(), q.end(), q.begin(), 0.0));

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(cap_);
  for (std::size_t i = 0; i < cap_; ++i) {
    if (i == *self) continue;
    const auto v = table_.vector(i);
    double sim = 0.0;
    if (qn > 0.0) sim = std::inner_product(q.begin(), q.end(), v.begin(), 0.0) * inv_norms_[i] / qn;
    scored.emplace_back(sim, i);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(table_.vocab_order()[scored[i].second]);

  std::lock_guard lock(mutex_);
  auto& slot = cache_[std::string(token)];
  if (slot.size() < out.size()) slot = out;
  return out;
}

std::vector<std::string> progressive_variants(std::string_view raw_text) {
  std::vector<std::string> out{std::string(raw_text)};
  std::string working(raw_text);
  for (auto remove : {&remove_usernames, &remove_hashtags, &remove_retweets}) {
    std::string next = remove(working);
    if (next != working) {
      out.push_back(next);
      working = std::move(next);
    }
  }
  return out;
}

std::string word_augment(std::string_view text, const NeighborIndex& index,
                         const AugmentConfig& cfg, Rng& rng) {
  if (cfg.word_sub_rate <= 0.0) return std::string(text);
  std::string out;
  out.reserve(text.size() + 16);
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view word = text.substr(i, j - i);
    i = j;

    std::size_t lo = 0, hi = word.size();
    while (lo < hi && !is_alnum(word[lo])) ++lo;
    while (hi > lo && !is_alnum(word[hi - 1])) --hi;
    const auto core = word.substr(lo, hi - lo);
    bool single_token = !core.empty() && std::all_of(core.begin(), core.end(), [](char c) {
      return is_alnum(static_cast<unsigned char>(c));
    });
    std::string key;
    if (single_token) {
      key.reserve(core.size());
      for (char c : core) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!single_token || !index.table().index_of(key) || !rng.bernoulli(cfg.word_sub_rate)) {
      out += word;
      continue;
    }
    const auto neighbours = index.nearest(key, cfg.neighbor_k);
    if (neighbours.empty()) {
      out += word;
      continue;
    }
    out += word.substr(0, lo);
    out += neighbours[rng.below(neighbours.size())];
    out += word.substr(hi);
  }
  return out;
}

std::string sentence_augment(std::string_view text, const AugmentConfig& cfg, Rng& rng) {
  auto tokens = split_ws(text);
  if (tokens.size() < 2 || cfg.sentence_ops.empty()) return std::string(text);
  const SentenceOp op = cfg.sentence_ops.size() == 1
                            ? cfg.sentence_ops.front()
                            : cfg.sentence_ops[rng.below(cfg.sentence_ops.size())];
  if (op == SentenceOp::swap_adjacent) {
    const auto p = rng.below(tokens.size() - 1);
    std::swap(tokens[p], tokens[p + 1]);
  } else {
    const auto p = 1 + rng.below(tokens.size() - 1);
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(p));
  }
  return join_ws(tokens);
}

std::string normalize_sample_text(std::string_view text) { return join_ws(split_ws(text)); }

AugmentResult build_augmented_dataset(std::span<const LabeledText> inputs,
                                      const NeighborIndex& index, const AugmentConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw Error("augmentation needs at least one record");
  const auto target =
      static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.target_factor - 1e-12)));

  // Per-record stage: independent, seeded by record index.
  std::vector<std::vector<AugmentedSample>> per_record(inputs.size());
  std::size_t short_records = 0;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    auto& local = per_record[r];
    std::unordered_set<std::string> seen;
    std::vector<std::string> bases;

    const auto variants = progressive_variants(inputs[r].text);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      auto norm = normalize_sample_text(variants[v]);
      if (norm.empty() || !seen.insert(norm).second) continue;
      bases.push_back(norm);
      local.push_back({std::move(norm), inputs[r].label,
                       v == 0 ? Origin::original : Origin::progressive});
    }

    const std::size_t budget = cfg.retry_budget * target;
    for (std::size_t attempt = 0; local.size() < target && attempt < budget && !bases.empty();
         ++attempt) {
      const auto& base = bases[attempt % bases.size()];
      const bool word_step = attempt % 2 == 0;
      auto candidate = normalize_sample_text(word_step ? word_augment(base, index, cfg, rng)
                                                       : sentence_augment(base, cfg, rng));
      if (candidate.empty() || !seen.insert(candidate).second) continue;
      local.push_back({std::move(candidate), inputs[r].label,
                       word_step ? Origin::word_aug : Origin::sentence_aug});
    }
    if (local.size() < target) ++short_records;
  }

  // Global dedup: first occurrence wins.
  AugmentResult result;
  result.short_records = short_records;
  std::unordered_map<std::string, ClassId> kept;
  for (auto& samples : per_record) {
    for (auto& s : samples) {
      auto [it, inserted] = kept.emplace(s.text, s.label);
      if (!inserted) {
        if (it->second != s.label) ++result.label_conflicts;
        continue;
      }
      result.samples.push_back(std::move(s));
    }
  }
  if (short_records > 0) {
    result.warnings.push_back(std::to_string(short_records) +
                              " record(s) fell short of the target factor within the retry budget");
  }
  if (result.label_conflicts > 0) {
    result.warnings.push_back(std::to_string(result.label_conflicts) +
                              " duplicate text(s) seen under a different label; first label kept");
  }
  for (const auto& w : result.warnings) spdlog::warn("augment: {}", w);
  return result;
}

AugmentResult build_augmented_dataset(std::span<const TweetRecord> records,
                                      const NeighborIndex& index, const AugmentConfig& cfg) {
  std::vector<LabeledText> inputs;
  inputs.reserve(records.size());
  for (const auto& r : records) inputs.push_back({clean_tweet(r.text_raw).no_url, r.label});
  return build_augmented_dataset(inputs, index, cfg);
}

}  // namespace tweetsat
