#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tweetsat {

// Lowercases ASCII letters and splits on every run of characters that are not
// ASCII alphanumerics. Bytes of multi-byte UTF-8 sequences act as separators.
std::vector<std::string> tokenize(std::string_view text);

// Token -> dense vector map in pretrained-vector text format. Immutable after
// construction.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  // Appends a token; returns false (and keeps the first vector) on duplicates.
  bool add(std::string token, std::span<const double> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vocab_order_.size(); }
  const std::vector<std::string>& vocab_order() const { return vocab_order_; }

  std::optional<std::size_t> index_of(std::string_view token) const;
  std::span<const double> vector(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  std::optional<std::span<const double>> find(std::string_view token) const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::size_t dim_ = 0;
  std::vector<std::string> vocab_order_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

struct EmbeddingLoadStats {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
};

// One token per line followed by exactly expected_dim space-separated reals.
// Throws Error naming the first bad line (1-based).
EmbeddingTable parse_embeddings(std::istream& in, std::size_t expected_dim,
                                std::string_view source = "<stream>",
                                EmbeddingLoadStats* stats = nullptr);
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim,
                               EmbeddingLoadStats* stats = nullptr);

// Mean of the in-vocabulary token vectors; zero vector when none are known.
std::vector<double> doc_vector(std::span<const std::string> tokens, const EmbeddingTable& table);

struct Vocab {
  static constexpr int pad_id = 0;
  static constexpr int oov_id = 1;

  std::unordered_map<std::string, int> token_to_id;
  // id_to_token[0] = "<pad>", id_to_token[1] = "<oov>".
  std::vector<std::string> id_to_token;
  std::size_t max_len = 40;

  std::size_t size() const { return id_to_token.size(); }
  int id_of(const std::string& token) const;
};

// Counts tokenize(text) over all texts. Most frequent tokens get ids from 2,
// ties broken lexicographically; max_size counts the two reserved ids.
Vocab build_vocab(std::span<const std::string> texts, std::size_t max_size, std::size_t max_len);

// Exactly vocab.max_len ids: leading tokens kept, right-padded with pad_id.
std::vector<int> encode_sequence(std::span<const std::string> tokens, const Vocab& vocab);

}  // namespace tweetsat
