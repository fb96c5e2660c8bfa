#include "tweetsat/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "tweetsat/error.hpp"

namespace tweetsat {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (alnum) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error("embedding vector for '" + token + "' has length " +
                std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  if (index_.contains(token)) return false;
  index_.emplace(token, vocab_order_.size());
  vocab_order_.push_back(std::move(token));
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view token) const {
  if (auto idx = index_of(token)) return vector(*idx);
  return std::nullopt;
}

EmbeddingTable parse_embeddings(std::istream& in, std::size_t expected_dim,
                                std::string_view source, EmbeddingLoadStats* stats) {
  if (expected_dim == 0) throw Error("embedding dimension must be positive");
  EmbeddingTable table(expected_dim);
  EmbeddingLoadStats local;
  std::string line;
  std::vector<double> values;
  values.reserve(expected_dim);
  while (std::getline(in, line)) {
    ++local.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto where = [&] {
      return std::string(source) + ": line " + std::to_string(local.lines) + ": ";
    };
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw Error(where() + "malformed line (expected token followed by values)");
    }
    values.clear();
    const char* p = line.data() + space;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ')) {
        throw Error(where() + "malformed value");
      }
      values.push_back(v);
      p = next;
    }
    if (values.size() != expected_dim) {
      throw Error(where() + "dimension mismatch: found " + std::to_string(values.size()) +
                  " values, expected " + std::to_string(expected_dim));
    }
    if (!table.add(line.substr(0, space), values)) {
      ++local.duplicates;
      spdlog::warn("{}duplicate token '{}' ignored (first occurrence wins)", where(),
                   line.substr(0, space));
    }
  }
  if (stats) *stats = local;
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim,
                               EmbeddingLoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file: " + path.string());
  return parse_embeddings(in, expected_dim, path.string(), stats);
}

std::vector<double> doc_vector(std::span<const std::string> tokens, const EmbeddingTable& table) {
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t known = 0;
  for (const auto& t : tokens) {
    if (auto v = table.find(t)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
      ++known;
    }
  }
  if (known > 0) {
    for (auto& x : sum) x /= static_cast<double>(known);
  }
  return sum;
}

int Vocab::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? oov_id : it->second;
}

Vocab build_vocab(std::span<const std::string> texts, std::size_t max_size, std::size_t max_len) {
  if (max_len == 0) throw Error("vocabulary max_len must be positive");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& t : tokenize(text)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is already lexicographic, so a stable sort on frequency keeps ties ordered.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab vocab;
  vocab.max_len = max_len;
  vocab.id_to_token = {"<pad>", "<oov>"};
  for (auto& [token, n] : ranked) {
    if (vocab.id_to_token.size() >= max_size) break;
    vocab.token_to_id.emplace(token, static_cast<int>(vocab.id_to_token.size()));
    vocab.id_to_token.push_back(token);
  }
  return vocab;
}

std::vector<int> encode_sequence(std::span<const std::string> tokens, const Vocab& vocab) {
  std::vector<int> ids(vocab.max_len, Vocab::pad_id);
  const std::size_t n = std::min(tokens.size(), vocab.max_len);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id_of(tokens[i]);
  return ids;
}

}  // namespace tweetsat
