#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace tweetsat::testing {

// Same 15-column schema as the public airline tweet CSV, with airline- and
// user-dependent class priors so that non-text fields carry signal.
struct SyntheticCorpusOptions {
  std::size_t rows = 14640;
  std::uint64_t seed = 7;
};

std::string synthetic_corpus_csv(const SyntheticCorpusOptions& options = {});

// Pretrained-vector text file covering the synthetic vocabulary plus filler
// tokens. Sentiment words are spread along a shared direction.
std::string synthetic_embeddings(std::size_t dim = 50, std::uint64_t seed = 11);

struct SyntheticFiles {
  std::filesystem::path csv;
  std::filesystem::path glove;
};

// Writes both files into `dir` (created if needed) unless they already exist.
SyntheticFiles write_synthetic_files(const std::filesystem::path& dir,
                                     const SyntheticCorpusOptions& options = {});

}  // namespace tweetsat::testing
