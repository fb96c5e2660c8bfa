// Writes the synthetic corpus and vector file into a directory.
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic <dir> [rows] [seed]\n";
    return 1;
  }
  tweetsat::testing::SyntheticCorpusOptions opts;
  if (argc > 2) opts.rows = std::stoul(argv[2]);
  if (argc > 3) opts.seed = std::stoull(argv[3]);
  const auto files = tweetsat::testing::write_synthetic_files(argv[1], opts);
  std::cout << files.csv.string() << "\n" << files.glove.string() << "\n";
  return 0;
}
