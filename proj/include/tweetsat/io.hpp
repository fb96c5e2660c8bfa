#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/features.hpp"

namespace tweetsat {

// Writes to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Parses a .toml or .json file into JSON. TOML dates and times become strings.
nlohmann::json load_structured(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

inline constexpr int kModelFormatVersion = 1;

// {"format": "tweetsat-model", "format_version": 1, "model_kind": ..., "model": ...}
nlohmann::ordered_json wrap_model(std::string_view kind, nlohmann::ordered_json body);
// Returns (kind, body). Throws on a foreign file or a different version.
std::pair<std::string, nlohmann::json> unwrap_model(const nlohmann::json& j);

// Header of column names followed by one row of decimal reals per sample.
// When labels are given they are appended as a final "label" column.
std::string feature_matrix_csv(const FeatureMatrix& m, std::span<const ClassId> labels = {});

struct LabeledMatrix {
  Matrix values;
  std::vector<std::string> column_names;
  std::vector<ClassId> labels;  // empty when the file has no label column
};
LabeledMatrix read_feature_matrix(const std::filesystem::path& path);

}  // namespace tweetsat
