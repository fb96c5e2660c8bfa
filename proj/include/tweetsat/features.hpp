#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tweetsat/corpus.hpp"
#include "tweetsat/embedding.hpp"
#include "tweetsat/linalg.hpp"

namespace tweetsat {

struct PcaModel {
  Vector mean;
  // k x d; rows orthonormal, first nonzero entry of each row positive.
  Matrix components;
  // Non-increasing.
  Vector eigenvalues;
  // Every input row was identical.
  bool degenerate = false;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.rows(); }
};

// Top-k eigenvectors of the sample covariance (divisor n - 1).
PcaModel pca_fit(const Matrix& x, int k);
// (x - mean) * components^T
Matrix pca_transform(const PcaModel& model, const Matrix& x);

enum class NormalizationKind { min_max, z_score };

struct Normalizer {
  NormalizationKind kind = NormalizationKind::min_max;
  // min/max per column for min_max; mean/stddev are filled for z_score.
  Vector min;
  Vector max;
  Vector mean;
  Vector stddev;
};

Normalizer normalize_fit(const Matrix& x, NormalizationKind kind = NormalizationKind::min_max);
// min_max: (x - min) / (max - min) clamped to [0, 1]; constant columns map to 0.
// z_score: (x - mean) / stddev; constant columns map to 0.
Matrix normalize_apply(const Normalizer& nrm, const Matrix& x);

// Statistics behind the non-text features, computed from training records only.
struct ExtendedContext {
  std::vector<std::string> airlines;   // sorted
  std::vector<std::string> timezones;  // sorted; OTHER bucket is implicit
  std::unordered_map<std::string, std::size_t> user_counts;
  std::map<std::string, Coordinate> timezone_centroids;

  static ExtendedContext fit(std::span<const TweetRecord> train);

  std::vector<std::string> column_names() const;
  std::size_t width() const { return airlines.size() + timezones.size() + 9; }
};

// Layout: airline one-hot, hour (sin, cos), weekday (sin, cos), log1p(user
// training count), timezone one-hot + OTHER, (lat, lon), log1p(retweets).
// Missing timestamps give zero cyclic features. A missing coordinate falls back
// to the training centroid of the record's timezone, then to (0, 0).
std::vector<double> encode_extended(const TweetRecord& record, const ExtendedContext& context);
Matrix encode_extended(std::span<const TweetRecord> records, const ExtendedContext& context);

enum class FeatureSet { text_only, extended };
std::string_view feature_set_name(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);

struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> column_names;
  FeatureSet feature_set = FeatureSet::text_only;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// text_only ignores `extended`. Throws on row mismatch, duplicate column
// names, or non-finite entries.
FeatureMatrix assemble(const Matrix& text, std::span<const std::string> text_names,
                       const Matrix* extended, std::span<const std::string> extended_names,
                       FeatureSet mode);

// Mean document vectors for each text, one row per text.
Matrix document_matrix(std::span<const std::string> texts, const EmbeddingTable& table);

enum class TextSource { filtered, no_url };
std::string_view text_source_name(TextSource source);
TextSource parse_text_source(std::string_view name);

struct FeaturePipelineOptions {
  int pca_k = 7;
  // Skip PCA and feed the raw document vectors.
  bool use_pca = true;
  NormalizationKind normalization = NormalizationKind::min_max;
  TextSource text_source = TextSource::filtered;
};

// Text embedding -> PCA, optional extended features, then one normalizer over
// all columns. Everything is fitted on the rows passed to fit().
class FeaturePipeline {
 public:
  FeaturePipeline(const EmbeddingTable& table, FeaturePipelineOptions options, FeatureSet mode)
      : table_(&table), options_(options), mode_(mode) {}

  void fit(std::span<const TweetRecord> train);
  FeatureMatrix transform(std::span<const TweetRecord> records) const;

  const std::optional<PcaModel>& pca() const { return pca_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const ExtendedContext& context() const { return context_; }
  FeatureSet mode() const { return mode_; }

  // Stable 64-bit digest of every fitted parameter.
  std::uint64_t fit_digest() const;

 private:
  FeatureMatrix raw(std::span<const TweetRecord> records) const;

  const EmbeddingTable* table_;
  FeaturePipelineOptions options_;
  FeatureSet mode_;
  bool fitted_ = false;
  std::optional<PcaModel> pca_;
  ExtendedContext context_;
  Normalizer normalizer_;
};

// The text each record contributes to embedding features.
std::string record_text(const TweetRecord& record, TextSource source);

}  // namespace tweetsat
