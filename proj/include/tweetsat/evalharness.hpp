#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetsat/augment.hpp"
#include "tweetsat/cnn.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/embedding.hpp"
#include "tweetsat/features.hpp"
#include "tweetsat/svm.hpp"

namespace tweetsat {

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Per class, round(ratio * n_c) members (clamped to [1, n_c - 1]) go to train,
// chosen by a seeded shuffle. Throws when a class has fewer than two members.
Split stratified_split(std::span<const ClassId> labels, double ratio, std::uint64_t seed);

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

double accuracy(std::span<const ClassId> pred, std::span<const ClassId> truth);
// confusion[t][p] counts truth t predicted p.
Confusion confusion(std::span<const ClassId> pred, std::span<const ClassId> truth);
// Unweighted mean of per-class F1; a class with no support and no predictions
// contributes 0.
double macro_f1(const Confusion& m);

enum class ModelKind { svm, v1, v2, v3, v4, v5, v6, cnn };
std::string_view model_name(ModelKind kind);
ModelKind parse_model(std::string_view name);
const std::vector<ModelKind>& all_models();

struct ExperimentPlan {
  std::vector<ModelKind> models = all_models();
  std::vector<FeatureSet> feature_sets = {FeatureSet::text_only, FeatureSet::extended};
  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  FeaturePipelineOptions features;
  // 0 keeps every record; otherwise a stratified sample of this many rows.
  std::size_t subsample = 0;

  SvmConfig svm;
  // Overrides the epoch count of every MLP preset when set.
  std::optional<int> mlp_epochs;

  bool cnn_augment = true;
  AugmentConfig augment;
  CnnConfig cnn;
  std::size_t cnn_vocab_cap = 20000;

  void validate() const;
  // (model, feature set) pairs in run order; CNN only appears with TextOnly.
  std::vector<std::pair<ModelKind, FeatureSet>> cells() const;
  // Canonical form. Seeds inside the nested configs are not part of it since
  // they are derived from `seed`.
  nlohmann::ordered_json to_json() const;
  std::uint64_t config_hash() const;
};

ExperimentPlan plan_from_json(const nlohmann::json& j);
// TOML or JSON by extension (.toml, .json).
ExperimentPlan load_plan(const std::filesystem::path& path);

struct CellResult {
  ModelKind model = ModelKind::svm;
  FeatureSet feature_set = FeatureSet::text_only;
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion{};
  std::size_t train_rows = 0;
  std::size_t feature_columns = 0;
  // Digest of the fitted feature pipeline (0 for CNN cells).
  std::uint64_t fit_digest = 0;
  // Empty for SVM.
  std::vector<double> loss_trace;
  double seconds = 0.0;

  std::string name() const;
};

struct Improvement {
  ModelKind model = ModelKind::svm;
  double text_only = 0.0;
  double extended = 0.0;
  // 100 * (extended - text_only)
  double improvement_pp = 0.0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::array<std::size_t, kNumClasses> test_class_counts{};
  ClassId majority_class = 0;
  double majority_baseline = 0.0;
  std::vector<CellResult> cells;
  std::vector<Improvement> improvements;
  double total_seconds = 0.0;

  const CellResult* find(ModelKind model, FeatureSet set) const;
};

std::vector<Improvement> improvement_table(std::span<const CellResult> cells);

// Fits every transform on the training split only. A failing cell is recorded
// and the remaining cells still run.
ExperimentReport run_experiment(std::span<const TweetRecord> records, const EmbeddingTable& table,
                                const ExperimentPlan& plan);

// Written into every report that uses extended features.
inline constexpr std::string_view kCoordinateFallbackNote =
    "tweet_coord fusion: a missing coordinate takes the training-set centroid of the "
    "record's user_timezone, or (0, 0) when that timezone has no coordinates";

enum class ReportFormat { json, csv };
ReportFormat report_format_for(const std::filesystem::path& path);

// Wall-clock values live under "timing", which is omitted when
// include_timing is false.
nlohmann::ordered_json report_to_json(const ExperimentReport& report, bool include_timing = true);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const ExperimentReport& report);
inline constexpr std::array<std::string_view, 11> kCsvMetrics = {
    "accuracy", "macro_f1",    "confusion_0_0", "confusion_0_1", "confusion_0_2", "confusion_1_0",
    "confusion_1_1", "confusion_1_2", "confusion_2_0", "confusion_2_1", "confusion_2_2"};
void emit_report(const ExperimentReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timing = true);

std::string format_improvement_table(const ExperimentReport& report);

}  // namespace tweetsat
