#include "tweetsat/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "tweetsat/error.hpp"
#include "tweetsat/io.hpp"
#include "tweetsat/mlp.hpp"
#include "tweetsat/rng.hpp"
#include "tweetsat/textclean.hpp"

namespace tweetsat {

Split stratified_split(std::span<const ClassId> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("stratified_split: ratio must lie in (0, 1)");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= kNumClasses) {
      throw Error("stratified_split: label out of range at row " + std::to_string(i));
    }
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  Rng rng(derive_seed(seed, "stratified-split"));
  Split s;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& m = members[static_cast<std::size_t>(c)];
    if (m.empty()) continue;
    if (m.size() < 2) {
      throw Error("stratified_split: class '" + std::string(class_name(c)) +
                  "' has fewer than 2 members");
    }
    rng.shuffle(m);
    const auto n = static_cast<long long>(m.size());
    const long long k = std::clamp(std::llround(ratio * static_cast<double>(n)), 1LL, n - 1);
    s.train.insert(s.train.end(), m.begin(), m.begin() + k);
    s.test.insert(s.test.end(), m.begin() + k, m.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

void check_pair(std::span<const ClassId> pred, std::span<const ClassId> truth, const char* what) {
  if (pred.size() != truth.size()) {
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(pred.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  if (pred.empty()) throw Error(std::string(what) + ": empty input");
}

}  // namespace

double accuracy(std::span<const ClassId> pred, std::span<const ClassId> truth) {
  check_pair(pred, truth, "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Confusion confusion(std::span<const ClassId> pred, std::span<const ClassId> truth) {
  check_pair(pred, truth, "confusion");
  Confusion m{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= kNumClasses || truth[i] < 0 || truth[i] >= kNumClasses) {
      throw Error("confusion: label out of range at position " + std::to_string(i));
    }
    ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return m;
}

double macro_f1(const Confusion& m) {
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += m[k][c];
      actual += m[c][k];
    }
    const double denom = static_cast<double>(predicted + actual);
    if (denom > 0) sum += 2.0 * static_cast<double>(m[c][c]) / denom;
  }
  return sum / kNumClasses;
}

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::svm: return "SVM";
    case ModelKind::v1: return "V1";
    case ModelKind::v2: return "V2";
    case ModelKind::v3: return "V3";
    case ModelKind::v4: return "V4";
    case ModelKind::v5: return "V5";
    case ModelKind::v6: return "V6";
    case ModelKind::cnn: return "CNN";
  }
  return "SVM";
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> models = {ModelKind::svm, ModelKind::v1, ModelKind::v2,
                                                ModelKind::v3,  ModelKind::v4, ModelKind::v5,
                                                ModelKind::v6,  ModelKind::cnn};
  return models;
}

ModelKind parse_model(std::string_view name) {
  for (auto m : all_models()) {
    if (model_name(m) == name) return m;
  }
  throw Error("unknown model '" + std::string(name) + "' (expected SVM, V1..V6 or CNN)");
}

namespace {

std::string_view normalization_name(NormalizationKind k) {
  return k == NormalizationKind::min_max ? "min_max" : "z_score";
}

NormalizationKind parse_normalization(std::string_view s) {
  if (s == "min_max") return NormalizationKind::min_max;
  if (s == "z_score") return NormalizationKind::z_score;
  throw Error("unknown normalization '" + std::string(s) + "'");
}

}  // namespace

void ExperimentPlan::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error("plan: split_ratio must lie in (0, 1)");
  if (features.pca_k < 1) throw Error("plan: pca_k must be positive");
  const bool has_cnn = std::find(models.begin(), models.end(), ModelKind::cnn) != models.end();
  const bool has_text =
      std::find(feature_sets.begin(), feature_sets.end(), FeatureSet::text_only) != feature_sets.end();
  if (has_cnn && !has_text) throw Error("plan: CNN runs on text only, so TextOnly must be selected");
  if (std::set(models.begin(), models.end()).size() != models.size()) {
    throw Error("plan: duplicate model");
  }
  if (std::set(feature_sets.begin(), feature_sets.end()).size() != feature_sets.size()) {
    throw Error("plan: duplicate feature set");
  }
  svm.validate();
  if (mlp_epochs && *mlp_epochs < 0) throw Error("plan: mlp epochs must be non-negative");
  if (cnn_augment) augment.validate();
  CnnConfig c = cnn;
  c.vocab_size = std::max(c.vocab_size, 2);
  c.validate();
  if (cnn_vocab_cap < 3) throw Error("plan: cnn vocab_cap must exceed the reserved ids");
}

std::vector<std::pair<ModelKind, FeatureSet>> ExperimentPlan::cells() const {
  std::vector<std::pair<ModelKind, FeatureSet>> out;
  for (auto m : models) {
    for (auto f : feature_sets) {
      if (m == ModelKind::cnn && f != FeatureSet::text_only) continue;
      out.emplace_back(m, f);
    }
  }
  return out;
}

nlohmann::ordered_json ExperimentPlan::to_json() const {
  nlohmann::ordered_json j;
  j["models"] = nlohmann::ordered_json::array();
  for (auto m : models) j["models"].push_back(model_name(m));
  j["feature_sets"] = nlohmann::ordered_json::array();
  for (auto f : feature_sets) j["feature_sets"].push_back(feature_set_name(f));
  j["split_ratio"] = split_ratio;
  j["seed"] = seed;
  j["subsample"] = subsample;
  j["features"] = {{"pca_k", features.pca_k},
                   {"use_pca", features.use_pca},
                   {"normalization", normalization_name(features.normalization)},
                   {"text_source", text_source_name(features.text_source)}};
  j["svm"] = {{"C", svm.C},
              {"kernel", kernel_name(svm.kernel.kind)},
              {"gamma", svm.kernel.gamma},
              {"tol", svm.tol},
              {"max_passes", svm.max_passes},
              {"max_iterations", svm.max_iterations}};
  j["mlp"] = nlohmann::ordered_json::object();
  if (mlp_epochs) {
    j["mlp"]["epochs"] = *mlp_epochs;
  } else {
    j["mlp"]["epochs"] = nullptr;
  }
  nlohmann::ordered_json ops = nlohmann::ordered_json::array();
  for (auto op : augment.sentence_ops) ops.push_back(sentence_op_name(op));
  j["augment"] = {{"enabled", cnn_augment},
                  {"factor", augment.target_factor},
                  {"word_sub_rate", augment.word_sub_rate},
                  {"neighbor_k", augment.neighbor_k},
                  {"sentence_ops", ops},
                  {"vocab_cap", augment.vocab_cap},
                  {"retry_budget", augment.retry_budget}};
  j["cnn"] = {{"embed_dim", cnn.embed_dim},         {"filter_count", cnn.filter_count},
              {"kernel_sizes", cnn.kernel_sizes},   {"dense_units", cnn.dense_units},
              {"dropout", cnn.dropout},             {"max_len", cnn.max_len},
              {"epochs", cnn.epochs},               {"batch_size", cnn.batch_size},
              {"learning_rate", cnn.learning_rate}, {"vocab_cap", cnn_vocab_cap}};
  return j;
}

std::uint64_t ExperimentPlan::config_hash() const { return fnv1a64(to_json().dump()); }

namespace {

void check_keys(const nlohmann::json& j, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw Error("plan: '" + std::string(where) + "' must be a table");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error("plan: unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  try {
    check_keys(j, "plan",
               {"models", "feature_sets", "split_ratio", "seed", "subsample", "features", "svm",
                "mlp", "augment", "cnn"});
    if (j.contains("models")) {
      p.models.clear();
      for (const auto& m : j.at("models")) p.models.push_back(parse_model(m.get<std::string>()));
    }
    if (j.contains("feature_sets")) {
      p.feature_sets.clear();
      for (const auto& f : j.at("feature_sets")) {
        p.feature_sets.push_back(parse_feature_set(f.get<std::string>()));
      }
    }
    read(j, "split_ratio", p.split_ratio);
    read(j, "seed", p.seed);
    read(j, "subsample", p.subsample);
    if (j.contains("features")) {
      const auto& f = j.at("features");
      check_keys(f, "features", {"pca_k", "use_pca", "normalization", "text_source"});
      read(f, "pca_k", p.features.pca_k);
      read(f, "use_pca", p.features.use_pca);
      if (f.contains("normalization")) {
        p.features.normalization = parse_normalization(f.at("normalization").get<std::string>());
      }
      if (f.contains("text_source")) {
        p.features.text_source = parse_text_source(f.at("text_source").get<std::string>());
      }
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      check_keys(s, "svm", {"C", "kernel", "gamma", "tol", "max_passes", "max_iterations"});
      read(s, "C", p.svm.C);
      if (s.contains("kernel")) p.svm.kernel.kind = parse_kernel(s.at("kernel").get<std::string>());
      read(s, "gamma", p.svm.kernel.gamma);
      read(s, "tol", p.svm.tol);
      read(s, "max_passes", p.svm.max_passes);
      read(s, "max_iterations", p.svm.max_iterations);
    }
    if (j.contains("mlp")) {
      const auto& m = j.at("mlp");
      check_keys(m, "mlp", {"epochs"});
      if (m.contains("epochs") && !m.at("epochs").is_null()) p.mlp_epochs = m.at("epochs").get<int>();
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      check_keys(a, "augment",
                 {"enabled", "factor", "word_sub_rate", "neighbor_k", "sentence_ops", "vocab_cap",
                  "retry_budget"});
      read(a, "enabled", p.cnn_augment);
      read(a, "factor", p.augment.target_factor);
      read(a, "word_sub_rate", p.augment.word_sub_rate);
      read(a, "neighbor_k", p.augment.neighbor_k);
      if (a.contains("sentence_ops")) {
        p.augment.sentence_ops.clear();
        for (const auto& op : a.at("sentence_ops")) {
          p.augment.sentence_ops.push_back(parse_sentence_op(op.get<std::string>()));
        }
      }
      read(a, "vocab_cap", p.augment.vocab_cap);
      read(a, "retry_budget", p.augment.retry_budget);
    }
    if (j.contains("cnn")) {
      const auto& c = j.at("cnn");
      check_keys(c, "cnn",
                 {"embed_dim", "filter_count", "kernel_sizes", "dense_units", "dropout", "max_len",
                  "epochs", "batch_size", "learning_rate", "vocab_cap"});
      read(c, "embed_dim", p.cnn.embed_dim);
      read(c, "filter_count", p.cnn.filter_count);
      read(c, "kernel_sizes", p.cnn.kernel_sizes);
      read(c, "dense_units", p.cnn.dense_units);
      read(c, "dropout", p.cnn.dropout);
      read(c, "max_len", p.cnn.max_len);
      read(c, "epochs", p.cnn.epochs);
      read(c, "batch_size", p.cnn.batch_size);
      read(c, "learning_rate", p.cnn.learning_rate);
      read(c, "vocab_cap", p.cnn_vocab_cap);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  try {
    return plan_from_json(load_structured(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string CellResult::name() const {
  return std::string(model_name(model)) + "/" + std::string(feature_set_name(feature_set));
}

const CellResult* ExperimentReport::find(ModelKind model, FeatureSet set) const {
  for (const auto& c : cells) {
    if (c.model == model && c.feature_set == set) return &c;
  }
  return nullptr;
}

std::vector<Improvement> improvement_table(std::span<const CellResult> cells) {
  std::vector<Improvement> out;
  for (auto m : all_models()) {
    const CellResult* text = nullptr;
    const CellResult* ext = nullptr;
    for (const auto& c : cells) {
      if (c.model != m || !c.ok) continue;
      (c.feature_set == FeatureSet::text_only ? text : ext) = &c;
    }
    if (text && ext) {
      out.push_back({m, text->accuracy, ext->accuracy, 100.0 * (ext->accuracy - text->accuracy)});
    }
  }
  return out;
}

namespace {

struct PreparedFeatures {
  FeatureMatrix train;
  FeatureMatrix test;
  std::uint64_t digest = 0;
  std::string error;
};

std::vector<std::string> no_url_texts(std::span<const TweetRecord> records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(clean_tweet(r.text_raw).no_url);
  return out;
}

std::vector<Sequence> encode_all(std::span<const std::string> texts, const Vocab& vocab) {
  std::vector<Sequence> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto tokens = tokenize(t);
    out.push_back(encode_sequence(tokens, vocab));
  }
  return out;
}

void run_cnn_cell(CellResult& cell, std::span<const TweetRecord> train,
                  std::span<const ClassId> train_labels, std::span<const TweetRecord> test, const EmbeddingTable& table,
                  const ExperimentPlan& plan, std::vector<ClassId>& pred) {
  std::vector<std::string> texts;
  std::vector<ClassId> labels;
  if (plan.cnn_augment) {
    AugmentConfig a = plan.augment;
    a.seed = derive_seed(cell.seed, "augment");
    const NeighborIndex index(table, a.vocab_cap);
    auto res = build_augmented_dataset(train, index, a);
    for (const auto& w : res.warnings) spdlog::warn("{}: {}", cell.name(), w);
    for (auto& s : res.samples) {
      texts.push_back(std::move(s.text));
      labels.push_back(s.label);
    }
    spdlog::info("{}: {} training samples after augmentation", cell.name(), texts.size());
  } else {
    texts = no_url_texts(train);
    labels.assign(train_labels.begin(), train_labels.end());
  }
  {
    std::vector<std::size_t> lengths;
    lengths.reserve(texts.size());
    for (const auto& t : texts) lengths.push_back(tokenize(t).size());
    if (!lengths.empty()) {
      const auto k = std::min(lengths.size() - 1, lengths.size() * 99 / 100);
      std::nth_element(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(k), lengths.end());
      spdlog::info("{}: 99th percentile token length {} (max_len {})", cell.name(), lengths[k],
                   plan.cnn.max_len);
    }
  }
  const Vocab vocab =
      build_vocab(texts, plan.cnn_vocab_cap, static_cast<std::size_t>(plan.cnn.max_len));
  const auto seqs = encode_all(texts, vocab);
  CnnConfig c = plan.cnn;
  c.vocab_size = static_cast<int>(vocab.size());
  c.seed = cell.seed;
  const CnnModel model = cnn_train(seqs, labels, c);
  const auto test_texts = no_url_texts(test);
  pred = cnn_predict(model, encode_all(test_texts, vocab)).labels;
  cell.train_rows = texts.size();
  cell.feature_columns = static_cast<std::size_t>(c.max_len);
  cell.loss_trace = model.loss_trace();
}

}  // namespace

ExperimentReport run_experiment(std::span<const TweetRecord> records, const EmbeddingTable& table,
                                const ExperimentPlan& plan) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  plan.validate();
  if (records.empty()) throw Error("run_experiment: no records");

  std::vector<ClassId> all_labels;
  all_labels.reserve(records.size());
  for (const auto& r : records) all_labels.push_back(r.label);

  std::vector<std::size_t> pool(records.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  if (plan.subsample > 0 && plan.subsample < records.size()) {
    const double frac = static_cast<double>(plan.subsample) / static_cast<double>(records.size());
    pool = stratified_split(all_labels, frac, derive_seed(plan.seed, "subsample")).train;
  }
  std::vector<ClassId> pool_labels;
  for (auto i : pool) pool_labels.push_back(all_labels[i]);
  const Split split = stratified_split(pool_labels, plan.split_ratio, plan.seed);

  std::vector<TweetRecord> train, test;
  std::vector<ClassId> train_labels, test_labels;
  for (auto i : split.train) {
    train.push_back(records[pool[i]]);
    train_labels.push_back(pool_labels[i]);
  }
  for (auto i : split.test) {
    test.push_back(records[pool[i]]);
    test_labels.push_back(pool_labels[i]);
  }

  ExperimentReport report;
  report.plan = plan;
  report.train_rows = train.size();
  report.test_rows = test.size();
  for (auto y : test_labels) ++report.test_class_counts[static_cast<std::size_t>(y)];
  report.majority_class = static_cast<ClassId>(
      std::max_element(report.test_class_counts.begin(), report.test_class_counts.end()) -
      report.test_class_counts.begin());
  report.majority_baseline =
      static_cast<double>(report.test_class_counts[static_cast<std::size_t>(report.majority_class)]) /
      static_cast<double>(test.size());
  if (std::find(plan.feature_sets.begin(), plan.feature_sets.end(), FeatureSet::extended) !=
      plan.feature_sets.end()) {
    spdlog::info("{}", kCoordinateFallbackNote);
  }
  spdlog::info("split: {} train / {} test rows, majority baseline {:.4f}", train.size(), test.size(),
               report.majority_baseline);

  std::map<FeatureSet, PreparedFeatures> prepared;
  auto features_for = [&](FeatureSet fs) -> const PreparedFeatures& {
    auto it = prepared.find(fs);
    if (it != prepared.end()) return it->second;
    PreparedFeatures pf;
    try {
      FeaturePipeline pipe(table, plan.features, fs);
      pipe.fit(train);
      pf.train = pipe.transform(train);
      pf.test = pipe.transform(test);
      pf.digest = pipe.fit_digest();
    } catch (const std::exception& e) {
      pf.error = e.what();
    }
    return prepared.emplace(fs, std::move(pf)).first->second;
  };

  for (const auto& [model, fs] : plan.cells()) {
    CellResult cell;
    cell.model = model;
    cell.feature_set = fs;
    cell.seed = derive_seed(plan.seed, cell.name());
    const auto t0 = clock::now();
    spdlog::info("cell {} starting", cell.name());
    try {
      std::vector<ClassId> pred;
      if (model == ModelKind::cnn) {
        run_cnn_cell(cell, train, train_labels, test, table, plan, pred);
      } else {
        const PreparedFeatures& pf = features_for(fs);
        if (!pf.error.empty()) throw Error("feature extraction failed: " + pf.error);
        cell.fit_digest = pf.digest;
        cell.train_rows = static_cast<std::size_t>(pf.train.rows());
        cell.feature_columns = static_cast<std::size_t>(pf.train.cols());
        if (model == ModelKind::svm) {
          const SvmModel m = svm_train(pf.train.values, train_labels, plan.svm, cell.seed);
          for (const auto& d : m.diagnostics) {
            if (!d.converged) {
              spdlog::warn("{}: a pairwise SMO solve hit the pass limit (KKT violation {:.3g})",
                           cell.name(), d.max_kkt_violation);
            }
          }
          pred = svm_predict(m, pf.test.values);
        } else {
          MlpConfig cfg = mlp_preset(model_name(model));
          if (plan.mlp_epochs) cfg.epochs = *plan.mlp_epochs;
          cfg.seed = cell.seed;
          const MlpModel m = mlp_train(pf.train.values, train_labels, cfg);
          cell.loss_trace = m.loss_trace();
          pred = mlp_predict(m, pf.test.values).labels;
        }
      }
      cell.accuracy = accuracy(pred, test_labels);
      cell.confusion = confusion(pred, test_labels);
      cell.macro_f1 = macro_f1(cell.confusion);
      cell.ok = true;
      spdlog::info("cell {} accuracy {:.4f}", cell.name(), cell.accuracy);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      spdlog::error("cell {} failed: {}", cell.name(), cell.error);
    }
    cell.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    report.cells.push_back(std::move(cell));
  }
  report.improvements = improvement_table(report.cells);
  report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  return report;
}

}  // namespace tweetsat
