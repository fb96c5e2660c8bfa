#include "tweetsat/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tweetsat/augment.hpp"
#include "tweetsat/cnn.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/csv.hpp"
#include "tweetsat/embedding.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/evalharness.hpp"
#include "tweetsat/features.hpp"
#include "tweetsat/io.hpp"
#include "tweetsat/mlp.hpp"
#include "tweetsat/svm.hpp"
#include "tweetsat/textclean.hpp"

namespace tweetsat {
namespace {

// Lets --config read JSON: nested objects become sections, arrays become
// repeated inputs.
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }

  static void walk(const nlohmann::json& j, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) throw CLI::ConversionError("config: JSON sections must be objects");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        walk(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Options {
  std::string log_level = "info";

  std::string inspect_csv, inspect_out;

  std::string clean_csv, clean_text_col = "text", clean_out, clean_collapse = "single_pass";

  std::string aug_csv, aug_glove, aug_out;
  std::size_t glove_dim = 50;
  double aug_factor = 3.0, aug_rate = 0.3;
  std::size_t aug_k = 5, aug_vocab_cap = 20000;
  std::uint64_t seed = 42;

  std::string feat_csv, feat_glove, feat_out, feat_mode = "Extended", feat_text = "filtered";
  int feat_pca_k = 7;
  bool feat_no_pca = false;

  std::string train_in, train_model, train_out, train_kernel = "linear";
  int train_epochs = -1, train_max_len = 40;
  double train_c = 10.0;

  std::string eval_csv, eval_glove, eval_plan, eval_out;
  std::size_t eval_subsample = 0;
  bool eval_no_timing = false;

  std::string compare_report;
};

RawCorpus load_any_csv(const std::string& path) { return load_corpus(path); }

std::vector<TweetRecord> load_records(const std::string& path) {
  const RawCorpus raw = load_corpus(path, tweets_columns());
  return prune_columns(raw).records;
}

void write_output(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
    spdlog::info("wrote {}", path);
  }
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const RawCorpus raw = load_corpus(o.inspect_csv, tweets_columns());
  const auto summary = corpus_summary(raw);
  auto j = to_json(summary);
  nlohmann::ordered_json retained = nlohmann::ordered_json::array();
  for (const auto& c : retained_columns(raw, PrunePolicy{})) retained.push_back(c);
  j["retained_columns"] = retained;
  write_output(o.inspect_out, j.dump(2) + "\n", out);
  return 0;
}

int cmd_clean(const Options& o, std::ostream& out) {
  const CollapseMode mode = o.clean_collapse == "fixpoint" ? CollapseMode::fixpoint
                                                            : CollapseMode::single_pass;
  const RawCorpus raw = load_any_csv(o.clean_csv);
  const std::size_t col = raw.require_column(o.clean_text_col);
  for (const auto& name : {"no_url", "filtered_text"}) {
    if (raw.column_index(name)) throw Error(o.clean_csv + " already has a '" + name + "' column");
  }
  std::ostringstream ss;
  csv::Row header = raw.column_names;
  header.push_back("no_url");
  header.push_back("filtered_text");
  csv::write_row(ss, header);
  for (const auto& row : raw.rows) {
    const CleanedTweet c = clean_tweet(row[col], mode);
    csv::Row r = row;
    r.push_back(c.no_url);
    r.push_back(c.filtered);
    csv::write_row(ss, r);
  }
  write_output(o.clean_out, ss.str(), out);
  return 0;
}

int cmd_augment(const Options& o, std::ostream& out) {
  const RawCorpus raw = load_any_csv(o.aug_csv);
  const std::size_t label_col = raw.require_column("airline_sentiment");
  const auto no_url_col = raw.column_index("no_url");
  const std::size_t text_col = no_url_col ? *no_url_col : raw.require_column("text");
  std::vector<LabeledText> inputs;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    LabeledText t;
    try {
      t.label = encode_label(raw.rows[r][label_col]);
    } catch (const Error& e) {
      throw Error(o.aug_csv + ": row " + std::to_string(r + 1) + ": " + e.what());
    }
    t.text = no_url_col ? raw.rows[r][text_col] : clean_tweet(raw.rows[r][text_col]).no_url;
    inputs.push_back(std::move(t));
  }
  AugmentConfig cfg;
  cfg.target_factor = o.aug_factor;
  cfg.word_sub_rate = o.aug_rate;
  cfg.neighbor_k = o.aug_k;
  cfg.vocab_cap = o.aug_vocab_cap;
  cfg.seed = o.seed;
  cfg.validate();
  const EmbeddingTable table = load_embeddings(o.aug_glove, o.glove_dim);
  const NeighborIndex index(table, cfg.vocab_cap);
  const AugmentResult res = build_augmented_dataset(inputs, index, cfg);
  for (const auto& w : res.warnings) spdlog::warn("{}", w);
  std::ostringstream ss;
  csv::write_row(ss, {"text", "label", "origin"});
  for (const auto& s : res.samples) {
    csv::write_row(ss, {s.text, std::string(class_name(s.label)), std::string(origin_name(s.origin))});
  }
  spdlog::info("{} inputs -> {} samples (seed {})", inputs.size(), res.samples.size(), cfg.seed);
  write_output(o.aug_out, ss.str(), out);
  return 0;
}

FeatureSet parse_mode(std::string_view s) {
  if (s == "extended" || s == "Extended") return FeatureSet::extended;
  if (s == "text" || s == "text_only" || s == "TextOnly") return FeatureSet::text_only;
  throw Error("unknown feature mode '" + std::string(s) + "'");
}

int cmd_featurize(const Options& o, std::ostream& out) {
  const RawCorpus raw = load_any_csv(o.feat_csv);
  const auto records = prune_columns(raw).records;
  const EmbeddingTable table = load_embeddings(o.feat_glove, o.glove_dim);
  FeaturePipelineOptions opts;
  opts.pca_k = o.feat_pca_k;
  opts.use_pca = !o.feat_no_pca;
  opts.text_source = parse_text_source(o.feat_text);
  FeaturePipeline pipe(table, opts, parse_mode(o.feat_mode));
  pipe.fit(records);
  const FeatureMatrix m = pipe.transform(records);
  std::vector<ClassId> labels;
  for (const auto& r : records) labels.push_back(r.label);
  write_output(o.feat_out, feature_matrix_csv(m, labels), out);
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const ModelKind kind = parse_model(o.train_model);
  nlohmann::ordered_json body;
  if (kind == ModelKind::cnn) {
    const RawCorpus raw = load_any_csv(o.train_in);
    const auto label_idx = raw.column_index("label");
    const std::size_t label_col = label_idx ? *label_idx : raw.require_column("airline_sentiment");
    const auto no_url = raw.column_index("no_url");
    const std::size_t text_col = label_idx ? raw.require_column("text")
                                           : (no_url ? *no_url : raw.require_column("text"));
    const bool needs_clean = !label_idx && !no_url;
    std::vector<std::string> texts;
    std::vector<ClassId> labels;
    for (const auto& row : raw.rows) {
      texts.push_back(needs_clean ? clean_tweet(row[text_col]).no_url : row[text_col]);
      labels.push_back(encode_label(row[label_col]));
    }
    CnnConfig cfg;
    cfg.seed = o.seed;
    cfg.max_len = o.train_max_len;
    if (o.train_epochs >= 0) cfg.epochs = o.train_epochs;
    const Vocab vocab = build_vocab(texts, 20000, static_cast<std::size_t>(cfg.max_len));
    cfg.vocab_size = static_cast<int>(vocab.size());
    std::vector<Sequence> seqs;
    for (const auto& t : texts) {
      const auto tokens = tokenize(t);
      seqs.push_back(encode_sequence(tokens, vocab));
    }
    const CnnModel model = cnn_train(seqs, labels, cfg);
    body["vocab"] = vocab.id_to_token;
    body["network"] = to_json(model);
  } else {
    const LabeledMatrix m = read_feature_matrix(o.train_in);
    if (m.labels.empty()) throw Error(o.train_in + " has no 'label' column");
    body["columns"] = m.column_names;
    if (kind == ModelKind::svm) {
      SvmConfig cfg;
      cfg.C = o.train_c;
      cfg.kernel.kind = parse_kernel(o.train_kernel);
      body["svm"] = to_json(svm_train(m.values, m.labels, cfg, o.seed));
    } else {
      MlpConfig cfg = mlp_preset(model_name(kind));
      cfg.seed = o.seed;
      if (o.train_epochs >= 0) cfg.epochs = o.train_epochs;
      body["mlp"] = to_json(mlp_train(m.values, m.labels, cfg));
    }
  }
  body["seed"] = o.seed;
  write_output(o.train_out, wrap_model(model_name(kind), std::move(body)).dump() + "\n", out);
  return 0;
}

int cmd_evaluate(const Options& o, const CLI::App& sub, std::ostream& out) {
  ExperimentPlan plan = o.eval_plan.empty() ? ExperimentPlan{} : load_plan(o.eval_plan);
  if (sub.get_option("--seed")->count() > 0) plan.seed = o.seed;
  if (o.eval_subsample > 0) plan.subsample = o.eval_subsample;
  plan.validate();
  const auto records = load_records(o.eval_csv);
  const EmbeddingTable table = load_embeddings(o.eval_glove, o.glove_dim);
  const ExperimentReport report = run_experiment(records, table, plan);
  if (o.eval_out.empty() || o.eval_out == "-") {
    out << report_to_json(report, !o.eval_no_timing).dump(2) << "\n";
  } else {
    emit_report(report, o.eval_out, report_format_for(o.eval_out), !o.eval_no_timing);
    spdlog::info("wrote {}", o.eval_out);
  }
  return 0;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const std::string text = read_file(o.compare_report);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(o.compare_report + ": " + e.what());
  }
  out << format_improvement_table(report_from_json(j));
  return 0;
}

void setup_logging(const std::string& level) {
  static auto logger = [] {
    auto l = spdlog::get("tweetsat");
    return l ? l : spdlog::stderr_color_mt("tweetsat");
  }();
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

bool wants_json_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    std::string_view value;
    if (a == "--config" && i + 1 < argc) {
      value = argv[i + 1];
    } else if (a.starts_with("--config=")) {
      value = a.substr(9);
    }
    if (value.ends_with(".json")) return true;
  }
  return false;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Airline tweet sentiment pipeline"};
  app.name("tweetsat");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or JSON file with option defaults (flags win)");
  if (wants_json_config(argc, argv)) app.config_formatter(std::make_shared<ConfigJson>());
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
      ->capture_default_str();

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Master seed")->envname("TWEETSAT_SEED")->capture_default_str();
  };
  auto add_glove = [&](CLI::App* sub, std::string& path) {
    sub->add_option("--glove", path, "Pretrained vectors (text format)")->required();
    sub->add_option("--glove-dim", o.glove_dim, "Vector dimension")->capture_default_str();
  };

  auto* inspect = app.add_subcommand("inspect", "Summarise the tweet CSV");
  inspect->add_option("csv", o.inspect_csv, "Tweet CSV")->required();
  inspect->add_option("--summary-out", o.inspect_out, "JSON output (default stdout)");

  auto* clean = app.add_subcommand("clean", "Append no_url and filtered_text columns");
  clean->add_option("csv", o.clean_csv, "Input CSV")->required();
  clean->add_option("--text-col", o.clean_text_col, "Column to clean")->capture_default_str();
  clean->add_option("--out", o.clean_out, "Output CSV (default stdout)");
  clean->add_option("--collapse", o.clean_collapse, "Double-space collapse mode")
      ->check(CLI::IsMember({"single_pass", "fixpoint"}))
      ->capture_default_str();

  auto* augment = app.add_subcommand("augment", "Build an augmented training set");
  augment->add_option("csv", o.aug_csv, "Cleaned CSV")->required();
  add_glove(augment, o.aug_glove);
  augment->add_option("--factor", o.aug_factor, "Target samples per record")->capture_default_str();
  augment->add_option("--word-sub-rate", o.aug_rate, "Word substitution probability")
      ->capture_default_str();
  augment->add_option("--neighbor-k", o.aug_k, "Neighbours per word")->capture_default_str();
  augment->add_option("--vocab-cap", o.aug_vocab_cap, "Neighbour search rows")->capture_default_str();
  augment->add_option("--out", o.aug_out, "Output CSV (default stdout)");
  add_seed(augment);

  auto* featurize = app.add_subcommand("featurize", "Write the feature matrix");
  featurize->add_option("csv", o.feat_csv, "Cleaned CSV")->required();
  add_glove(featurize, o.feat_glove);
  featurize->add_option("--pca-k", o.feat_pca_k, "PCA components")->capture_default_str();
  featurize->add_flag("--no-pca", o.feat_no_pca, "Keep the raw document vectors");
  featurize->add_option("--mode", o.feat_mode, "TextOnly or Extended")->capture_default_str();
  featurize->add_option("--text-source", o.feat_text, "filtered or no_url")->capture_default_str();
  featurize->add_option("--out", o.feat_out, "Matrix CSV (default stdout)");

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("input", o.train_in, "Feature matrix CSV, or a text CSV for CNN")->required();
  train->add_option("--model", o.train_model, "SVM, V1..V6 or CNN")->required();
  train->add_option("--out", o.train_out, "Model JSON (default stdout)");
  train->add_option("--epochs", o.train_epochs, "Override the epoch count");
  train->add_option("--kernel", o.train_kernel, "SVM kernel")->capture_default_str();
  train->add_option("--C", o.train_c, "SVM box constraint")->capture_default_str();
  train->add_option("--max-len", o.train_max_len, "CNN sequence length")->capture_default_str();
  add_seed(train);

  auto* evaluate = app.add_subcommand("evaluate", "Run the model x feature-set experiment");
  evaluate->add_option("--csv", o.eval_csv, "Tweet CSV")->required();
  add_glove(evaluate, o.eval_glove);
  evaluate->add_option("--plan", o.eval_plan, "Experiment plan (TOML or JSON)");
  evaluate->add_option("--out", o.eval_out, "Report path, .json or .csv (default stdout)");
  evaluate->add_option("--subsample", o.eval_subsample, "Use a stratified sample of this many rows");
  evaluate->add_flag("--no-timing", o.eval_no_timing, "Omit the wall-clock section");
  add_seed(evaluate);

  auto* compare = app.add_subcommand("compare", "Print the improvement table of a report");
  compare->add_option("report", o.compare_report, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  setup_logging(o.log_level);
  try {
    if (*inspect) return cmd_inspect(o, out);
    if (*clean) return cmd_clean(o, out);
    if (*augment) return cmd_augment(o, out);
    if (*featurize) return cmd_featurize(o, out);
    if (*train) return cmd_train(o, out);
    if (*evaluate) return cmd_evaluate(o, *evaluate, out);
    if (*compare) return cmd_compare(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace tweetsat
