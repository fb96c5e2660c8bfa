#include "doctest.h"

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "synthetic.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/evalharness.hpp"
#include "tweetsat/io.hpp"

using namespace tweetsat;
namespace fs = std::filesystem;

namespace {

const std::vector<TweetRecord>& records() {
  static const auto recs = [] {
    std::istringstream in(testing::synthetic_corpus_csv({.rows = 600, .seed = 31}));
    return prune_columns(parse_corpus(in)).records;
  }();
  return recs;
}

const EmbeddingTable& table() {
  static const EmbeddingTable t = [] {
    std::istringstream in(testing::synthetic_embeddings(50));
    return parse_embeddings(in, 50);
  }();
  return t;
}

std::vector<ClassId> labels_of(std::span<const TweetRecord> recs) {
  std::vector<ClassId> y;
  for (const auto& r : recs) y.push_back(r.label);
  return y;
}

fs::path tmp_dir() {
  const fs::path dir = fs::path(TWEETSAT_TEST_TMP) / "unit_evalharness";
  fs::create_directories(dir);
  return dir;
}

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.models = {ModelKind::svm, ModelKind::v1};
  plan.mlp_epochs = 5;
  return plan;
}

}  // namespace

TEST_CASE("stratified split examples") {
  const std::vector<ClassId> four = {0, 0, 1, 1};
  const auto s = stratified_split(four, 0.5, 1);
  REQUIRE(s.train.size() == 2);
  REQUIRE(s.test.size() == 2);
  CHECK(four[s.train[0]] != four[s.train[1]]);
  CHECK(four[s.test[0]] != four[s.test[1]]);

  const std::vector<ClassId> eight = {0, 1, 0, 1, 0, 1, 0, 1};
  const auto e = stratified_split(eight, 0.75, 2);
  CHECK(e.train.size() == 6);
  CHECK(e.test.size() == 2);
  std::map<ClassId, int> per;
  for (auto i : e.train) ++per[eight[i]];
  CHECK(per[0] == 3);
  CHECK(per[1] == 3);

  CHECK_THROWS_AS(stratified_split(std::vector<ClassId>{0, 1, 1}, 0.5, 1), Error);
}

TEST_CASE("split seeds change membership but not class counts") {
  const auto y = labels_of(records());
  const auto a = stratified_split(y, 0.8, 1);
  const auto b = stratified_split(y, 0.8, 2);
  CHECK(a.train != b.train);
  auto counts = [&](const std::vector<std::size_t>& idx) {
    std::map<ClassId, int> m;
    for (auto i : idx) ++m[y[i]];
    return m;
  };
  CHECK(counts(a.train) == counts(b.train));
  CHECK(counts(a.test) == counts(b.test));
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == y.size());
  CHECK(std::is_sorted(a.train.begin(), a.train.end()));
  CHECK(stratified_split(y, 0.8, 1).train == a.train);
}

TEST_CASE("accuracy and confusion") {
  const std::vector<ClassId> t = {0, 1, 2, 2};
  CHECK(accuracy(t, t) == 1.0);
  const auto diag = confusion(t, t);
  CHECK(diag[0][0] == 1);
  CHECK(diag[2][2] == 2);
  CHECK(diag[0][1] == 0);
  CHECK(macro_f1(diag) == 1.0);

  const std::vector<ClassId> wrong = {1, 2, 0, 0};
  CHECK(accuracy(wrong, t) == 0.0);

  const std::vector<ClassId> pred = {0, 1}, truth = {0, 2};
  CHECK(accuracy(pred, truth) == 0.5);
  const auto m = confusion(pred, truth);
  CHECK(m[0][0] == 1);
  CHECK(m[2][1] == 1);
  std::size_t total = 0;
  for (const auto& row : m)
    for (auto v : row) total += v;
  CHECK(total == 2);
  CHECK_THROWS_AS(accuracy(pred, t), Error);
}

TEST_CASE("plan cells") {
  ExperimentPlan plan;
  const auto cells = plan.cells();
  CHECK(cells.size() == 15);
  CHECK(cells.front() == std::pair{ModelKind::svm, FeatureSet::text_only});
  CHECK(cells.back() == std::pair{ModelKind::cnn, FeatureSet::text_only});
  CHECK(model_name(ModelKind::v3) == "V3");
  CHECK(parse_model("CNN") == ModelKind::cnn);
  CHECK_THROWS_AS(parse_model("V9"), Error);
}

TEST_CASE("one-cell experiment on a 200-row subsample") {
  ExperimentPlan plan;
  plan.models = {ModelKind::svm};
  plan.feature_sets = {FeatureSet::text_only};
  plan.subsample = 200;
  const auto report = run_experiment(records(), table(), plan);
  REQUIRE(report.cells.size() == 1);
  const auto& cell = report.cells[0];
  CHECK(cell.ok);
  CHECK(cell.accuracy >= 0.0);
  CHECK(cell.accuracy <= 1.0);
  CHECK(report.train_rows + report.test_rows == 200);
  CHECK(cell.train_rows == report.train_rows);
  CHECK(cell.feature_columns == 7);
  const auto j = report_to_json(report);
  CHECK(j.at("format") == "tweetsat-report");
  CHECK(j.at("cells").size() == 1);
  CHECK(j.contains("timing"));
  CHECK_FALSE(report_to_json(report, false).contains("timing"));
}

TEST_CASE("empty plan") {
  ExperimentPlan plan;
  plan.models.clear();
  const auto report = run_experiment(records(), table(), plan);
  CHECK(report.cells.empty());
  const auto j = report_to_json(report);
  CHECK(j.at("cells").is_array());
  CHECK(j.at("cells").empty());
  CHECK(report_to_csv(report) == "model,feature_set,metric,value\n");
}

TEST_CASE("report serialisation") {
  const auto report = run_experiment(records(), table(), small_plan());
  REQUIRE(report.cells.size() == 4);
  for (const auto& c : report.cells) CHECK(c.ok);

  SUBCASE("json round trip is exact") {
    const auto text = report_to_json(report).dump(2);
    const auto back = report_from_json(nlohmann::json::parse(text));
    REQUIRE(back.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < back.cells.size(); ++i) {
      CHECK(back.cells[i].accuracy == report.cells[i].accuracy);
      CHECK(back.cells[i].macro_f1 == report.cells[i].macro_f1);
      CHECK(back.cells[i].confusion == report.cells[i].confusion);
      CHECK(back.cells[i].loss_trace == report.cells[i].loss_trace);
      CHECK(back.cells[i].fit_digest == report.cells[i].fit_digest);
    }
    CHECK(back.majority_baseline == report.majority_baseline);
    CHECK(report_to_json(back).dump(2) == text);
  }

  SUBCASE("csv has one row per cell and metric") {
    const auto csv = report_to_csv(report);
    const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 1 + report.cells.size() * kCsvMetrics.size());
  }

  SUBCASE("improvement is a plain subtraction") {
    REQUIRE(report.improvements.size() == 2);
    for (const auto& imp : report.improvements) {
      const auto* t = report.find(imp.model, FeatureSet::text_only);
      const auto* e = report.find(imp.model, FeatureSet::extended);
      REQUIRE(t);
      REQUIRE(e);
      CHECK(std::abs(imp.improvement_pp - 100.0 * (e->accuracy - t->accuracy)) < 1e-12);
    }
    CHECK(format_improvement_table(report).find("SVM") != std::string::npos);
  }

  SUBCASE("same inputs give a byte-identical report") {
    const auto again = run_experiment(records(), table(), small_plan());
    CHECK(report_to_json(again, false).dump() == report_to_json(report, false).dump());
  }

  SUBCASE("emit_report writes both formats") {
    const auto json_path = tmp_dir() / "report.json";
    const auto csv_path = tmp_dir() / "report.csv";
    emit_report(report, json_path, report_format_for(json_path));
    emit_report(report, csv_path, report_format_for(csv_path));
    CHECK(nlohmann::json::parse(read_file(json_path)).at("cells").size() == 4);
    CHECK(read_file(csv_path) == report_to_csv(report));
  }
}

TEST_CASE("test rows never influence fitted transforms") {
  const auto plan = small_plan();
  const auto base = run_experiment(records(), table(), plan);

  auto perturbed = records();
  const auto split = stratified_split(labels_of(perturbed), plan.split_ratio, plan.seed);
  for (auto i : split.test) {
    perturbed[i].text_raw = "completely different words " + std::to_string(i);
    perturbed[i].timezone = "Atlantis";
    perturbed[i].user_name = "ghost";
    perturbed[i].retweet_count = 1000;
    perturbed[i].tweet_coord = Coordinate{-45.0, 170.0};
  }
  const auto changed = run_experiment(perturbed, table(), plan);
  REQUIRE(changed.cells.size() == base.cells.size());
  for (std::size_t i = 0; i < base.cells.size(); ++i) {
    CAPTURE(base.cells[i].name());
    CHECK(changed.cells[i].fit_digest == base.cells[i].fit_digest);
    CHECK(changed.cells[i].loss_trace == base.cells[i].loss_trace);
  }
}

TEST_CASE("plan files") {
  const auto toml = tmp_dir() / "plan.toml";
  write_file_atomic(toml, R"(models = ["SVM", "V2"]
feature_sets = ["Extended"]
seed = 7
split_ratio = 0.75

[features]
pca_k = 5

[mlp]
epochs = 3

[svm]
kernel = "rbf"
)");
  const auto p = load_plan(toml);
  CHECK(p.models == std::vector<ModelKind>{ModelKind::svm, ModelKind::v2});
  CHECK(p.feature_sets == std::vector<FeatureSet>{FeatureSet::extended});
  CHECK(p.seed == 7);
  CHECK(p.split_ratio == 0.75);
  CHECK(p.features.pca_k == 5);
  CHECK(p.mlp_epochs == 3);
  CHECK(p.svm.kernel.kind == KernelKind::rbf);

  const auto json = tmp_dir() / "plan.json";
  write_file_atomic(json, p.to_json().dump());
  const auto q = load_plan(json);
  CHECK(q.config_hash() == p.config_hash());
  CHECK(q.to_json() == p.to_json());

  const auto bad = tmp_dir() / "bad.toml";
  write_file_atomic(bad, "modles = [\"SVM\"]\n");
  try {
    load_plan(bad);
    FAIL("expected an unknown-key error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("modles") != std::string::npos);
  }

  ExperimentPlan other = p;
  other.seed = 8;
  CHECK(other.config_hash() != p.config_hash());
}
