#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "synthetic.hpp"
#include "tweetsat/cli.hpp"
#include "tweetsat/io.hpp"

using namespace tweetsat;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tweetsat");
  if (std::find(args.begin(), args.end(), "--log-level") == args.end()) {
    args.insert(args.begin() + 1, {"--log-level", "warn"});
  }
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const fs::path& dir() {
  static const fs::path d = [] {
    fs::path p = fs::path(TWEETSAT_TEST_TMP) / "unit_cli";
    fs::create_directories(p);
    return p;
  }();
  return d;
}

const testing::SyntheticFiles& data() {
  static const auto files = [] {
    testing::SyntheticFiles f{dir() / "tweets.csv", dir() / "vectors.txt"};
    write_file_atomic(f.csv, testing::synthetic_corpus_csv({.rows = 300, .seed = 41}));
    write_file_atomic(f.glove, testing::synthetic_embeddings(50));
    return f;
  }();
  return files;
}

std::string p(const fs::path& path) { return path.string(); }

// Runs the installed binary in a separate process.
int shell(const std::string& command) {
  return std::system(command.c_str());
}

}  // namespace

TEST_CASE("usage and exit codes") {
  const auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("evaluate") != std::string::npos);

  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({}).code == 1);
  CHECK(cli({"train", "x.csv"}).code == 1);

  const auto missing = cli({"evaluate", "--csv", "/nonexistent/tweets.csv", "--glove", p(data().glove)});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/nonexistent/tweets.csv") != std::string::npos);
}

TEST_CASE("inspect") {
  const auto r = cli({"inspect", p(data().csv)});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("row_count") == 300);
  CHECK(j.at("retained_columns").size() == 9);
}

TEST_CASE("clean, augment, featurize and train") {
  const auto cleaned = dir() / "cleaned.csv";
  REQUIRE(cli({"clean", p(data().csv), "--out", p(cleaned)}).code == 0);
  const auto header = read_file(cleaned).substr(0, read_file(cleaned).find('\n'));
  CHECK(header.ends_with("no_url,filtered_text"));
  CHECK(cli({"clean", p(cleaned)}).code == 2);  // already cleaned

  const auto aug = dir() / "aug.csv";
  REQUIRE(cli({"augment", p(cleaned), "--glove", p(data().glove), "--factor", "2", "--out",
               p(aug)})
              .code == 0);
  const auto aug_text = read_file(aug);
  CHECK(aug_text.starts_with("text,label,origin\n"));
  const auto rows = std::count(aug_text.begin(), aug_text.end(), '\n') - 1;
  CHECK(rows > 300);
  // Progressive variants are always kept, so the factor is a floor.
  CHECK(rows <= 4 * 300);

  const auto matrix = dir() / "matrix.csv";
  REQUIRE(cli({"featurize", p(cleaned), "--glove", p(data().glove), "--out", p(matrix)}).code == 0);
  const auto m = read_feature_matrix(matrix);
  CHECK(m.values.rows() == 300);
  CHECK(m.labels.size() == 300);
  CHECK(m.column_names.front() == "pc1");

  const auto text_matrix = dir() / "text_matrix.csv";
  REQUIRE(cli({"featurize", p(cleaned), "--glove", p(data().glove), "--mode", "TextOnly",
               "--pca-k", "3", "--out", p(text_matrix)})
              .code == 0);
  CHECK(read_feature_matrix(text_matrix).values.cols() == 3);

  const auto svm = dir() / "svm.json";
  REQUIRE(cli({"train", p(matrix), "--model", "SVM", "--out", p(svm)}).code == 0);
  const auto [kind, body] = unwrap_model(nlohmann::json::parse(read_file(svm)));
  CHECK(kind == "SVM");
  CHECK(body.at("svm").at("machines").size() == 3);

  const auto mlp = dir() / "v1.json";
  REQUIRE(cli({"train", p(matrix), "--model", "V1", "--epochs", "3", "--out", p(mlp)}).code == 0);
  CHECK(unwrap_model(nlohmann::json::parse(read_file(mlp))).first == "V1");

  const auto cnn = dir() / "cnn.json";
  REQUIRE(cli({"train", p(aug), "--model", "CNN", "--epochs", "1", "--max-len", "20", "--out",
               p(cnn)})
              .code == 0);
  const auto cnn_body = unwrap_model(nlohmann::json::parse(read_file(cnn))).second;
  CHECK(cnn_body.at("vocab").at(0) == "<pad>");

  CHECK(cli({"train", p(matrix), "--model", "V9"}).code == 2);
  CHECK(cli({"train", p(data().csv), "--model", "SVM"}).code == 2);
}

TEST_CASE("evaluate and compare") {
  const auto plan = dir() / "plan.toml";
  write_file_atomic(plan, "models = [\"SVM\", \"V1\"]\n\n[mlp]\nepochs = 2\n");
  const auto report = dir() / "report.json";
  REQUIRE(cli({"evaluate", "--csv", p(data().csv), "--glove", p(data().glove), "--plan", p(plan),
               "--out", p(report), "--no-timing"})
              .code == 0);
  const auto j = nlohmann::json::parse(read_file(report));
  CHECK(j.at("cells").size() == 4);
  CHECK_FALSE(j.contains("timing"));
  CHECK(j.at("seed") == 42);
  CHECK(j.at("notes").size() == 1);

  const auto cmp = cli({"compare", p(report)});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("V1") != std::string::npos);

  const auto csv = dir() / "report.csv";
  REQUIRE(cli({"evaluate", "--csv", p(data().csv), "--glove", p(data().glove), "--plan", p(plan),
               "--out", p(csv), "--seed", "9"})
              .code == 0);
  CHECK(read_file(csv).starts_with("model,feature_set,metric,value\n"));

  const auto bad_plan = dir() / "bad_plan.toml";
  write_file_atomic(bad_plan, "models = [\"SVM\"]\nmystery = 1\n");
  const auto bad = cli({"evaluate", "--csv", p(data().csv), "--glove", p(data().glove), "--plan",
                        p(bad_plan)});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("mystery") != std::string::npos);
  CHECK(cli({"compare", p(data().csv)}).code == 2);
}

TEST_CASE("config files set defaults and flags win") {
  const auto csv = dir() / "spaces.csv";
  write_file_atomic(csv, "text\n\"a    b\"\n");
  const auto toml = dir() / "collapse.toml";
  write_file_atomic(toml, "[clean]\ncollapse = \"fixpoint\"\n");
  const auto json = dir() / "collapse.json";
  write_file_atomic(json, R"({"clean": {"collapse": "fixpoint"}})");

  CHECK(cli({"clean", p(csv)}).out == "text,no_url,filtered_text\na    b,a  b,a  b\n");
  CHECK(cli({"--config", p(toml), "clean", p(csv)}).out == "text,no_url,filtered_text\na    b,a b,a b\n");
  CHECK(cli({"--config", p(json), "clean", p(csv)}).out == "text,no_url,filtered_text\na    b,a b,a b\n");
  CHECK(cli({"--config", p(toml), "clean", p(csv), "--collapse", "single_pass"}).out ==
        "text,no_url,filtered_text\na    b,a  b,a  b\n");
}

TEST_CASE("separate processes produce identical outputs") {
  const std::string bin = TWEETSAT_CLI_PATH;
  const std::string common = " --log-level off augment " + p(data().csv) + " --glove " +
                             p(data().glove) + " --factor 5";
  const auto a = dir() / "proc_a.csv";
  const auto b = dir() / "proc_b.csv";
  const auto c = dir() / "proc_c.csv";
  const auto d = dir() / "proc_d.csv";
  REQUIRE(shell(bin + common + " --seed 5 --out " + p(a)) == 0);
  REQUIRE(shell(bin + common + " --seed 5 --out " + p(b)) == 0);
  REQUIRE(shell("TWEETSAT_SEED=5 " + bin + common + " --out " + p(c)) == 0);
  REQUIRE(shell(bin + common + " --out " + p(d)) == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a) == read_file(c));
  CHECK(read_file(a) != read_file(d));

  const auto r1 = dir() / "proc_r1.json";
  const auto r2 = dir() / "proc_r2.json";
  const std::string eval = " --log-level off evaluate --csv " + p(data().csv) + " --glove " +
                           p(data().glove) + " --subsample 200 --no-timing --out ";
  const auto plan = dir() / "svm_only.json";
  write_file_atomic(plan, R"({"models": ["SVM"], "feature_sets": ["Extended"]})");
  REQUIRE(shell(bin + eval + p(r1) + " --plan " + p(plan)) == 0);
  REQUIRE(shell(bin + eval + p(r2) + " --plan " + p(plan)) == 0);
  CHECK(read_file(r1) == read_file(r2));
}
