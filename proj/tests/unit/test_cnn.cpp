#include "doctest.h"

#include "tweetsat/cnn.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"

using namespace tweetsat;

namespace {

std::vector<Sequence> random_sequences(std::size_t n, int max_len, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sequence> out(n, Sequence(static_cast<std::size_t>(max_len), 0));
  for (auto& s : out) {
    const auto len = 3 + rng.below(static_cast<std::uint64_t>(max_len - 2));
    for (std::size_t i = 0; i < len; ++i) s[i] = 1 + static_cast<int>(rng.below(vocab - 1));
  }
  return out;
}

CnnConfig small_config() {
  CnnConfig cfg;
  cfg.embed_dim = 8;
  cfg.filter_count = 6;
  cfg.dense_units = 10;
  cfg.max_len = 12;
  cfg.vocab_size = 30;
  return cfg;
}

}  // namespace

TEST_CASE("forward shapes with the default architecture") {
  CnnConfig cfg;
  cfg.vocab_size = 50;
  const auto model = CnnModel::initialized(cfg);
  const auto batch = random_sequences(2, 40, 50, 1);
  const auto shapes = model.forward_shapes(batch);
  CHECK(shapes.batch == 2);
  CHECK(shapes.concat_cols == 384);
  CHECK(shapes.logits_cols == 3);
  const Matrix logits = model.logits(batch);
  CHECK(logits.rows() == 2);
  CHECK(logits.cols() == 3);
}

TEST_CASE("inference is deterministic") {
  const auto model = CnnModel::initialized(small_config());
  const auto batch = random_sequences(4, 12, 30, 2);
  CHECK(model.logits(batch) == model.logits(batch));
  const auto p = cnn_predict(model, batch);
  for (Eigen::Index i = 0; i < p.probabilities.rows(); ++i) {
    CHECK(std::abs(p.probabilities.row(i).sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("configuration and batch errors") {
  auto cfg = small_config();
  cfg.max_len = 5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(CnnModel{cfg}, Error);

  const auto model = CnnModel::initialized(small_config());
  std::vector<Sequence> wrong_len = {Sequence(11, 1)};
  CHECK_THROWS_AS(model.logits(wrong_len), Error);
  std::vector<Sequence> out_of_range = {Sequence(12, 30)};
  CHECK_THROWS_AS(model.logits(out_of_range), Error);
}

TEST_CASE("gradient check on a five-sample batch") {
  const auto model = CnnModel::initialized(small_config());
  const auto batch = random_sequences(5, 12, 30, 3);
  const std::vector<ClassId> y = {0, 1, 2, 1, 0};
  ParamVector grad;
  model.loss_and_gradient(batch, y, &grad, nullptr);
  auto mutable_model = model;
  const auto r = gradient_check(
      mutable_model.parameters(), grad,
      [&] { return mutable_model.loss_and_gradient(batch, y, nullptr, nullptr); }, 1e-5, 400, 4);
  CHECK(r.checked == 400);
  CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("twenty samples can be memorised") {
  auto cfg = small_config();
  cfg.epochs = 60;
  cfg.batch_size = 20;
  cfg.learning_rate = 1e-2;
  cfg.dropout = 0.0;
  const auto batch = random_sequences(20, 12, 30, 5);
  std::vector<ClassId> y;
  for (int i = 0; i < 20; ++i) y.push_back(i % 3);
  const auto model = cnn_train(batch, y, cfg);
  CHECK(model.loss_and_gradient(batch, y, nullptr, nullptr) < 0.05);
  REQUIRE(model.loss_trace().size() == 60);
  CHECK(model.loss_trace().back() < model.loss_trace().front());
}

TEST_CASE("training is reproducible and serialisable") {
  auto cfg = small_config();
  cfg.epochs = 3;
  const auto batch = random_sequences(40, 12, 30, 6);
  std::vector<ClassId> y;
  for (int i = 0; i < 40; ++i) y.push_back((i * 7) % 3);
  const auto a = cnn_train(batch, y, cfg);
  const auto b = cnn_train(batch, y, cfg);
  CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin(),
                   b.parameters().end()));

  const auto back = cnn_from_json(nlohmann::json::parse(to_json(a).dump()));
  CHECK(back.logits(batch) == a.logits(batch));
  CHECK(back.loss_trace() == a.loss_trace());

  const auto d = cnn_predict(a, batch);
  const auto f = cnn_predict(a, batch, Precision::single_precision);
  CHECK((d.probabilities - f.probabilities).cwiseAbs().maxCoeff() < 1e-4);
}
