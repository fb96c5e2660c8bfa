#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/linalg.hpp"
#include "tweetsat/mlp.hpp"
#include "tweetsat/nn.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat {

using Sequence = std::vector<int>;

struct CnnConfig {
  int embed_dim = 64;
  int filter_count = 128;
  std::vector<int> kernel_sizes = {3, 4, 6};
  int dense_units = 128;
  double dropout = 0.5;
  int classes = kNumClasses;
  int max_len = 40;
  int vocab_size = 0;
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;

  void validate() const;
  int concat_width() const { return filter_count * static_cast<int>(kernel_sizes.size()); }
};

// Shapes produced by one forward pass over a batch.
struct CnnShapes {
  Eigen::Index batch = 0;
  Eigen::Index concat_cols = 0;
  Eigen::Index logits_cols = 0;
};

// Trainable embedding -> one bank of 1-D convolutions per kernel size (ReLU,
// global max-pool over tokens) -> concat -> dense ReLU -> dropout -> softmax.
// Parameters live in one flat vector: embedding, then per bank W (filters x
// size*embed) and b, then dense W, b and output W, b.
class CnnModel {
 public:
  explicit CnnModel(CnnConfig config);
  // Uniform(-0.05, 0.05) embeddings, He-normal conv/dense weights, zero biases.
  static CnnModel initialized(CnnConfig config);

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const CnnConfig& config() const { return config_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }

  // Inference logits (dropout off).
  Matrix logits(std::span<const Sequence> batch) const;
  CnnShapes forward_shapes(std::span<const Sequence> batch) const;

  // Mean cross-entropy over the batch. Dropout is applied only when
  // `dropout_rng` is non-null. `grad` may be null for a loss-only pass.
  double loss_and_gradient(std::span<const Sequence> batch, std::span<const ClassId> labels,
                           ParamVector* grad, Rng* dropout_rng) const;

 private:
  friend CnnModel cnn_train(std::span<const Sequence>, std::span<const ClassId>, const CnnConfig&);
  friend CnnModel cnn_from_json(const nlohmann::json&);
  template <typename Scalar>
  friend Matrix cnn_logits_as(const CnnModel&, std::span<const Sequence>);

  struct Bank {
    int size;
    std::size_t w, b;
  };
  void check_batch(std::span<const Sequence> batch) const;

  CnnConfig config_;
  std::size_t emb_ = 0, dense_w_ = 0, dense_b_ = 0, out_w_ = 0, out_b_ = 0;
  std::vector<Bank> banks_;
  ParamVector params_;
  std::vector<double> loss_trace_;
};

// loss_trace() holds the mean mini-batch training loss of every epoch.
CnnModel cnn_train(std::span<const Sequence> sequences, std::span<const ClassId> labels,
                   const CnnConfig& cfg);

Prediction cnn_predict(const CnnModel& model, std::span<const Sequence> sequences,
                       Precision precision = Precision::double_precision);

nlohmann::ordered_json to_json(const CnnModel& model);
CnnModel cnn_from_json(const nlohmann::json& j);

}  // namespace tweetsat
