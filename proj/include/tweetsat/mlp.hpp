#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/linalg.hpp"
#include "tweetsat/nn.hpp"

namespace tweetsat {

struct MlpConfig {
  std::string name = "custom";
  std::vector<int> hidden_sizes = {16};
  int batch_size = 256;
  int epochs = 30;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;

  void validate() const;
};

// The six fully connected configurations, "V1" ... "V6":
//   V1 16/256, V2 32/256, V3 64/128, V4 16-4/256, V5 32-8/128, V6 64-16/64
// (hidden sizes / batch size).
MlpConfig mlp_preset(std::string_view name);
const std::vector<std::string>& mlp_preset_names();

// input -> ReLU hidden layer(s) -> softmax over kNumClasses. All parameters
// live in one flat vector: per layer W (out x in, row-major) then b.
class MlpModel {
 public:
  // All parameters zero.
  MlpModel(MlpConfig config, Eigen::Index input_dim);
  // He-normal weights with scale sqrt(2 / fan_in), zero biases.
  static MlpModel initialized(MlpConfig config, Eigen::Index input_dim);

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const MlpConfig& config() const { return config_; }
  Eigen::Index input_dim() const { return layers_.front(); }
  const std::vector<double>& loss_trace() const { return loss_trace_; }

  Matrix logits(const Matrix& x) const;
  double loss(const Matrix& x, std::span<const ClassId> y) const;
  double loss_and_gradient(const Matrix& x, std::span<const ClassId> y,
                           ParamVector& grad) const;

 private:
  friend MlpModel mlp_train(const Matrix&, std::span<const ClassId>, const MlpConfig&);
  friend MlpModel mlp_from_json(const nlohmann::json&);
  template <typename Scalar>
  friend Matrix mlp_probabilities(const MlpModel&, const Matrix&);

  struct Offsets {
    std::size_t w, b;
    Eigen::Index rows, cols;
  };
  void check_input(const Matrix& x) const;

  MlpConfig config_;
  std::vector<Eigen::Index> layers_;
  std::vector<Offsets> offsets_;
  ParamVector params_;
  std::vector<double> loss_trace_;
};

// Adam + cross-entropy, seeded mini-batch shuffling each epoch. loss_trace()
// holds the full-data training loss before training and after every epoch.
// Throws DivergedTraining on a non-finite loss.
MlpModel mlp_train(const Matrix& x, std::span<const ClassId> y, const MlpConfig& cfg);

struct Prediction {
  std::vector<ClassId> labels;
  Matrix probabilities;
};

Prediction mlp_predict(const MlpModel& model, const Matrix& x,
                       Precision precision = Precision::double_precision);

nlohmann::ordered_json to_json(const MlpModel& model);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace tweetsat
