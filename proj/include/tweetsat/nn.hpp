#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tweetsat/corpus.hpp"
#include "tweetsat/linalg.hpp"

namespace tweetsat {

enum class Precision { double_precision, single_precision };

// Row-wise softmax, shifted by the row max.
Matrix softmax_rows(const Matrix& logits);

// Mean cross-entropy of `probs` against integer labels. When `grad_logits` is
// given it receives d(loss)/d(logits) = (probs - onehot) / n.
double cross_entropy(const Matrix& probs, std::span<const ClassId> labels,
                     Matrix* grad_logits = nullptr);

// Index of the largest entry per row; ties resolve to the lowest index.
std::vector<ClassId> argmax_rows(const Matrix& scores);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over one flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  ParamVector m_, v_;
  long t_ = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences (f(p + eps) - f(p - eps)) / 2eps on a seeded sample of
// `samples` parameter indices (all of them when there are fewer). Relative
// error is |a - n| / max(|a|, |n|, 1e-8). `loss` must read `params` live.
GradientCheckResult gradient_check(std::span<double> params, std::span<const double> analytic,
                                   const std::function<double()>& loss, double epsilon,
                                   std::size_t samples, std::uint64_t seed);

// Multinomial logistic regression: logits = x W^T + b. Used to validate the
// gradient checker against a closed-form gradient.
class LinearSoftmax {
 public:
  LinearSoftmax(std::size_t inputs, std::size_t classes, std::uint64_t seed);

  std::span<double> parameters() { return params_; }
  double loss(const Matrix& x, std::span<const ClassId> y) const;
  double loss_and_gradient(const Matrix& x, std::span<const ClassId> y,
                           ParamVector& grad) const;

 private:
  std::size_t inputs_, classes_;
  ParamVector params_;
};

}  // namespace tweetsat
