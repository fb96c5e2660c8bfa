#include "tweetsat/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - m);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  return out;
}

double cross_entropy(const Matrix& probs, std::span<const ClassId> labels, Matrix* grad_logits) {
  const auto n = probs.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw Error("cross_entropy: label count does not match batch size");
  }
  if (n == 0) return 0.0;
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    loss -= std::log(std::max(probs(r, labels[r]), 1e-300));
  }
  if (grad_logits) {
    *grad_logits = probs;
    for (Eigen::Index r = 0; r < n; ++r) (*grad_logits)(r, labels[r]) -= 1.0;
    *grad_logits /= static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

std::vector<ClassId> argmax_rows(const Matrix& scores) {
  std::vector<ClassId> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<ClassId>(best);
  }
  return out;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.epsilon;
  double* m = m_.data();
  double* v = v_.data();
  const std::size_t n = params.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

GradientCheckResult gradient_check(std::span<double> params, std::span<const double> analytic,
                                   const std::function<double()>& loss, double epsilon,
                                   std::size_t samples, std::uint64_t seed) {
  if (analytic.size() != params.size()) {
    throw Error("gradient_check: gradient and parameter sizes differ");
  }
  std::vector<std::size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (samples < indices.size()) {
    Rng rng(seed);
    rng.shuffle(indices);
    indices.resize(samples);
    std::sort(indices.begin(), indices.end());
  }
  GradientCheckResult result;
  for (auto i : indices) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double plus = loss();
    params[i] = saved - epsilon;
    const double minus = loss();
    params[i] = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic[i];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    ++result.checked;
    if (result.checked == 1 || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

LinearSoftmax::LinearSoftmax(std::size_t inputs, std::size_t classes, std::uint64_t seed)
    : inputs_(inputs), classes_(classes), params_(classes * inputs + classes) {
  Rng rng(seed);
  for (auto& p : params_) p = 0.5 * rng.normal();
}

double LinearSoftmax::loss(const Matrix& x, std::span<const ClassId> y) const {
  ParamVector unused;
  return loss_and_gradient(x, y, unused);
}

double LinearSoftmax::loss_and_gradient(const Matrix& x, std::span<const ClassId> y,
                                        ParamVector& grad) const {
  const auto k = static_cast<Eigen::Index>(classes_);
  const auto d = static_cast<Eigen::Index>(inputs_);
  Eigen::Map<const Matrix> w(params_.data(), k, d);
  Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + k * d, k);
  Matrix logits = (x * w.transpose()).rowwise() + b;
  Matrix dlogits;
  const double l = cross_entropy(softmax_rows(logits), y, &dlogits);
  grad.assign(params_.size(), 0.0);
  Eigen::Map<Matrix> gw(grad.data(), k, d);
  Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + k * d, k);
  gw = dlogits.transpose() * x;
  gb = dlogits.colwise().sum();
  return l;
}

}  // namespace tweetsat
