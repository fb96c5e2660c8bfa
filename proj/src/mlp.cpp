#include "tweetsat/mlp.hpp"

#include <cmath>
#include <numeric>

#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat {

void MlpConfig::validate() const {
  if (hidden_sizes.empty() || hidden_sizes.size() > 2) {
    throw Error("mlp: hidden_sizes must have one or two entries");
  }
  for (int h : hidden_sizes) {
    if (h < 1) throw Error("mlp: hidden sizes must be positive");
  }
  if (batch_size < 1) throw Error("mlp: batch_size must be positive");
  if (epochs < 0) throw Error("mlp: epochs must be non-negative");
  if (!(learning_rate > 0.0)) throw Error("mlp: learning_rate must be positive");
}

const std::vector<std::string>& mlp_preset_names() {
  static const std::vector<std::string> names = {"V1", "V2", "V3", "V4", "V5", "V6"};
  return names;
}

MlpConfig mlp_preset(std::string_view name) {
  MlpConfig c;
  c.name = std::string(name);
  if (name == "V1") { c.hidden_sizes = {16}; c.batch_size = 256; }
  else if (name == "V2") { c.hidden_sizes = {32}; c.batch_size = 256; }
  else if (name == "V3") { c.hidden_sizes = {64}; c.batch_size = 128; }
  else if (name == "V4") { c.hidden_sizes = {16, 4}; c.batch_size = 256; }
  else if (name == "V5") { c.hidden_sizes = {32, 8}; c.batch_size = 128; }
  else if (name == "V6") { c.hidden_sizes = {64, 16}; c.batch_size = 64; }
  else throw Error("unknown MLP preset '" + std::string(name) + "'");
  return c;
}

MlpModel::MlpModel(MlpConfig config, Eigen::Index input_dim) : config_(std::move(config)) {
  config_.validate();
  if (input_dim < 1) throw Error("mlp: input dimension must be positive");
  layers_.push_back(input_dim);
  for (int h : config_.hidden_sizes) layers_.push_back(h);
  layers_.push_back(kNumClasses);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    Offsets o;
    o.rows = layers_[l];
    o.cols = layers_[l - 1];
    o.w = offset;
    offset += static_cast<std::size_t>(o.rows * o.cols);
    o.b = offset;
    offset += static_cast<std::size_t>(o.rows);
    offsets_.push_back(o);
  }
  params_.assign(offset, 0.0);
}

MlpModel MlpModel::initialized(MlpConfig config, Eigen::Index input_dim) {
  MlpModel m(std::move(config), input_dim);
  Rng rng(derive_seed(m.config_.seed, "mlp-init"));
  for (const auto& o : m.offsets_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(o.cols));
    for (Eigen::Index i = 0; i < o.rows * o.cols; ++i) m.params_[o.w + static_cast<std::size_t>(i)] = scale * rng.normal();
  }
  return m;
}

void MlpModel::check_input(const Matrix& x) const {
  if (x.cols() != input_dim() && x.rows() > 0) {
    throw Error("mlp: expected " + std::to_string(input_dim()) + " features, got " +
                std::to_string(x.cols()));
  }
}

template <typename Scalar>
Matrix mlp_probabilities(const MlpModel& model, const Matrix& x) {
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RV = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  M a = x.cast<Scalar>();
  for (std::size_t l = 0; l < model.offsets_.size(); ++l) {
    const auto& o = model.offsets_[l];
    const M w = Eigen::Map<const Matrix>(model.params_.data() + o.w, o.rows, o.cols).cast<Scalar>();
    const RV b = Eigen::Map<const Eigen::RowVectorXd>(model.params_.data() + o.b, o.rows).cast<Scalar>();
    M z = (a * w.transpose()).rowwise() + b;
    if (l + 1 < model.offsets_.size()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return softmax_rows(a.template cast<double>());
}

Matrix MlpModel::logits(const Matrix& x) const {
  check_input(x);
  Matrix a = x;
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    const auto& o = offsets_[l];
    Eigen::Map<const Matrix> w(params_.data() + o.w, o.rows, o.cols);
    Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + o.b, o.rows);
    Matrix z = (a * w.transpose()).rowwise() + b;
    if (l + 1 < offsets_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

double MlpModel::loss(const Matrix& x, std::span<const ClassId> y) const {
  return cross_entropy(softmax_rows(logits(x)), y);
}

double MlpModel::loss_and_gradient(const Matrix& x, std::span<const ClassId> y,
                                   ParamVector& grad) const {
  check_input(x);
  const std::size_t nl = offsets_.size();
  // activations[0] = x; pre[l] = pre-activation of layer l.
  std::vector<Matrix> activations{x};
  std::vector<Matrix> pre;
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& o = offsets_[l];
    Eigen::Map<const Matrix> w(params_.data() + o.w, o.rows, o.cols);
    Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + o.b, o.rows);
    pre.push_back((activations.back() * w.transpose()).rowwise() + b);
    if (l + 1 < nl) activations.push_back(pre.back().cwiseMax(0.0));
  }
  Matrix delta;
  const double l = cross_entropy(softmax_rows(pre.back()), y, &delta);

  grad.assign(params_.size(), 0.0);
  for (std::size_t k = nl; k-- > 0;) {
    const auto& o = offsets_[k];
    Eigen::Map<Matrix> gw(grad.data() + o.w, o.rows, o.cols);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + o.b, o.rows);
    gw.noalias() = delta.transpose() * activations[k];
    gb = delta.colwise().sum();
    if (k > 0) {
      Eigen::Map<const Matrix> w(params_.data() + o.w, o.rows, o.cols);
      Matrix back = delta * w;
      delta = (pre[k - 1].array() > 0.0).select(back.array(), 0.0).matrix();
    }
  }
  return l;
}

MlpModel mlp_train(const Matrix& x, std::span<const ClassId> y, const MlpConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error("mlp_train: label count does not match rows");
  }
  if (x.rows() == 0) throw Error("mlp_train: empty training set");
  if (!x.allFinite()) throw Error("mlp_train: non-finite input");
  MlpModel model = MlpModel::initialized(cfg, x.cols());
  const std::string tag = "mlp " + cfg.name;

  model.loss_trace_.push_back(model.loss(x, y));
  if (!std::isfinite(model.loss_trace_.back())) throw DivergedTraining(tag, 0);

  Adam adam(model.params_.size(), {.learning_rate = cfg.learning_rate});
  Rng rng(derive_seed(cfg.seed, "mlp-shuffle"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  ParamVector grad;
  Matrix bx;
  std::vector<ClassId> by;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      bx.resize(static_cast<Eigen::Index>(end - start), x.cols());
      by.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        bx.row(static_cast<Eigen::Index>(i - start)) = x.row(order[i]);
        by[i - start] = y[static_cast<std::size_t>(order[i])];
      }
      const double l = model.loss_and_gradient(bx, by, grad);
      if (!std::isfinite(l)) throw DivergedTraining(tag, epoch);
      adam.step(model.params_, grad);
    }
    model.loss_trace_.push_back(model.loss(x, y));
    if (!std::isfinite(model.loss_trace_.back())) throw DivergedTraining(tag, epoch);
  }
  return model;
}

Prediction mlp_predict(const MlpModel& model, const Matrix& x, Precision precision) {
  if (x.cols() != model.input_dim() && x.rows() > 0) {
    throw Error("mlp: expected " + std::to_string(model.input_dim()) + " features, got " +
                std::to_string(x.cols()));
  }
  Prediction p;
  p.probabilities = precision == Precision::double_precision ? mlp_probabilities<double>(model, x)
                                                             : mlp_probabilities<float>(model, x);
  p.labels = argmax_rows(p.probabilities);
  return p;
}

nlohmann::ordered_json to_json(const MlpModel& model) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["config"] = {{"name", c.name},
                 {"hidden_sizes", c.hidden_sizes},
                 {"batch_size", c.batch_size},
                 {"epochs", c.epochs},
                 {"learning_rate", c.learning_rate},
                 {"seed", c.seed}};
  j["input_dim"] = model.input_dim();
  j["parameters"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
  j["loss_trace"] = model.loss_trace();
  return j;
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  const auto& c = j.at("config");
  MlpConfig cfg;
  cfg.name = c.at("name").get<std::string>();
  cfg.hidden_sizes = c.at("hidden_sizes").get<std::vector<int>>();
  cfg.batch_size = c.at("batch_size").get<int>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  MlpModel m(cfg, j.at("input_dim").get<Eigen::Index>());
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != m.params_.size()) throw Error("mlp model: parameter count mismatch");
  m.params_.assign(params.begin(), params.end());
  m.loss_trace_ = j.at("loss_trace").get<std::vector<double>>();
  return m;
}

}  // namespace tweetsat
