#include "tweetsat/cnn.hpp"

#include <cmath>
#include <numeric>

#include "tweetsat/error.hpp"

namespace tweetsat {
namespace {

template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SampleCache {
  MatT<Scalar> emb;                  // max_len x embed_dim
  std::vector<Eigen::Index> argpos;  // per pooled unit; -1 when the unit is inactive
  VecT<Scalar> h, u, a, mask;
};

struct Layout {
  std::size_t emb, dense_w, dense_b, out_w, out_b;
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> banks;  // size, (w, b)
};

template <typename Scalar>
VecT<Scalar> forward_sample(const Layout& lay, const CnnConfig& c, const Scalar* p,
                            const Sequence& seq, SampleCache<Scalar>* cache, Rng* dropout_rng) {
  using Mat = MatT<Scalar>;
  using Vec = VecT<Scalar>;
  const Eigen::Index E = c.embed_dim, F = c.filter_count, len = c.max_len;
  const Eigen::Index H = c.dense_units, C = c.classes;
  const auto nb = static_cast<Eigen::Index>(lay.banks.size());

  SampleCache<Scalar> local;
  SampleCache<Scalar>& s = cache ? *cache : local;
  s.emb.resize(len, E);
  for (Eigen::Index t = 0; t < len; ++t) {
    s.emb.row(t) = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(
        p + lay.emb + static_cast<std::size_t>(seq[static_cast<std::size_t>(t)]) * E, E);
  }
  s.h.resize(F * nb);
  s.argpos.assign(static_cast<std::size_t>(F * nb), -1);
  for (Eigen::Index k = 0; k < nb; ++k) {
    const int size = lay.banks[k].first;
    const Eigen::Index positions = len - size + 1;
    Eigen::Map<const Mat, 0, Eigen::OuterStride<>> windows(s.emb.data(), positions, size * E,
                                                           Eigen::OuterStride<>(E));
    Eigen::Map<const Mat> w(p + lay.banks[k].second.first, F, size * E);
    Eigen::Map<const Vec> b(p + lay.banks[k].second.second, F);
    const Mat z = windows * w.transpose();  // positions x F
    for (Eigen::Index f = 0; f < F; ++f) {
      Eigen::Index best = 0;
      for (Eigen::Index q = 1; q < positions; ++q) {
        if (z(q, f) > z(best, f)) best = q;
      }
      const Scalar m = z(best, f) + b(f);
      s.h(k * F + f) = m > Scalar(0) ? m : Scalar(0);
      if (m > Scalar(0)) s.argpos[static_cast<std::size_t>(k * F + f)] = best;
    }
  }
  Eigen::Map<const Mat> wd(p + lay.dense_w, H, F * nb);
  Eigen::Map<const Vec> bd(p + lay.dense_b, H);
  s.u = wd * s.h + bd;
  s.a = s.u.cwiseMax(Scalar(0));
  if (dropout_rng && c.dropout > 0.0) {
    s.mask.resize(H);
    const Scalar keep_scale = Scalar(1.0 / (1.0 - c.dropout));
    for (Eigen::Index i = 0; i < H; ++i) {
      s.mask(i) = dropout_rng->bernoulli(c.dropout) ? Scalar(0) : keep_scale;
    }
    s.a = s.a.cwiseProduct(s.mask);
  } else {
    s.mask.resize(0);
  }
  Eigen::Map<const Mat> wo(p + lay.out_w, C, H);
  Eigen::Map<const Vec> bo(p + lay.out_b, C);
  return wo * s.a + bo;
}

}  // namespace

void CnnConfig::validate() const {
  if (embed_dim < 1 || filter_count < 1 || dense_units < 1) {
    throw Error("cnn: layer sizes must be positive");
  }
  if (kernel_sizes.empty()) throw Error("cnn: at least one kernel size is required");
  for (int s : kernel_sizes) {
    if (s < 1) throw Error("cnn: kernel sizes must be positive");
    if (s > max_len) {
      throw Error("cnn: kernel size " + std::to_string(s) + " exceeds max_len " +
                  std::to_string(max_len));
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("cnn: dropout must lie in [0, 1)");
  if (classes < 2) throw Error("cnn: need at least two classes");
  if (vocab_size < 2) throw Error("cnn: vocab_size must cover the reserved ids");
  if (epochs < 0 || batch_size < 1) throw Error("cnn: invalid epochs or batch_size");
  if (!(learning_rate > 0.0)) throw Error("cnn: learning_rate must be positive");
}

CnnModel::CnnModel(CnnConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto E = static_cast<std::size_t>(config_.embed_dim);
  const auto F = static_cast<std::size_t>(config_.filter_count);
  std::size_t off = 0;
  emb_ = off;
  off += static_cast<std::size_t>(config_.vocab_size) * E;
  for (int s : config_.kernel_sizes) {
    Bank b{s, off, 0};
    off += F * static_cast<std::size_t>(s) * E;
    b.b = off;
    off += F;
    banks_.push_back(b);
  }
  const auto H = static_cast<std::size_t>(config_.dense_units);
  const auto C = static_cast<std::size_t>(config_.classes);
  dense_w_ = off;
  off += H * static_cast<std::size_t>(config_.concat_width());
  dense_b_ = off;
  off += H;
  out_w_ = off;
  off += C * H;
  out_b_ = off;
  off += C;
  params_.assign(off, 0.0);
}

CnnModel CnnModel::initialized(CnnConfig config) {
  CnnModel m(std::move(config));
  Rng rng(derive_seed(m.config_.seed, "cnn-init"));
  const auto E = static_cast<std::size_t>(m.config_.embed_dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(m.config_.vocab_size) * E; ++i) {
    m.params_[m.emb_ + i] = rng.uniform(-0.05, 0.05);
  }
  auto he = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) m.params_[offset + i] = scale * rng.normal();
  };
  const auto F = static_cast<std::size_t>(m.config_.filter_count);
  for (const auto& b : m.banks_) he(b.w, F * b.size * E, b.size * E);
  const auto H = static_cast<std::size_t>(m.config_.dense_units);
  he(m.dense_w_, H * m.config_.concat_width(), m.config_.concat_width());
  he(m.out_w_, static_cast<std::size_t>(m.config_.classes) * H, H);
  return m;
}

void CnnModel::check_batch(std::span<const Sequence> batch) const {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].size() != static_cast<std::size_t>(config_.max_len)) {
      throw Error("cnn: sequence " + std::to_string(i) + " has length " +
                  std::to_string(batch[i].size()) + ", expected " + std::to_string(config_.max_len));
    }
    for (int id : batch[i]) {
      if (id < 0 || id >= config_.vocab_size) {
        throw Error("cnn: token id " + std::to_string(id) + " outside vocabulary of size " +
                    std::to_string(config_.vocab_size));
      }
    }
  }
}

template <typename Scalar>
Matrix cnn_logits_as(const CnnModel& model, std::span<const Sequence> batch) {
  model.check_batch(batch);
  Layout lay{model.emb_, model.dense_w_, model.dense_b_, model.out_w_, model.out_b_, {}};
  for (const auto& b : model.banks_) lay.banks.push_back({b.size, {b.w, b.b}});
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> typed(model.params_.begin(), model.params_.end());
  const Scalar* p = typed.data();
  if constexpr (std::is_same_v<Scalar, double>) p = model.params_.data();
  Matrix out(static_cast<Eigen::Index>(batch.size()), model.config_.classes);
  SampleCache<Scalar> cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        forward_sample<Scalar>(lay, model.config_, p, batch[i], &cache, nullptr)
            .template cast<double>()
            .transpose();
  }
  return out;
}

Matrix CnnModel::logits(std::span<const Sequence> batch) const {
  return cnn_logits_as<double>(*this, batch);
}

CnnShapes CnnModel::forward_shapes(std::span<const Sequence> batch) const {
  check_batch(batch);
  Layout lay{emb_, dense_w_, dense_b_, out_w_, out_b_, {}};
  for (const auto& b : banks_) lay.banks.push_back({b.size, {b.w, b.b}});
  CnnShapes shapes;
  shapes.batch = static_cast<Eigen::Index>(batch.size());
  SampleCache<double> cache;
  for (const auto& seq : batch) {
    const auto logits = forward_sample<double>(lay, config_, params_.data(), seq, &cache, nullptr);
    shapes.concat_cols = cache.h.size();
    shapes.logits_cols = logits.size();
  }
  return shapes;
}

double CnnModel::loss_and_gradient(std::span<const Sequence> batch,
                                   std::span<const ClassId> labels, ParamVector* grad,
                                   Rng* dropout_rng) const {
  check_batch(batch);
  if (batch.size() != labels.size()) throw Error("cnn: label count does not match batch");
  if (batch.empty()) return 0.0;
  Layout lay{emb_, dense_w_, dense_b_, out_w_, out_b_, {}};
  for (const auto& b : banks_) lay.banks.push_back({b.size, {b.w, b.b}});

  const Eigen::Index E = config_.embed_dim, F = config_.filter_count, H = config_.dense_units;
  const Eigen::Index C = config_.classes, len = config_.max_len;
  const auto nb = static_cast<Eigen::Index>(banks_.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (grad) grad->assign(params_.size(), 0.0);
  const double* p = params_.data();

  SampleCache<double> s;
  Matrix d_emb(len, E);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector logits = forward_sample<double>(lay, config_, p, batch[i], &s, dropout_rng);
    const double mx = logits.maxCoeff();
    Vector prob = (logits.array() - mx).exp();
    prob /= prob.sum();
    const auto y = labels[i];
    if (y < 0 || y >= C) throw Error("cnn: label out of range");
    total -= std::log(std::max(prob(y), 1e-300));
    if (!grad) continue;

    double* g = grad->data();
    Vector dlogits = prob * inv_n;
    dlogits(y) -= inv_n;

    Eigen::Map<Matrix>(g + out_w_, C, H).noalias() += dlogits * s.a.transpose();
    Eigen::Map<Vector>(g + out_b_, C) += dlogits;
    Vector da = Eigen::Map<const Matrix>(p + out_w_, C, H).transpose() * dlogits;
    if (s.mask.size() > 0) da = da.cwiseProduct(s.mask);
    const Vector du = (s.u.array() > 0.0).select(da.array(), 0.0).matrix();
    Eigen::Map<Matrix>(g + dense_w_, H, F * nb).noalias() += du * s.h.transpose();
    Eigen::Map<Vector>(g + dense_b_, H) += du;
    const Vector dh = Eigen::Map<const Matrix>(p + dense_w_, H, F * nb).transpose() * du;

    d_emb.setZero();
    for (Eigen::Index k = 0; k < nb; ++k) {
      const Eigen::Index width = banks_[k].size * E;
      for (Eigen::Index f = 0; f < F; ++f) {
        const Eigen::Index pos = s.argpos[static_cast<std::size_t>(k * F + f)];
        const double gf = dh(k * F + f);
        if (pos < 0 || gf == 0.0) continue;
        Eigen::Map<Eigen::RowVectorXd>(g + banks_[k].w + f * width, width) +=
            gf * Eigen::Map<const Eigen::RowVectorXd>(s.emb.data() + pos * E, width);
        g[banks_[k].b + f] += gf;
        Eigen::Map<Eigen::RowVectorXd>(d_emb.data() + pos * E, width) +=
            gf * Eigen::Map<const Eigen::RowVectorXd>(p + banks_[k].w + f * width, width);
      }
    }
    for (Eigen::Index t = 0; t < len; ++t) {
      const auto id = static_cast<std::size_t>(batch[i][static_cast<std::size_t>(t)]);
      Eigen::Map<Eigen::RowVectorXd>(g + emb_ + id * E, E) += d_emb.row(t);
    }
  }
  return total * inv_n;
}

CnnModel cnn_train(std::span<const Sequence> sequences, std::span<const ClassId> labels,
                   const CnnConfig& cfg) {
  if (sequences.size() != labels.size()) throw Error("cnn_train: label count does not match");
  if (sequences.empty()) throw Error("cnn_train: empty training set");
  CnnModel model = CnnModel::initialized(cfg);
  model.check_batch(sequences);

  Adam adam(model.params_.size(), {.learning_rate = cfg.learning_rate});
  Rng shuffle_rng(derive_seed(cfg.seed, "cnn-shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "cnn-dropout"));
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParamVector grad;
  std::vector<Sequence> bx;
  std::vector<ClassId> by;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(sequences[order[i]]);
        by.push_back(labels[order[i]]);
      }
      const double l = model.loss_and_gradient(bx, by, &grad, &dropout_rng);
      if (!std::isfinite(l)) throw DivergedTraining("cnn", epoch);
      epoch_loss += l * static_cast<double>(end - start);
      adam.step(model.params_, grad);
    }
    model.loss_trace_.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return model;
}

Prediction cnn_predict(const CnnModel& model, std::span<const Sequence> sequences,
                       Precision precision) {
  Prediction p;
  const Matrix logits = precision == Precision::double_precision
                            ? cnn_logits_as<double>(model, sequences)
                            : cnn_logits_as<float>(model, sequences);
  p.probabilities = softmax_rows(logits);
  p.labels = argmax_rows(p.probabilities);
  return p;
}

nlohmann::ordered_json to_json(const CnnModel& model) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["config"] = {{"embed_dim", c.embed_dim},     {"filter_count", c.filter_count},
                 {"kernel_sizes", c.kernel_sizes}, {"dense_units", c.dense_units},
                 {"dropout", c.dropout},         {"classes", c.classes},
                 {"max_len", c.max_len},         {"vocab_size", c.vocab_size},
                 {"epochs", c.epochs},           {"batch_size", c.batch_size},
                 {"learning_rate", c.learning_rate}, {"seed", c.seed}};
  j["parameters"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
  j["loss_trace"] = model.loss_trace();
  return j;
}

CnnModel cnn_from_json(const nlohmann::json& j) {
  const auto& jc = j.at("config");
  CnnConfig c;
  c.embed_dim = jc.at("embed_dim").get<int>();
  c.filter_count = jc.at("filter_count").get<int>();
  c.kernel_sizes = jc.at("kernel_sizes").get<std::vector<int>>();
  c.dense_units = jc.at("dense_units").get<int>();
  c.dropout = jc.at("dropout").get<double>();
  c.classes = jc.at("classes").get<int>();
  c.max_len = jc.at("max_len").get<int>();
  c.vocab_size = jc.at("vocab_size").get<int>();
  c.epochs = jc.at("epochs").get<int>();
  c.batch_size = jc.at("batch_size").get<int>();
  c.learning_rate = jc.at("learning_rate").get<double>();
  c.seed = jc.at("seed").get<std::uint64_t>();
  CnnModel m(c);
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != m.params_.size()) throw Error("cnn model: parameter count mismatch");
  m.params_.assign(params.begin(), params.end());
  m.loss_trace_ = j.at("loss_trace").get<std::vector<double>>();
  return m;
}

}  // namespace tweetsat
