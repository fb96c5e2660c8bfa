#include "tweetsat/svm.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <set>

#include <spdlog/spdlog.h>

#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat {
namespace {

constexpr double kMinEta = 1e-12;
constexpr double kMinStep = 1e-12;
constexpr double kBoundEps = 1e-12;
// Partners tried after the random one fails.
constexpr std::size_t kFallbackPartners = 256;

double resolve_gamma(const Matrix& x) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (var <= 0.0 || x.cols() == 0) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

class SmoSolver {
 public:
  SmoSolver(const Matrix& x, std::span<const double> y, const SvmConfig& cfg, std::uint64_t seed)
      : x_(x), y_(y), cfg_(cfg), rng_(seed), n_(x.rows()), d_(x.cols()) {
    alpha_.assign(static_cast<std::size_t>(n_), 0.0);
    if (linear()) w_ = Vector::Zero(d_);
  }

  SmoResult run() {
    SmoResult res;
    res.objective_trace.push_back(0.0);
    int quiet_passes = 0;
    while (quiet_passes < cfg_.max_passes && res.passes < cfg_.max_iterations) {
      long changed = 0, violators = 0;
      for (Eigen::Index i = 0; i < n_; ++i) {
        const double ei = error(i);
        if (!violates(i, ei)) continue;
        ++violators;
        if (examine(i, ei, res)) ++changed;
      }
      ++res.passes;
      if (violators == 0) {
        res.converged = true;
        break;
      }
      if (changed == 0) {
        // The pair updates never look at b, so a stale b can leave violators
        // that no step can fix.
        refit_bias();
        ++quiet_passes;
      } else {
        quiet_passes = 0;
      }
    }
    refit_bias();
    res.alpha = alpha_;
    res.b = b_;
    res.w = w_;
    res.dual_objective = objective_;
    res.max_kkt_violation = max_kkt_violation(x_, y_, alpha_, b_, cfg_.C, cfg_.kernel);
    res.converged = res.max_kkt_violation <= cfg_.tol;
    return res;
  }

 private:
  bool linear() const { return cfg_.kernel.kind == KernelKind::linear; }
  const double* row(Eigen::Index i) const { return x_.data() + i * d_; }
  double k(Eigen::Index i, Eigen::Index j) const { return cfg_.kernel(row(i), row(j), d_); }

  double f(Eigen::Index i) const {
    if (linear()) return x_.row(i).dot(w_) + b_;
    double s = b_;
    for (Eigen::Index m = 0; m < n_; ++m) {
      if (alpha_[m] > 0.0) s += alpha_[m] * y_[m] * k(m, i);
    }
    return s;
  }
  double error(Eigen::Index i) const { return f(i) - y_[i]; }

  bool violates(Eigen::Index i, double ei) const {
    const double r = y_[i] * ei;
    return (r < -cfg_.tol && alpha_[i] < cfg_.C) || (r > cfg_.tol && alpha_[i] > 0.0);
  }

  // Picks b inside the interval the KKT conditions allow for the current
  // alphas: the mean over free support vectors clamped into it, else its
  // midpoint. When the interval is empty the midpoint minimises the worst
  // violation.
  void refit_bias() {
    const double saved = b_;
    b_ = 0.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    long free_count = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double target = y_[i] - f(i);  // b that puts i exactly on the margin
      const bool up = y_[i] > 0;
      if (alpha_[i] < cfg_.C) (up ? lo : hi) = up ? std::max(lo, target) : std::min(hi, target);
      if (alpha_[i] > 0.0) (up ? hi : lo) = up ? std::min(hi, target) : std::max(lo, target);
      if (alpha_[i] > 0.0 && alpha_[i] < cfg_.C) {
        free_sum += target;
        ++free_count;
      }
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      b_ = saved;
    } else if (!std::isfinite(lo)) {
      b_ = free_count > 0 ? std::min(free_sum / static_cast<double>(free_count), hi) : hi;
    } else if (!std::isfinite(hi)) {
      b_ = free_count > 0 ? std::max(free_sum / static_cast<double>(free_count), lo) : lo;
    } else if (lo <= hi && free_count > 0) {
      b_ = std::clamp(free_sum / static_cast<double>(free_count), lo, hi);
    } else {
      b_ = 0.5 * (lo + hi);
    }
  }

  bool examine(Eigen::Index i, double ei, SmoResult& res) {
    if (n_ < 2) return false;
    auto j = static_cast<Eigen::Index>(rng_.below(static_cast<std::uint64_t>(n_ - 1)));
    if (j >= i) ++j;
    if (step(i, j, ei, res)) return true;
    const auto start = static_cast<Eigen::Index>(rng_.below(static_cast<std::uint64_t>(n_)));
    const auto tries = std::min<Eigen::Index>(n_, static_cast<Eigen::Index>(kFallbackPartners));
    for (Eigen::Index t = 0; t < tries; ++t) {
      const Eigen::Index jj = (start + t) % n_;
      if (jj != i && jj != j && step(i, jj, ei, res)) return true;
    }
    return false;
  }

  // Rounding leaves values like 1e-17 where a bound was meant; those would
  // count as support vectors and distort the bias.
  double snap(double a) const {
    const double eps = kBoundEps * cfg_.C;
    if (a < eps) return 0.0;
    if (a > cfg_.C - eps) return cfg_.C;
    return a;
  }

  bool step(Eigen::Index i, Eigen::Index j, double ei, SmoResult& res) {
    const double ej = error(j);
    const double yi = y_[i], yj = y_[j];
    const double ai = alpha_[i], aj = alpha_[j];
    const double C = cfg_.C;
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(C, C + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - C);
      hi = std::min(C, ai + aj);
    }
    if (hi - lo <= 0.0) return false;
    const double kii = k(i, i), kjj = k(j, j), kij = k(i, j);
    const double eta = kii + kjj - 2.0 * kij;
    if (eta <= kMinEta) return false;

    double aj_new = snap(std::clamp(aj + yj * (ei - ej) / eta, lo, hi));
    const double dj = aj_new - aj;
    if (std::abs(dj) < kMinStep) return false;
    // Keep the pair inside the box despite rounding.
    const double ai_new = snap(std::clamp(ai - yi * yj * dj, 0.0, C));
    const double di = ai_new - ai;

    const double b1 = b_ - ei - yi * di * kii - yj * dj * kij;
    const double b2 = b_ - ej - yi * di * kij - yj * dj * kjj;
    if (ai_new > 0.0 && ai_new < C) {
      b_ = b1;
    } else if (aj_new > 0.0 && aj_new < C) {
      b_ = b2;
    } else {
      b_ = 0.5 * (b1 + b2);
    }
    if (linear()) {
      w_ += (yi * di) * x_.row(i).transpose() + (yj * dj) * x_.row(j).transpose();
    }
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;

    const double gain = yj * dj * (ei - ej) - 0.5 * eta * dj * dj;
    if (gain < -1e-12 * std::max(1.0, std::abs(objective_))) res.monotone = false;
    objective_ += gain;
    res.objective_trace.push_back(objective_);
    ++res.updates;
    return true;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const SvmConfig& cfg_;
  Rng rng_;
  Eigen::Index n_, d_;
  std::vector<double> alpha_;
  double b_ = 0.0;
  Vector w_;
  double objective_ = 0.0;
};

}  // namespace

double Kernel::operator()(const double* a, const double* b, Eigen::Index dim) const {
  Eigen::Map<const Vector> va(a, dim), vb(b, dim);
  if (kind == KernelKind::linear) return va.dot(vb);
  return std::exp(-gamma * (va - vb).squaredNorm());
}

void SvmConfig::validate() const {
  if (!(C > 0.0)) throw Error("svm: C must be positive");
  if (!(tol > 0.0)) throw Error("svm: tol must be positive");
  if (max_passes < 1 || max_iterations < 1) throw Error("svm: pass limits must be positive");
}

SmoResult smo_solve(const Matrix& x, std::span<const double> y, const SvmConfig& cfg,
                    std::uint64_t seed) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error("smo_solve: label count does not match rows");
  }
  for (double v : y) {
    if (v != 1.0 && v != -1.0) throw Error("smo_solve: labels must be +1 or -1");
  }
  if (!x.allFinite()) throw Error("smo_solve: non-finite input");
  SvmConfig resolved = cfg;
  if (resolved.kernel.kind == KernelKind::rbf && resolved.kernel.gamma <= 0.0) {
    resolved.kernel.gamma = resolve_gamma(x);
  }
  return SmoSolver(x, y, resolved, seed).run();
}

double dual_objective(const Matrix& x, std::span<const double> y, std::span<const double> alpha,
                      const Kernel& kernel) {
  double linear = 0.0, quad = 0.0;
  const auto n = x.rows(), d = x.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    linear += alpha[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      quad += alpha[i] * alpha[j] * y[i] * y[j] *
              kernel(x.data() + i * d, x.data() + j * d, d);
    }
  }
  return linear - 0.5 * quad;
}

double max_kkt_violation(const Matrix& x, std::span<const double> y, std::span<const double> alpha,
                         double b, double C, const Kernel& kernel) {
  const auto n = x.rows(), d = x.cols();
  Vector f = Vector::Constant(n, b);
  if (kernel.kind == KernelKind::linear) {
    Vector w = Vector::Zero(d);
    for (Eigen::Index m = 0; m < n; ++m) {
      if (alpha[m] != 0.0) w += (alpha[m] * y[m]) * x.row(m).transpose();
    }
    f += x * w;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index m = 0; m < n; ++m) {
        if (alpha[m] != 0.0) f(i) += alpha[m] * y[m] * kernel(x.data() + m * d, x.data() + i * d, d);
      }
    }
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = y[i] * f(i) - 1.0;
    if (alpha[i] < C) worst = std::max(worst, -r);
    if (alpha[i] > 0.0) worst = std::max(worst, r);
    if (alpha[i] < 0.0 || alpha[i] > C) worst = std::max(worst, std::abs(alpha[i]));
  }
  return worst;
}

double BinarySvm::decision(const double* x, Eigen::Index dim) const {
  if (kernel.kind == KernelKind::linear) {
    return Eigen::Map<const Vector>(x, dim).dot(w) + b;
  }
  double s = b;
  for (Eigen::Index m = 0; m < support_vectors.rows(); ++m) {
    s += coef[m] * kernel(support_vectors.data() + m * dim, x, dim);
  }
  return s;
}

Matrix SvmModel::decision_values(const Matrix& x) const {
  if (x.cols() != input_dim && x.rows() > 0) {
    throw Error("svm: expected " + std::to_string(input_dim) + " features, got " +
                std::to_string(x.cols()));
  }
  Matrix out(x.rows(), static_cast<Eigen::Index>(machines.size()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (std::size_t m = 0; m < machines.size(); ++m) {
      out(r, static_cast<Eigen::Index>(m)) = machines[m].decision(x.data() + r * x.cols(), x.cols());
    }
  }
  return out;
}

SvmModel svm_train(const Matrix& x, std::span<const ClassId> y, const SvmConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error("svm_train: label count does not match rows");
  }
  if (!x.allFinite()) throw Error("svm_train: non-finite input");
  const std::set<ClassId> present(y.begin(), y.end());
  if (present.size() < 2) throw Error("svm_train: need at least two classes");

  SvmModel model;
  model.config = cfg;
  model.input_dim = x.cols();
  if (cfg.kernel.kind == KernelKind::rbf && cfg.kernel.gamma <= 0.0) {
    model.config.kernel.gamma = resolve_gamma(x);
  }
  const std::vector<ClassId> classes(present.begin(), present.end());
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t c = a + 1; c < classes.size(); ++c) {
      const ClassId pos = classes[a], neg = classes[c];
      std::vector<Eigen::Index> rows;
      std::vector<double> labels;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == pos || y[i] == neg) {
          rows.push_back(static_cast<Eigen::Index>(i));
          labels.push_back(y[i] == pos ? 1.0 : -1.0);
        }
      }
      Matrix sub(static_cast<Eigen::Index>(rows.size()), x.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);

      const auto pair_seed = derive_seed(seed, static_cast<std::uint64_t>(pos * kNumClasses + neg));
      auto res = smo_solve(sub, labels, model.config, pair_seed);
      if (!res.converged) {
        spdlog::warn("svm: pair ({}, {}) stopped after {} passes with KKT violation {:.3g}", pos,
                     neg, res.passes, res.max_kkt_violation);
      }

      BinarySvm m;
      m.positive = pos;
      m.negative = neg;
      m.kernel = model.config.kernel;
      m.b = res.b;
      std::vector<Eigen::Index> sv;
      for (std::size_t i = 0; i < res.alpha.size(); ++i) {
        if (res.alpha[i] > 0.0) sv.push_back(static_cast<Eigen::Index>(i));
      }
      m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
      for (std::size_t s = 0; s < sv.size(); ++s) {
        m.support_vectors.row(static_cast<Eigen::Index>(s)) = sub.row(sv[s]);
        m.coef.push_back(res.alpha[sv[s]] * labels[sv[s]]);
      }
      if (m.kernel.kind == KernelKind::linear) {
        const Vector coef = Eigen::Map<const Vector>(m.coef.data(), static_cast<Eigen::Index>(m.coef.size()));
        m.w = m.support_vectors.transpose() * coef;
      }
      model.machines.push_back(std::move(m));
      res.alpha.clear();
      res.alpha.shrink_to_fit();
      model.diagnostics.push_back(std::move(res));
    }
  }
  return model;
}

std::vector<ClassId> svm_predict(const SvmModel& model, const Matrix& x) {
  const Matrix dv = model.decision_values(x);
  std::vector<ClassId> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::array<int, kNumClasses> votes{};
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
      const auto& mc = model.machines[m];
      ++votes[dv(r, static_cast<Eigen::Index>(m)) >= 0.0 ? mc.positive : mc.negative];
    }
    out[static_cast<std::size_t>(r)] =
        static_cast<ClassId>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

std::string_view kernel_name(KernelKind kind) {
  return kind == KernelKind::linear ? "linear" : "rbf";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  throw Error("unknown kernel '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const SvmModel& model) {
  nlohmann::ordered_json j;
  j["config"] = {{"C", model.config.C},
                 {"kernel", kernel_name(model.config.kernel.kind)},
                 {"gamma", model.config.kernel.gamma},
                 {"tol", model.config.tol},
                 {"max_passes", model.config.max_passes},
                 {"max_iterations", model.config.max_iterations}};
  j["input_dim"] = model.input_dim;
  auto& machines = j["machines"] = nlohmann::ordered_json::array();
  for (const auto& m : model.machines) {
    nlohmann::ordered_json jm;
    jm["positive"] = m.positive;
    jm["negative"] = m.negative;
    jm["b"] = m.b;
    if (m.kernel.kind == KernelKind::linear) {
      jm["w"] = std::vector<double>(m.w.data(), m.w.data() + m.w.size());
    } else {
      jm["coef"] = m.coef;
      jm["support_vectors"] = std::vector<double>(
          m.support_vectors.data(), m.support_vectors.data() + m.support_vectors.size());
    }
    machines.push_back(std::move(jm));
  }
  return j;
}

SvmModel svm_from_json(const nlohmann::json& j) {
  SvmModel model;
  const auto& c = j.at("config");
  model.config.C = c.at("C").get<double>();
  model.config.kernel.kind = parse_kernel(c.at("kernel").get<std::string>());
  model.config.kernel.gamma = c.at("gamma").get<double>();
  model.config.tol = c.at("tol").get<double>();
  model.config.max_passes = c.at("max_passes").get<int>();
  model.config.max_iterations = c.at("max_iterations").get<int>();
  model.input_dim = j.at("input_dim").get<Eigen::Index>();
  for (const auto& jm : j.at("machines")) {
    BinarySvm m;
    m.positive = jm.at("positive").get<ClassId>();
    m.negative = jm.at("negative").get<ClassId>();
    m.kernel = model.config.kernel;
    m.b = jm.at("b").get<double>();
    if (m.kernel.kind == KernelKind::linear) {
      const auto w = jm.at("w").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != model.input_dim) {
        throw Error("svm model: weight vector has the wrong size");
      }
      m.w = Eigen::Map<const Vector>(w.data(), model.input_dim);
    } else {
      m.coef = jm.at("coef").get<std::vector<double>>();
      const auto sv = jm.at("support_vectors").get<std::vector<double>>();
      if (sv.size() != m.coef.size() * static_cast<std::size_t>(model.input_dim)) {
        throw Error("svm model: support vector block has the wrong size");
      }
      m.support_vectors = Eigen::Map<const Matrix>(
          sv.data(), static_cast<Eigen::Index>(m.coef.size()), model.input_dim);
    }
    model.machines.push_back(std::move(m));
  }
  return model;
}

}  // namespace tweetsat
