#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tweetsat/corpus.hpp"
#include "tweetsat/linalg.hpp"

namespace tweetsat {

enum class KernelKind { linear, rbf };

struct Kernel {
  KernelKind kind = KernelKind::linear;
  // rbf only: exp(-gamma * |a - b|^2). Non-positive means "derive from the
  // training data" as 1 / (features * var(X)).
  double gamma = 0.0;

  double operator()(const double* a, const double* b, Eigen::Index dim) const;
};

struct SvmConfig {
  double C = 10.0;
  Kernel kernel;
  double tol = 1e-3;
  // Stop after this many consecutive full passes without an update.
  int max_passes = 10;
  // Hard cap on full passes over the data.
  int max_iterations = 50000;

  void validate() const;
};

// Result of one binary C-SVC dual solve, labels in {-1, +1}.
struct SmoResult {
  std::vector<double> alpha;
  double b = 0.0;
  // Primal weights; filled for the linear kernel only.
  Vector w;
  double dual_objective = 0.0;
  // Dual objective after every successful pair update (starts at 0 for alpha = 0).
  std::vector<double> objective_trace;
  double max_kkt_violation = 0.0;
  bool converged = false;
  bool monotone = true;
  long updates = 0;
  int passes = 0;
};

// Simplified SMO: the first index sweeps KKT violators, the second is drawn
// at random (seeded); when that pair cannot move, further partners are tried
// from a random offset.
SmoResult smo_solve(const Matrix& x, std::span<const double> y, const SvmConfig& cfg,
                    std::uint64_t seed);

// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)
double dual_objective(const Matrix& x, std::span<const double> y, std::span<const double> alpha,
                      const Kernel& kernel);

// Largest violation of the box-constrained KKT conditions, measured on
// y_i f(x_i) - 1 for the decision function with bias b.
double max_kkt_violation(const Matrix& x, std::span<const double> y, std::span<const double> alpha,
                         double b, double C, const Kernel& kernel);

struct BinarySvm {
  ClassId positive = 0;  // decision >= 0 votes for this class
  ClassId negative = 1;
  Kernel kernel;
  Matrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double b = 0.0;
  Vector w;  // linear kernel only

  double decision(const double* x, Eigen::Index dim) const;
};

struct SvmModel {
  SvmConfig config;
  Eigen::Index input_dim = 0;
  std::vector<BinarySvm> machines;
  // Per-machine solver diagnostics, same order as machines.
  std::vector<SmoResult> diagnostics;

  Matrix decision_values(const Matrix& x) const;
};

// One-vs-one over every pair of classes present in y.
SvmModel svm_train(const Matrix& x, std::span<const ClassId> y, const SvmConfig& cfg,
                   std::uint64_t seed);
// Pairwise vote; ties go to the lowest class id.
std::vector<ClassId> svm_predict(const SvmModel& model, const Matrix& x);

nlohmann::ordered_json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);

std::string_view kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

}  // namespace tweetsat
