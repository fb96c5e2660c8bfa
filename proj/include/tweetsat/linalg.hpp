#pragma once

#include <vector>

#include <Eigen/Core>

namespace tweetsat {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
// Flat parameter storage. The aligned allocator fixes the SIMD alignment of
// every Map over it, which keeps floating-point summation order, and so the
// results, identical from run to run.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

struct SymmetricEigen {
  // Sorted non-increasing.
  Vector values;
  // Column i is the unit eigenvector for values[i].
  Matrix vectors;
  int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix. Stops once the off-diagonal
// Frobenius norm falls below tol * ||A||_F or after max_sweeps.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tol = 1e-15, int max_sweeps = 100);

// Sample covariance with divisor n - 1.
Matrix covariance(const Matrix& x, const Vector& mean);

}  // namespace tweetsat
