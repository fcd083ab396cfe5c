#pragma once

#include <Eigen/Dense>

namespace rescnet::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EigenResult {
  Vector values;   // non-increasing
  Matrix vectors;  // unit-norm columns aligned with values
};

// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
// Each eigenvector is signed so that its largest-magnitude component is
// positive (ties go to the lowest index), which makes the result
// reproducible across runs. Throws DimensionError for non-square or
// asymmetric input (relative tolerance 1e-9).
EigenResult sym_eig(const Matrix& m);

// Sample covariance of an observations-by-variables matrix (divisor n-1).
Matrix covariance(const Matrix& data);

// Solves (a + ridge*I) x = b for symmetric a.
Matrix regularized_solve(const Matrix& a, const Matrix& b, double ridge);

bool all_finite(const Matrix& m);

}  // namespace rescnet::linalg
