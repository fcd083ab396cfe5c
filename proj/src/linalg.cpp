#include "rescnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rescnet/errors.hpp"

namespace rescnet::linalg {

namespace {

void require_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DimensionError(std::string(who) + ": matrix is not symmetric");
  }
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

EigenResult sym_eig(const Matrix& m) {
  if (m.rows() == 0) throw DimensionError("sym_eig: empty matrix");
  require_symmetric(m, "sym_eig");
  // Symmetrize so round-off asymmetry cannot leak into the solver.
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw SingularityError("sym_eig: solver did not converge");

  const auto n = sym.rows();
  // Descending order; exactly equal eigenvalues keep the solver's order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });
  EigenResult out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = solver.eigenvalues()(src);
    Vector v = solver.eigenvectors().col(src);
    Eigen::Index lead = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
      if (std::abs(v(j)) > std::abs(v(lead))) lead = j;
    }
    if (v(lead) < 0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

Matrix covariance(const Matrix& data) {
  if (data.rows() < 2) {
    throw InsufficientDataError("covariance: need at least 2 observations, got " +
                                std::to_string(data.rows()));
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

Matrix regularized_solve(const Matrix& a, const Matrix& b, double ridge) {
  if (ridge < 0 || !std::isfinite(ridge)) throw DomainError("regularized_solve: ridge must be >= 0");
  require_symmetric(a, "regularized_solve");
  if (b.rows() != a.rows()) {
    throw DimensionError("regularized_solve: rhs has " + std::to_string(b.rows()) +
                         " rows, system has " + std::to_string(a.rows()));
  }
  Matrix system = a;
  system.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(system);
  const Vector d = ldlt.vectorD().cwiseAbs();
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(a.rows()) * dmax;
  if (ldlt.info() != Eigen::Success || dmax == 0.0 || d.minCoeff() <= tol) {
    throw SingularityError("regularized_solve: system is singular (ridge " +
                           std::to_string(ridge) + ")");
  }
  Matrix x = ldlt.solve(b);
  if (!x.allFinite()) throw SingularityError("regularized_solve: non-finite solution");
  return x;
}

}  // namespace rescnet::linalg
