#include <doctest.h>

#include "rescnet/errors.hpp"
#include "rescnet/linalg.hpp"
#include "support.hpp"

using namespace rescnet;
using linalg::Matrix;

TEST_CASE("sym_eig of identity and diagonal matrices") {
  auto id = linalg::sym_eig(Matrix::Identity(2, 2));
  CHECK(id.values(0) == doctest::Approx(1.0));
  CHECK(id.values(1) == doctest::Approx(1.0));
  CHECK((id.vectors - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix d(2, 2);
  d << 2, 0, 0, 1;
  auto r = linalg::sym_eig(d);
  CHECK(r.values(0) == doctest::Approx(2.0));
  CHECK(r.values(1) == doctest::Approx(1.0));
  CHECK((r.vectors - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = test::random_symmetric(8, rng);
    auto r = linalg::sym_eig(a);
    Matrix back = r.vectors * r.values.asDiagonal() * r.vectors.transpose();
    CHECK((back - a).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(r.values.sum() - a.trace()) <= 1e-8 * std::max(1.0, std::abs(a.trace())));
    CHECK((r.vectors.transpose() * r.vectors - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <
          1e-10);
    for (Eigen::Index i = 1; i < 8; ++i) CHECK(r.values(i) <= r.values(i - 1));
    for (Eigen::Index i = 0; i < 8; ++i) {
      CHECK((a * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm() <
            1e-8 * std::max(1.0, a.norm()));
      Eigen::Index big;
      r.vectors.col(i).cwiseAbs().maxCoeff(&big);
      CHECK(r.vectors(big, i) > 0);
    }
  }
}

TEST_CASE("sym_eig rejects bad input") {
  CHECK_THROWS_AS(linalg::sym_eig(Matrix::Zero(2, 3)), DimensionError);
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(linalg::sym_eig(a), DimensionError);
}

TEST_CASE("covariance examples") {
  Matrix two(2, 2);
  two << 0, 0, 2, 2;
  Matrix expected(2, 2);
  expected << 2, 2, 2, 2;
  CHECK((linalg::covariance(two) - expected).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(3);
  Matrix data = test::random_matrix(20, 4, rng);
  data.col(2).setConstant(0.7);
  Matrix cov = linalg::covariance(data);
  for (int k = 0; k < 4; ++k) {
    CHECK(cov(2, k) == 0.0);
    CHECK(cov(k, 2) == 0.0);
    CHECK(cov(k, k) >= 0.0);
  }

  // Double-loop reference.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 20; ++i) {
        ma += data(i, a);
        mb += data(i, b);
      }
      ma /= 20;
      mb /= 20;
      double s = 0;
      for (int i = 0; i < 20; ++i) s += (data(i, a) - ma) * (data(i, b) - mb);
      CHECK(std::abs(cov(a, b) - s / 19) < 1e-12);
    }

  CHECK_THROWS_AS(linalg::covariance(Matrix::Zero(1, 3)), InsufficientDataError);
}

TEST_CASE("regularized_solve examples") {
  std::mt19937_64 rng(5);
  Matrix b = test::random_matrix(4, 3, rng);
  CHECK((linalg::regularized_solve(Matrix::Identity(4, 4), b, 0.0) - b).cwiseAbs().maxCoeff() <
        1e-14);

  Matrix half = linalg::regularized_solve(2.0 * Matrix::Identity(3, 3), Matrix::Identity(3, 3), 0);
  CHECK((half - 0.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  Matrix m = test::random_matrix(6, 6, rng);
  Matrix spd = m * m.transpose() + 0.1 * Matrix::Identity(6, 6);
  Matrix rhs = test::random_matrix(6, 2, rng);
  Matrix x = linalg::regularized_solve(spd, rhs, 0.0);
  CHECK((spd * x - rhs).norm() < 1e-8);

  CHECK_THROWS_AS(linalg::regularized_solve(Matrix::Zero(3, 3), Matrix::Ones(3, 1), 0.0),
                  SingularityError);
}

TEST_CASE("regularized_solve equals a plain solve of the shifted system") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = test::random_matrix(5, 5, rng);
    Matrix a = m * m.transpose();
    Matrix b = test::random_matrix(5, 1, rng);
    double ridge = 0.5;
    Matrix ref = (a + ridge * Matrix::Identity(5, 5)).partialPivLu().solve(b);
    CHECK((linalg::regularized_solve(a, b, ridge) - ref).cwiseAbs().maxCoeff() < 1e-9);
  }
}
