#include <doctest.h>

#include <numeric>

#include "rescnet/errors.hpp"
#include "rescnet/filter_bank.hpp"
#include "support.hpp"

using namespace rescnet;
using linalg::Matrix;
using linalg::Vector;

namespace {

PatchMatrix wrap(Matrix data, int k, int c) {
  PatchMatrix p;
  p.data = std::move(data);
  p.patch_size = k;
  p.in_channels = c;
  p.per_image = static_cast<std::size_t>(p.data.cols());
  p.source.assign(p.per_image, 0);
  return p;
}

// Brute-force reference: eigenvectors of the centred scatter, signed so the
// largest-magnitude entry is positive.
Matrix reference_pca(const Matrix& patches, int count) {
  Matrix centred = patches.colwise() - patches.rowwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> es(centred * centred.transpose());
  const auto d = patches.rows();
  Matrix out(d, count);
  for (int i = 0; i < count; ++i) {
    Vector v = es.eigenvectors().col(d - 1 - i);
    Eigen::Index big = 0;
    for (Eigen::Index r = 1; r < d; ++r)
      if (std::abs(v(r)) > std::abs(v(big)) + 1e-12) big = r;
    out.col(i) = v(big) < 0 ? Vector(-v) : v;
  }
  return out;
}

}  // namespace

TEST_CASE("extract_patches counts and layout") {
  Tensor4 img(4, 4, 1, 1);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 4; ++r) img(r, c, 0, 0) = static_cast<double>(10 * r + c);
  auto p = extract_patches(img, 3);
  CHECK(p.data.cols() == 4);
  CHECK(p.data.rows() == 9);
  CHECK(p.per_image == 4);
  // Column 1 starts at (row 1, col 0); entry dr + 3*dc.
  CHECK(p.data(0, 1) == 10.0);
  CHECK(p.data(2 + 3 * 1, 1) == 31.0);

  Tensor4 mnist(28, 28, 1, 2);
  auto big = extract_patches(mnist, 13);
  CHECK(big.per_image == 256);
  CHECK(big.data.cols() == 512);
  CHECK(big.source[300] == 1);

  std::mt19937_64 rng(1);
  auto rand_img = test::random_tensor(28, 28, 1, 1, rng);
  auto a = extract_patches(rand_img, 13, 10, 42);
  auto b = extract_patches(rand_img, 13, 10, 42);
  CHECK(a.data.cols() == 10);
  CHECK(a.data == b.data);

  auto multi = test::random_tensor(7, 5, 3, 4, rng);
  CHECK(extract_patches(multi, 3).data.cols() == 5 * 3 * 4);
  auto cp = extract_patches(multi, 3);
  // Channel stride in the vectorization is k*k.
  CHECK(cp.data(1 + 3 * 2 + 9 * 2, 0) == multi(1, 2, 2, 0));
  CHECK_THROWS_AS(extract_patches(multi, 6), DimensionError);
}

TEST_CASE("PCA recovers axis-aligned directions") {
  // Variance 9 along axis 2, 4 along axis 0, 1 along axis 1.
  Matrix data = Matrix::Zero(3, 6);
  data(2, 0) = 3;
  data(2, 1) = -3;
  data(0, 2) = 2;
  data(0, 3) = -2;
  data(1, 4) = 1;
  data(1, 5) = -1;
  auto bank = fit_pca_filters(wrap(data, 1, 3), 3);
  CHECK(std::abs(bank.kernels(2, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(bank.kernels(0, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(bank.kernels(1, 2)) == doctest::Approx(1.0));
  CHECK(bank.bias.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bank.provenance == Provenance::pca);
}

TEST_CASE("PCA matches the brute-force eigen reference") {
  std::mt19937_64 rng(21);
  Matrix data = test::random_matrix(27, 500, rng);
  // Anisotropic so eigenvalues are well separated.
  for (Eigen::Index r = 0; r < 27; ++r) data.row(r) *= 1.0 + 0.3 * r;
  auto bank = fit_pca_filters(wrap(data, 3, 3), 8);
  Matrix ref = reference_pca(data, 8);
  CHECK((bank.kernels - ref).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((bank.kernels.transpose() * bank.kernels - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <
        1e-8);

  std::vector<Eigen::Index> perm(500);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(27, 500);
  for (Eigen::Index j = 0; j < 500; ++j) shuffled.col(j) = data.col(perm[j]);
  auto again = fit_pca_filters(wrap(shuffled, 3, 3), 8);
  CHECK((again.kernels - bank.kernels).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(fit_pca_filters(wrap(test::random_matrix(27, 5, rng), 3, 3), 8),
                  InsufficientDataError);
}

TEST_CASE("stacked-LDA on separable clusters") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  const int per_class = 60;
  Matrix data(9, 3 * per_class);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i) {
      auto j = c * per_class + i;
      for (int r = 0; r < 9; ++r) data(r, j) = noise(rng) + (r % 3 == c ? 5.0 : 0.0);
      labels.push_back(c);
    }
  auto patches = wrap(data, 3, 1);
  StackedLdaParams params;
  params.n_classes = 6;
  params.n_positives = 2;
  params.n_negatives = 16;
  params.rng_seed = 99;
  StackedLdaReport report;
  auto bank = fit_stacked_lda_filters(patches, labels, params, &report);
  CHECK(bank.out_channels() == 6);
  CHECK(bank.provenance == Provenance::stacked_lda);
  REQUIRE(report.accepted_samples.size() == 6);
  for (int f = 0; f < 6; ++f) {
    const auto& idx = report.accepted_samples[static_cast<std::size_t>(f)];
    CHECK(idx.size() == 18);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double score = data.col(static_cast<Eigen::Index>(idx[i])).dot(bank.kernels.col(f)) + bank.bias(f);
      if (i < 2) CHECK(score > 0.0);
      else CHECK(score < 0.0);
    }
  }

  params.tol = 1.0;
  params.n_classes = 3;
  auto vacuous = fit_stacked_lda_filters(patches, labels, params, &report);
  for (int a : report.attempts) CHECK(a == 1);
  CHECK(vacuous.out_channels() == 3);
}

TEST_CASE("stacked-LDA raises on inseparable data") {
  Matrix same = Matrix::Constant(9, 40, 0.25);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  StackedLdaParams params;
  params.n_negatives = 8;
  params.max_attempts_per_filter = 10;
  try {
    fit_stacked_lda_filters(wrap(same, 3, 1), labels, params);
    FAIL("expected NonSeparableError");
  } catch (const NonSeparableError& e) {
    CHECK(e.attempts() == 10);
    CHECK(e.filter_index() == 0);
  }
}

TEST_CASE("mix_filter_banks") {
  std::mt19937_64 rng(6);
  FilterBank a{3, 1, test::random_matrix(9, 50, rng), Vector::Constant(50, 1.0), Provenance::stacked_lda};
  FilterBank b{3, 1, test::random_matrix(9, 50, rng), Vector::Zero(50), Provenance::pca};
  auto half = mix_filter_banks(a, b, 0.5, 50);
  CHECK(half.out_channels() == 50);
  CHECK(half.provenance == Provenance::mixed);
  CHECK(half.kernels.leftCols(25) == a.kernels.leftCols(25));
  CHECK(half.kernels.rightCols(25) == b.kernels.leftCols(25));
  CHECK(half.bias.head(25) == a.bias.head(25));
  CHECK(half.bias.tail(25) == b.bias.head(25));

  auto only_b = mix_filter_banks(a, b, 0.0, 50);
  CHECK(only_b.kernels == b.kernels);
  auto only_a = mix_filter_banks(a, b, 1.0, 20);
  CHECK(only_a.kernels == a.kernels.leftCols(20));

  FilterBank wrong{5, 1, test::random_matrix(25, 4, rng), Vector::Zero(4), Provenance::pca};
  CHECK_THROWS_AS(mix_filter_banks(a, wrong, 0.5, 4), DimensionError);
}

TEST_CASE("learn_filter_bank builds each kind") {
  auto set = test::synthetic_images(6, 3, 8, 3);
  for (auto kind : {FilterKind::pca, FilterKind::stacked_lda, FilterKind::mixed}) {
    FilterSpec spec;
    spec.kind = kind;
    spec.patch_size = 3;
    spec.count = 4;
    spec.n_negatives = 8;
    spec.tol = 0.5;
    auto bank = learn_filter_bank(set.images, set.labels, spec, 17);
    CHECK(bank.out_channels() == 4);
    CHECK(bank.patch_size == 3);
    CHECK(linalg::all_finite(bank.kernels));
    auto again = learn_filter_bank(set.images, set.labels, spec, 17);
    CHECK(again.kernels == bank.kernels);
  }
}
