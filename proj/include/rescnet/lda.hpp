#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "rescnet/linalg.hpp"

namespace rescnet {

// Shrinkage applied to within-class scatter, relative to trace(S_w)/F.
inline constexpr double kDefaultRidge = 1e-4;

// Samples carrying this label take part in every one-vs-all problem as a
// negative only and get no output column.
inline constexpr int kNegativeLabel = -1;

// One linear score per class: scores = X * weights + intercepts.
struct LdaModel {
  linalg::Matrix weights;     // feature_dim x classes
  linalg::Vector intercepts;  // classes
  std::vector<int> class_ids;
  double ridge = kDefaultRidge;

  Eigen::Index feature_dim() const { return weights.rows(); }
};

// One-versus-all linear discriminants.
//
// For every class c the samples split into c and "rest" (all other labels,
// including kNegativeLabel). The pooled two-group covariance S_w (divisor
// N-2) is shrunk to S_w + ridge*trace(S_w)/F*I and
//   w_c = S_w^-1 (mu_c - mu_rest),
//   b_c = -w_c . (mu_c + mu_rest)/2 + log(n_c / n_rest),
// so a positive score means c is the more likely side.
//
// Throws DegenerateLabelsError when fewer than two label groups exist and
// SingularityError when the shrunk scatter is still singular.
LdaModel fit_lda(const linalg::Matrix& features, std::span<const int> labels,
                 double ridge = kDefaultRidge);

// N x classes, columns in class_ids order.
linalg::Matrix decision_scores(const LdaModel& model, const linalg::Matrix& features);

// Elementwise 1 / (1 + exp(-x/scale)).
linalg::Matrix sigmoid_posteriors(const linalg::Matrix& scores, double scale);

// Row-wise exp(beta*y_i) / sum_j exp(beta*y_j), max-subtracted.
linalg::Matrix softmax_posteriors(const linalg::Matrix& scores, double beta);

enum class PosteriorKind { sigmoid, softmax };

struct PosteriorTransform {
  PosteriorKind kind = PosteriorKind::sigmoid;
  double sigmoid_scale = 16.0;
  double softmax_beta = 0.001;

  linalg::Matrix apply(const linalg::Matrix& scores) const;
  friend bool operator==(const PosteriorTransform&, const PosteriorTransform&) = default;
};

std::string_view to_string(PosteriorKind kind);
PosteriorKind parse_posterior_kind(std::string_view text);

// Scores the model, applies the transform over the model's own classes and
// scatters the result into an N x class_count matrix. Classes the model has
// no column for get 0.
linalg::Matrix class_posteriors(const LdaModel& model, const PosteriorTransform& transform,
                                const linalg::Matrix& features, int class_count);

}  // namespace rescnet
