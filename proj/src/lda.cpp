#include "rescnet/lda.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "rescnet/errors.hpp"

namespace rescnet {

using linalg::Matrix;
using linalg::Vector;

LdaModel fit_lda(const Matrix& features, std::span<const int> labels, double ridge) {
  const Eigen::Index n = features.rows();
  const Eigen::Index dim = features.cols();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw DimensionError("fit_lda: " + std::to_string(n) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (n < 2) throw InsufficientDataError("fit_lda: need at least 2 samples");
  if (!(ridge >= 0) || !std::isfinite(ridge)) throw DomainError("fit_lda: ridge must be >= 0");

  const std::set<int> groups(labels.begin(), labels.end());
  if (groups.size() < 2) throw DegenerateLabelsError("fit_lda: need at least 2 distinct labels");

  LdaModel model;
  model.ridge = ridge;
  for (int g : groups) {
    if (g != kNegativeLabel) model.class_ids.push_back(g);
  }
  const auto classes = static_cast<Eigen::Index>(model.class_ids.size());

  // Total scatter about the global mean; each two-group within scatter is
  // S_T - (n_c n_r / N) d d^T with d = mu_c - mu_r.
  const Vector global_mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - global_mean.transpose();
  Matrix total_scatter = centered.transpose() * centered;
  total_scatter = 0.5 * (total_scatter + total_scatter.transpose());
  const Vector feature_sum = features.colwise().sum().transpose();
  const double dof = n > 2 ? static_cast<double>(n - 2) : 1.0;

  model.weights.resize(dim, classes);
  model.intercepts.resize(classes);
  for (Eigen::Index k = 0; k < classes; ++k) {
    const int cls = model.class_ids[static_cast<std::size_t>(k)];
    Vector class_sum = Vector::Zero(dim);
    Eigen::Index n_c = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == cls) {
        class_sum += features.row(i).transpose();
        ++n_c;
      }
    }
    const Eigen::Index n_r = n - n_c;
    const Vector mu_c = class_sum / static_cast<double>(n_c);
    const Vector mu_r = (feature_sum - class_sum) / static_cast<double>(n_r);
    const Vector diff = mu_c - mu_r;

    const double between = static_cast<double>(n_c) * static_cast<double>(n_r) / static_cast<double>(n);
    Matrix within = (total_scatter - between * diff * diff.transpose()) / dof;
    within = 0.5 * (within + within.transpose());
    const double shrink = ridge * std::max(within.trace(), 0.0) / static_cast<double>(dim);

    const Vector w = linalg::regularized_solve(within, diff, shrink);
    model.weights.col(k) = w;
    model.intercepts(k) = -0.5 * w.dot(mu_c + mu_r) +
                          std::log(static_cast<double>(n_c) / static_cast<double>(n_r));
  }
  if (!model.weights.allFinite() || !model.intercepts.allFinite()) {
    throw SingularityError("fit_lda: non-finite discriminant");
  }
  return model;
}

Matrix decision_scores(const LdaModel& model, const Matrix& features) {
  if (features.cols() != model.feature_dim()) {
    throw DimensionError("decision_scores: features have " + std::to_string(features.cols()) +
                         " columns, model expects " + std::to_string(model.feature_dim()));
  }
  Matrix scores = features * model.weights;
  scores.rowwise() += model.intercepts.transpose();
  return scores;
}

Matrix sigmoid_posteriors(const Matrix& scores, double scale) {
  if (!(scale > 0)) throw DomainError("sigmoid_posteriors: scale must be > 0");
  return scores.unaryExpr([scale](double x) { return 1.0 / (1.0 + std::exp(-x / scale)); });
}

Matrix softmax_posteriors(const Matrix& scores, double beta) {
  if (!(beta > 0)) throw DomainError("softmax_posteriors: beta must be > 0");
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      out(i, j) = std::exp(beta * (scores(i, j) - top));
      total += out(i, j);
    }
    out.row(i) /= total;
  }
  return out;
}

Matrix PosteriorTransform::apply(const Matrix& scores) const {
  return kind == PosteriorKind::sigmoid ? sigmoid_posteriors(scores, sigmoid_scale)
                                        : softmax_posteriors(scores, softmax_beta);
}

std::string_view to_string(PosteriorKind kind) {
  return kind == PosteriorKind::sigmoid ? "sigmoid" : "softmax";
}

PosteriorKind parse_posterior_kind(std::string_view text) {
  if (text == "sigmoid") return PosteriorKind::sigmoid;
  if (text == "softmax") return PosteriorKind::softmax;
  throw DomainError("unknown posterior transform '" + std::string(text) + "'");
}

Matrix class_posteriors(const LdaModel& model, const PosteriorTransform& transform,
                        const Matrix& features, int class_count) {
  const Matrix own = transform.apply(decision_scores(model, features));
  Matrix out = Matrix::Zero(features.rows(), class_count);
  for (std::size_t k = 0; k < model.class_ids.size(); ++k) {
    const int cls = model.class_ids[k];
    if (cls < 0 || cls >= class_count) throw DimensionError("class_posteriors: class id out of range");
    out.col(cls) = own.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace rescnet
