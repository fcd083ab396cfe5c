#include "rescnet/residual.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "rescnet/convolution.hpp"
#include "rescnet/errors.hpp"

namespace rescnet {

using linalg::Matrix;

Matrix compute_residual(const Matrix& y, const Matrix& y_pred, double lambda) {
  if (y.rows() != y_pred.rows() || y.cols() != y_pred.cols()) {
    throw DimensionError("compute_residual: target and prediction shapes differ");
  }
  return lambda * y - y_pred;
}

ResidualRecord derive_labels_and_signs(const Matrix& residual, std::span<const int> true_labels) {
  const auto n = static_cast<std::size_t>(residual.rows());
  if (true_labels.size() != n) throw DimensionError("derive_labels_and_signs: label count differs");
  ResidualRecord rec{residual, std::vector<int>(n), std::vector<int>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = residual.row(static_cast<Eigen::Index>(j));
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < row.size(); ++k) {
      if (std::abs(row(k)) > std::abs(row(best))) best = k;
    }
    if (row(best) == 0.0) {
      rec.labels[j] = true_labels[j];
      rec.signs[j] = 1;
    } else {
      rec.labels[j] = static_cast<int>(best);
      rec.signs[j] = row(best) > 0.0 ? 1 : -1;
    }
  }
  return rec;
}

namespace {

std::optional<LdaModel> fit_side(const Matrix& features, const ResidualRecord& record, int sign,
                                 double ridge, std::size_t& members) {
  std::vector<int> labels(record.labels.size());
  members = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (record.signs[j] == sign) {
      labels[j] = record.labels[j];
      ++members;
    } else {
      labels[j] = kNegativeLabel;
    }
  }
  if (members == 0) return std::nullopt;
  const std::set<int> groups(labels.begin(), labels.end());
  if (groups.size() == 1) {
    // Every sample is on this side and shares one class.
    LdaModel constant;
    constant.weights = Matrix::Zero(features.cols(), 1);
    constant.intercepts = linalg::Vector::Zero(1);
    constant.class_ids = {*groups.begin()};
    constant.ridge = ridge;
    return constant;
  }
  return fit_lda(features, labels, ridge);
}

Matrix side_posteriors(const std::optional<LdaModel>& model, const PosteriorTransform& transform,
                       const Matrix& features, int class_count) {
  if (!model) return Matrix::Zero(features.rows(), class_count);
  return class_posteriors(*model, transform, features, class_count);
}

Tensor4 first_input(const Tensor4& images) { return min_max_normalize(images); }

Tensor4 next_input(const Tensor4& maps, const Tensor4& images) {
  return min_max_normalize(concat_with_input(maps, images));
}

// Feature maps and posteriors of one split after some layer.
struct ChainState {
  Tensor4 maps;
  Matrix posteriors;
};

ChainState first_layer(const ResCNetModel& model, const Tensor4& images) {
  ChainState st;
  st.maps = convolve_same(first_input(images), model.first_bank);
  const Matrix features = featurize(st.maps, model.config.pooling);
  st.posteriors =
      class_posteriors(model.first_model, model.config.transform, features, model.class_count);
  return st;
}

void compensation_step(const ResCNetModel& model, const CompensationLayer& layer,
                       const Tensor4& images, ChainState& st) {
  st.maps = convolve_same(next_input(st.maps, images), layer.filter_bank);
  const Matrix features = featurize(st.maps, model.config.pooling);
  const auto& tr = model.config.transform;
  st.posteriors = combine_posteriors(
      st.posteriors, side_posteriors(layer.models.positive, tr, features, model.class_count),
      side_posteriors(layer.models.negative, tr, features, model.class_count), layer.models.n_p,
      layer.models.n_n, layer.alpha);
}

void check_input(const ResCNetModel& model, const Tensor4& images) {
  if (images.height() != model.height || images.width() != model.width ||
      images.channels() != model.channels) {
    throw DimensionError("predict: images are " + std::to_string(images.height()) + "x" +
                         std::to_string(images.width()) + "x" + std::to_string(images.channels()) +
                         ", model expects " + std::to_string(model.height) + "x" +
                         std::to_string(model.width) + "x" + std::to_string(model.channels));
  }
  if (images.count() == 0) throw DimensionError("predict: no images");
  if (model.first_bank.out_channels() == 0) throw DomainError("predict: model has no layers");
}

}  // namespace

CompensationModels fit_compensation_models(const Matrix& features, const ResidualRecord& record,
                                           double ridge) {
  if (features.rows() == 0) throw InsufficientDataError("fit_compensation_models: no samples");
  if (static_cast<std::size_t>(features.rows()) != record.labels.size() ||
      record.labels.size() != record.signs.size()) {
    throw DimensionError("fit_compensation_models: feature and record sizes differ");
  }
  CompensationModels out;
  out.positive = fit_side(features, record, 1, ridge, out.n_p);
  out.negative = fit_side(features, record, -1, ridge, out.n_n);
  return out;
}

Matrix combine_posteriors(const Matrix& prev, const Matrix& y_p, const Matrix& y_n,
                          std::size_t n_p, std::size_t n_n, double alpha) {
  if (prev.rows() != y_p.rows() || prev.cols() != y_p.cols() || prev.rows() != y_n.rows() ||
      prev.cols() != y_n.cols()) {
    throw DimensionError("combine_posteriors: shapes differ");
  }
  const double total = static_cast<double>(n_p + n_n);
  if (total == 0) throw DomainError("combine_posteriors: n_p + n_n must be positive");
  const double wp = static_cast<double>(n_p) / total;
  const double wn = static_cast<double>(n_n) / total;
  return prev + alpha * (wp * y_p - wn * y_n);
}

double lr_schedule(int layer, const LrSchedule& schedule) {
  if (schedule.decay == 0.0 || layer < 2) return schedule.alpha0;
  const int drops = (layer - 2) / schedule.period;
  const double alpha = schedule.alpha0 * std::pow(1.0 - schedule.decay, drops);
  return std::max(alpha, schedule.floor);
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(lambda >= 0.0 && lambda <= 1.0, "lambda", "must lie in [0,1]");
  require(lr.alpha0 > 0.0 && std::isfinite(lr.alpha0), "alpha0", "must be positive");
  require(lr.decay >= 0.0 && lr.decay < 1.0, "lr_decay", "must lie in [0,1)");
  require(lr.period >= 1, "lr_period", "must be >= 1");
  require(lr.floor >= 0.0 && lr.floor <= lr.alpha0, "lr_floor", "must lie in [0, alpha0]");
  require(max_layers >= 1, "max_layers", "must be >= 1");
  for (const auto* fs : {&first_filters, &rest_filters}) {
    const bool first = fs == &first_filters;
    require(fs->patch_size >= 1, first ? "filter_size_first" : "filter_size_rest", "must be >= 1");
    require(fs->count >= 1, "filters_per_layer", "must be >= 1");
    require(fs->mix_ratio >= 0.0 && fs->mix_ratio <= 1.0, "mix_ratio", "must lie in [0,1]");
    require(fs->n_positives >= 1, "n_positives", "must be >= 1");
    require(fs->n_negatives >= 1, "n_negatives", "must be >= 1");
    require(fs->tol >= 0.0 && fs->tol <= 1.0, "tol", "must lie in [0,1]");
    require(fs->max_attempts_per_filter >= 1, "max_attempts", "must be >= 1");
    require(fs->max_patches >= 2, "max_patches", "must be >= 2");
  }
  require(pooling.block_rows >= 1 && pooling.block_cols >= 1 &&
              pooling.block_rows * pooling.block_cols >= 2,
          "sop_block", "must cover at least 2 pixels");
  require(pooling.stride >= 1, "sop_stride", "must be >= 1");
  require(!pooling.levels.empty(), "pyramid_levels", "must list at least one level");
  for (const auto& [r, c] : pooling.levels) require(r >= 1 && c >= 1, "pyramid_levels", "must be >= 1");
  require(transform.sigmoid_scale > 0.0, "sigmoid_scale", "must be positive");
  require(transform.softmax_beta > 0.0, "softmax_beta", "must be positive");
  require(ridge >= 0.0, "ridge", "must be >= 0");
  require(patience >= 0, "patience", "must be >= 0");
}

std::vector<int> argmax_rows(const Matrix& posteriors) {
  std::vector<int> out(static_cast<std::size_t>(posteriors.rows()));
  for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
    Eigen::Index best = 0;
    posteriors.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw DimensionError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Prediction predict(const ResCNetModel& model, const Tensor4& images, std::size_t depth) {
  check_input(model, images);
  if (depth == 0) depth = model.depth();
  if (depth > model.depth()) {
    throw DomainError("predict: depth " + std::to_string(depth) + " exceeds model depth " +
                      std::to_string(model.depth()));
  }
  ChainState st = first_layer(model, images);
  for (std::size_t i = 0; i + 1 < depth; ++i) compensation_step(model, model.compensation[i], images, st);
  return {argmax_rows(st.posteriors), std::move(st.posteriors)};
}

std::vector<Matrix> predict_all_depths(const ResCNetModel& model, const Tensor4& images) {
  check_input(model, images);
  std::vector<Matrix> out;
  ChainState st = first_layer(model, images);
  out.push_back(st.posteriors);
  for (const auto& layer : model.compensation) {
    compensation_step(model, layer, images, st);
    out.push_back(st.posteriors);
  }
  return out;
}

double evaluate(const ResCNetModel& model, const ImageSet& set) {
  return accuracy(predict(model, set.images).labels, set.labels);
}

TrainingSession::TrainingSession(ImageSet train, TrainConfig config,
                                 std::optional<ImageSet> validation) {
  config.validate();
  rescnet::validate(train);
  model_.height = train.images.height();
  model_.width = train.images.width();
  model_.channels = train.images.channels();
  model_.class_count = train.class_count;
  model_.config = std::move(config);
  targets_ = one_hot(train.labels, train.class_count);
  train_.set = std::move(train);
  if (validation) {
    rescnet::validate(*validation);
    validation_ = SplitState{std::move(*validation), {}, {}};
  }
}

TrainingSession::TrainingSession(ResCNetModel model, ImageSet train,
                                 std::optional<ImageSet> validation)
    : TrainingSession(std::move(train), model.config, std::move(validation)) {
  if (model_.height != model.height || model_.width != model.width ||
      model_.channels != model.channels || model_.class_count != model.class_count) {
    throw DimensionError("TrainingSession: training data does not match the model");
  }
  model_ = std::move(model);
  replay();
}

void TrainingSession::replay() {
  if (model_.progress.empty()) return;
  auto run_chain = [&](SplitState& split) {
    ChainState st = first_layer(model_, split.set.images);
    for (const auto& layer : model_.compensation) compensation_step(model_, layer, split.set.images, st);
    split.maps = std::move(st.maps);
    split.posteriors = std::move(st.posteriors);
  };
  run_chain(train_);
  if (validation_) run_chain(*validation_);
}

std::uint64_t TrainingSession::layer_seed(std::size_t layer) const {
  std::seed_seq seq{static_cast<std::uint32_t>(model_.config.seed),
                    static_cast<std::uint32_t>(model_.config.seed >> 32),
                    static_cast<std::uint32_t>(layer)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

const ProgressRecord& TrainingSession::add_layer() {
  const auto& cfg = model_.config;
  const auto& labels = train_.set.labels;
  const Tensor4& images = train_.set.images;
  const int layer = static_cast<int>(model_.progress.size()) + 1;
  ProgressRecord rec;
  rec.layer = layer;

  if (layer == 1) {
    const Tensor4 input = first_input(images);
    model_.first_bank = learn_filter_bank(input, labels, cfg.first_filters, layer_seed(1));
    const Tensor4 maps = convolve_same(input, model_.first_bank);
    const Matrix features = featurize(maps, cfg.pooling);
    model_.first_model = fit_lda(features, labels, cfg.ridge);
    rec.alpha = 1.0;
    rec.n_p = labels.size();
    rec.n_n = 0;
  } else {
    const Tensor4 input = next_input(train_.maps, images);
    CompensationLayer comp;
    comp.filter_bank = learn_filter_bank(input, labels, cfg.rest_filters, layer_seed(layer));
    const Tensor4 maps = convolve_same(input, comp.filter_bank);
    const Matrix features = featurize(maps, cfg.pooling);
    const ResidualRecord residual =
        derive_labels_and_signs(compute_residual(targets_, train_.posteriors, cfg.lambda), labels);
    comp.models = fit_compensation_models(features, residual, cfg.ridge);
    comp.alpha = lr_schedule(layer, cfg.lr);
    rec.alpha = comp.alpha;
    rec.n_p = comp.models.n_p;
    rec.n_n = comp.models.n_n;
    model_.compensation.push_back(std::move(comp));
  }

  // Advance both splits with the same code path prediction uses, so a
  // replayed model reproduces these posteriors exactly.
  auto advance = [&](SplitState& split) {
    if (layer == 1) {
      ChainState st = first_layer(model_, split.set.images);
      split.maps = std::move(st.maps);
      split.posteriors = std::move(st.posteriors);
    } else {
      ChainState st{std::move(split.maps), std::move(split.posteriors)};
      compensation_step(model_, model_.compensation.back(), split.set.images, st);
      split.maps = std::move(st.maps);
      split.posteriors = std::move(st.posteriors);
    }
  };
  advance(train_);
  rec.train_accuracy = accuracy(argmax_rows(train_.posteriors), labels);
  if (validation_) {
    advance(*validation_);
    rec.val_accuracy = accuracy(argmax_rows(validation_->posteriors), validation_->set.labels);
  }
  model_.progress.push_back(rec);
  return model_.progress.back();
}

bool TrainingSession::should_stop() const {
  const auto& cfg = model_.config;
  if (model_.progress.empty()) return false;
  if (cfg.stop_at_zero_train_error && model_.progress.back().train_accuracy == 1.0) return true;
  if (cfg.patience > 0) {
    std::size_t best = 0;
    double best_acc = -1.0;
    for (std::size_t i = 0; i < model_.progress.size(); ++i) {
      const auto& v = model_.progress[i].val_accuracy;
      if (v && *v > best_acc) {
        best_acc = *v;
        best = i;
      }
    }
    if (best_acc >= 0.0 && model_.progress.size() - 1 - best >= static_cast<std::size_t>(cfg.patience)) {
      return true;
    }
  }
  return false;
}

void TrainingSession::run(std::size_t target_depth, const ProgressSink& on_layer) {
  while (model_.progress.size() < target_depth && !should_stop()) {
    const ProgressRecord& rec = add_layer();
    if (on_layer) on_layer(rec);
  }
}

ResCNetModel train(const ImageSet& train_set, const TrainConfig& config,
                   const ProgressSink& progress, const std::optional<ImageSet>& validation) {
  TrainingSession session(train_set, config, validation);
  session.run(static_cast<std::size_t>(config.max_layers), progress);
  return std::move(session.model());
}

}  // namespace rescnet
